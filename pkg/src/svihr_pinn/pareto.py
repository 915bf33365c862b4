"""Dominance filtering and bisection-enhanced dichotomic search (BEDS).

Outcome vectors are stored as ``(f_residual, f_data) = (mse_f, mse_u)``,
matching the plot axes (x = residual loss, y = data loss). The weight
``alpha`` always multiplies the data loss.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

from .errors import ConfigError, DuplicateOutcomesError, ExhaustedIntervalError, NumericalError

__all__ = [
    "OutcomePoint",
    "FrontApprox",
    "BedsConfig",
    "dominates",
    "filter_nondominated",
    "next_alpha",
    "bisection_fallback",
    "beds_run",
    "select_knee",
    "write_front_csv",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OutcomePoint:
    alpha: float
    y: tuple  # (f_residual, f_data)
    run_id: str = ""
    level: int = 0
    status: str = "ok"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.status == "ok":
            if len(self.y) != 2 or not all(math.isfinite(v) and v >= 0 for v in self.y):
                raise ValueError(f"objectives must be finite and >= 0, got {self.y}")

    @property
    def f_residual(self):
        return self.y[0]

    @property
    def f_data(self):
        return self.y[1]


@dataclass(frozen=True)
class BedsConfig:
    levels: int = 4
    alpha1: float = 0.9
    alpha2: float = 0.999
    fail_hi: float = 0.998
    fail_lo: float = 0.8

    def __post_init__(self):
        if int(self.levels) != self.levels or self.levels < 1:
            raise ConfigError("levels must be an integer >= 1")
        if not 0.0 < self.alpha1 < self.alpha2 <= 1.0:
            raise ConfigError("need 0 < alpha1 < alpha2 <= 1")
        if not self.fail_lo < self.fail_hi:
            raise ConfigError("need fail_lo < fail_hi")


@dataclass
class FrontApprox:
    candidates: list = field(default_factory=list)
    evaluated: list = field(default_factory=list)
    level: int = 0

    @property
    def evaluated_alphas(self):
        return sorted({pt.alpha for pt in self.evaluated})

    def by_level(self, level):
        """Nondominated points among everything trained up to ``level``."""
        return filter_nondominated([pt for pt in self.evaluated if pt.status == "ok" and pt.level <= level])


def dominates(a, b):
    """True if ``a`` is no worse than ``b`` in both objectives and better in one."""
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


def _key(pt):
    y = pt.y if isinstance(pt, OutcomePoint) else pt
    return (y[1], y[0])


def filter_nondominated(points):
    """Mutually nondominated subset, ordered by ``f_data`` then ``f_residual``.

    Exact duplicates do not dominate each other and are all kept. Works on
    :class:`OutcomePoint` or raw pairs.
    """
    ordered = sorted(points, key=_key)
    out = []
    best_res = math.inf
    last = None
    for pt in ordered:
        y = tuple(pt.y if isinstance(pt, OutcomePoint) else pt)
        if y[0] < best_res:
            out.append(pt)
            best_res = y[0]
            last = y
        elif y == last:
            out.append(pt)
    return out


def next_alpha(prev, nxt):
    """Weight whose normal ``(alpha, 1 - alpha)`` is orthogonal to the segment.

    ``prev`` must have the smaller data loss (and hence the larger residual
    loss). Weights act on ``(f_data, f_residual)``.
    """
    drop = prev.y[0] - nxt.y[0]
    rise = nxt.y[1] - prev.y[1]
    if drop == 0 and rise == 0:
        raise DuplicateOutcomesError("duplicate outcomes")
    return drop / (rise + drop)


def bisection_fallback(alpha_a, alpha_b):
    if alpha_a == alpha_b:
        raise ExhaustedIntervalError("exhausted interval")
    return 0.5 * (alpha_a + alpha_b)


def _seen(alpha, alphas):
    return any(math.isclose(alpha, a, rel_tol=1e-12, abs_tol=1e-15) for a in alphas)


def beds_run(config, trainer):
    """Approximate the Pareto front with weighted-sum training runs.

    ``trainer(alpha)`` returns ``(mse_f, mse_u)`` or an :class:`OutcomePoint`
    and may raise :class:`~svihr_pinn.errors.NumericalError` on divergence.
    Level 1 trains ``alpha1`` and ``alpha2``; each further level trains one
    weight per adjacent pair of the current front, replacing weights outside
    ``[fail_lo, fail_hi]`` by the midpoint of the pair's weights. Results are
    cached by weight, so no weight is trained twice.
    """
    front = FrontApprox()
    cache = {}
    run_counter = [0]

    def evaluate(alpha, level):
        run_id = f"run{run_counter[0]:03d}"
        run_counter[0] += 1
        try:
            res = trainer(alpha)
            y = res.y if isinstance(res, OutcomePoint) else tuple(float(v) for v in res)
            pt = OutcomePoint(alpha, y, run_id, level, "ok")
        except (NumericalError, ValueError) as exc:
            log.warning("training failed for alpha=%r: %s", alpha, exc)
            pt = OutcomePoint(alpha, (math.nan, math.nan), run_id, level, "failed")
        cache[alpha] = pt
        front.evaluated.append(pt)
        return pt

    pending = [(config.alpha1, None), (config.alpha2, None)]
    for level in range(1, config.levels + 1):
        front.level = level
        for alpha, parents in pending:
            if _seen(alpha, cache):
                continue
            pt = evaluate(alpha, level)
            if pt.status == "failed" and parents is not None:
                refill = _refill(alpha, parents)
                if refill is not None and not _seen(refill, cache):
                    evaluate(refill, level)
        front.candidates = filter_nondominated([pt for pt in cache.values() if pt.status == "ok"])
        if level == config.levels:
            break
        pending = []
        cands = front.candidates
        for prev, nxt in zip(cands, cands[1:]):
            try:
                a = next_alpha(prev, nxt)
            except DuplicateOutcomesError:
                continue
            parents = (min(prev.alpha, nxt.alpha), max(prev.alpha, nxt.alpha))
            if a > config.fail_hi or a < config.fail_lo:
                try:
                    a = bisection_fallback(*parents)
                except ExhaustedIntervalError:
                    continue
            if not _seen(a, cache) and not _seen(a, [x for x, _ in pending]):
                pending.append((a, parents))
        pending.sort()
        if not pending:
            break
    return front


def _refill(alpha, parents):
    lo, hi = parents
    try:
        mid = bisection_fallback(lo, hi)
    except ExhaustedIntervalError:
        return None
    if not math.isclose(mid, alpha, rel_tol=1e-12):
        return mid
    # the failed weight was already the midpoint: bisect its lower half
    try:
        return bisection_fallback(lo, alpha)
    except ExhaustedIntervalError:
        return None


def select_knee(points):
    """Point closest to the ideal point after min-max normalization of each objective.

    Returns ``(point, rule)`` where ``rule`` describes the normalization.
    """
    pts = [pt for pt in points if pt.status == "ok"]
    if not pts:
        raise ValueError("no points to choose from")
    lo = [min(pt.y[k] for pt in pts) for k in (0, 1)]
    hi = [max(pt.y[k] for pt in pts) for k in (0, 1)]

    def dist(pt):
        z = [(pt.y[k] - lo[k]) / (hi[k] - lo[k]) if hi[k] > lo[k] else 0.0 for k in (0, 1)]
        return math.hypot(*z)

    best = min(pts, key=lambda pt: (dist(pt), pt.alpha))
    rule = {
        "rule": "minimum Euclidean distance to the ideal point (per-objective minimum) "
                "after min-max normalization of mse_f and mse_u over the candidates",
        "ideal": {"mse_f": lo[0], "mse_u": lo[1]},
        "nadir": {"mse_f": hi[0], "mse_u": hi[1]},
        "distance": dist(best),
    }
    return best, rule


def write_front_csv(points, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("alpha", "mse_f", "mse_u", "run_id", "level", "status"))
        for pt in sorted(points, key=lambda q: q.alpha):
            w.writerow(("%.17g" % pt.alpha, "%.17g" % pt.y[0], "%.17g" % pt.y[1], pt.run_id, pt.level, pt.status))
