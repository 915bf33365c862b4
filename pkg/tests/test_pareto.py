import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svihr_pinn.cli import toy_trainer
from svihr_pinn.errors import DuplicateOutcomesError, ExhaustedIntervalError, TrainingDivergedError
from svihr_pinn.pareto import (
    BedsConfig,
    OutcomePoint,
    beds_run,
    bisection_fallback,
    dominates,
    filter_nondominated,
    next_alpha,
    select_knee,
    write_front_csv,
)


def _y(p):
    return p.y if isinstance(p, OutcomePoint) else p


def brute_force_front(points):
    return [p for p in points if not any(dominates(_y(q), _y(p)) for q in points)]


def test_dominates_examples():
    assert dominates((1, 1), (2, 2))
    assert not dominates((1, 2), (2, 1)) and not dominates((2, 1), (1, 2))
    assert not dominates((1, 1), (1, 1))
    assert dominates((1, 1), (1, 2))


def test_filter_example():
    pts = [(0.5, 4), (1, 2), (3, 1), (1.5, 2.5), (2, 3)]
    assert sorted(filter_nondominated(pts)) == [(0.5, 4), (1, 2), (3, 1)]


def test_filter_singleton_and_empty():
    assert filter_nondominated([(1.0, 2.0)]) == [(1.0, 2.0)]
    assert filter_nondominated([]) == []


def test_filter_keeps_exact_duplicates():
    pts = [(1.0, 1.0), (1.0, 1.0), (2.0, 2.0)]
    assert filter_nondominated(pts) == [(1.0, 1.0), (1.0, 1.0)]


coords = st.integers(0, 8).map(float) | st.floats(0, 10, allow_nan=False)


@settings(max_examples=300)
@given(st.lists(st.tuples(coords, coords), max_size=30))
def test_filter_matches_brute_force(pts):
    assert sorted(filter_nondominated(pts)) == sorted(brute_force_front(pts))


@settings(max_examples=100)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=30))
def test_filtered_front_is_monotone(pts):
    front = filter_nondominated(pts)
    distinct = sorted(set(front), key=lambda y: y[1])
    # ordered by f_data ascending, f_residual strictly descends
    for a, b in zip(distinct, distinct[1:]):
        assert a[1] < b[1] and a[0] > b[0]


def test_filter_accepts_outcome_points():
    pts = [OutcomePoint(0.9, (1.0, 3.0)), OutcomePoint(0.95, (2.0, 4.0)), OutcomePoint(0.99, (3.0, 1.0))]
    assert [p.alpha for p in filter_nondominated(pts)] == [0.99, 0.9]


def _pt(alpha, f_res, f_data):
    return OutcomePoint(alpha, (f_res, f_data))


def test_next_alpha_symmetric():
    assert next_alpha(_pt(0.9, 3, 1), _pt(0.95, 1, 3)) == 0.5


def test_next_alpha_orthogonality():
    prev, nxt = _pt(0.9, 4, 1), _pt(0.95, 1, 3)
    a = next_alpha(prev, nxt)
    assert a == pytest.approx(0.6, rel=1e-15)
    d_data = nxt.f_data - prev.f_data
    d_res = nxt.f_residual - prev.f_residual
    assert abs(a * d_data + (1 - a) * d_res) < 1e-12


def test_next_alpha_published_pair_exceeds_guard():
    prev = _pt(1.0, 0.2176, 7.495e-5)
    nxt = _pt(0.994, 0.0471, 7.599e-5)
    a = next_alpha(prev, nxt)
    assert a == pytest.approx(0.9999939, abs=1e-7)
    assert a > BedsConfig().fail_hi


def test_next_alpha_duplicate():
    with pytest.raises(DuplicateOutcomesError, match="duplicate outcomes"):
        next_alpha(_pt(0.9, 1, 1), _pt(0.95, 1, 1))


def test_bisection_examples():
    assert bisection_fallback(0.9, 1.0) == pytest.approx(0.95, rel=1e-15)
    assert bisection_fallback(0.995, 0.9999) == pytest.approx(0.99745, rel=1e-15)
    with pytest.raises(ExhaustedIntervalError, match="exhausted interval"):
        bisection_fallback(0.9, 0.9)


def test_repeated_bisection_halves_width():
    lo, hi = 0.9, 1.0
    for k in range(1, 8):
        hi = bisection_fallback(lo, hi)
        assert hi - lo == pytest.approx(0.1 / 2**k, rel=1e-9)


def test_config_validation():
    from svihr_pinn.errors import ConfigError

    with pytest.raises(ConfigError):
        BedsConfig(alpha1=0.999, alpha2=0.9)
    with pytest.raises(ConfigError):
        BedsConfig(levels=0)
    with pytest.raises(ConfigError):
        BedsConfig(fail_lo=0.99, fail_hi=0.9)


def test_outcome_point_validation():
    with pytest.raises(ValueError):
        OutcomePoint(1.5, (1.0, 1.0))
    with pytest.raises(ValueError):
        OutcomePoint(0.5, (-1.0, 1.0))
    OutcomePoint(0.5, (math.nan, math.nan), status="failed")


def _on_toy_front(pt):
    x = 2 * pt.alpha - 1
    return pt.y == ((x + 1) ** 2, (x - 1) ** 2)


def test_toy_level_one():
    front = beds_run(BedsConfig(levels=1), toy_trainer)
    assert [p.alpha for p in front.evaluated] == [0.9, 0.999]
    assert front.level == 1


@pytest.mark.parametrize("levels,expected", [(1, 2), (2, 3), (3, 5), (4, 9)])
def test_toy_run_counts(levels, expected):
    front = beds_run(BedsConfig(levels=levels), toy_trainer)
    assert len(front.evaluated) == expected
    assert len(front.evaluated) <= 13


def test_toy_invariants():
    cfg = BedsConfig(levels=5)
    front = beds_run(cfg, toy_trainer)
    assert all(_on_toy_front(p) for p in front.evaluated)
    alphas = [p.alpha for p in front.evaluated]
    assert len(alphas) == len(set(alphas))
    assert all(cfg.alpha1 <= a <= cfg.alpha2 for a in alphas)
    cands = front.candidates
    assert sorted(cands, key=lambda p: p.alpha) == sorted(brute_force_front(cands), key=lambda p: p.alpha)
    # level growth is at most a doubling
    for level in range(2, front.level + 1):
        new = sum(p.level == level for p in front.evaluated)
        assert new <= 2 ** (level - 1)


def test_generated_alphas_are_orthogonal_or_bisected():
    cfg = BedsConfig(levels=4)
    front = beds_run(cfg, toy_trainer)
    seen = []
    for level in range(2, front.level + 1):
        parents = front.by_level(level - 1)
        for p in [q for q in front.evaluated if q.level == level]:
            ok = False
            for a, b in zip(parents, parents[1:]):
                n = next_alpha(a, b)
                if math.isclose(n, p.alpha, rel_tol=1e-12):
                    d_data = b.f_data - a.f_data
                    d_res = b.f_residual - a.f_residual
                    assert abs(n * d_data + (1 - n) * d_res) < 1e-9
                    ok = True
                elif math.isclose(0.5 * (a.alpha + b.alpha), p.alpha, rel_tol=1e-12):
                    ok = not cfg.fail_lo <= n <= cfg.fail_hi
            seen.append(ok)
    assert seen and all(seen)


def test_guard_triggers_bisection():
    # steep residual growth pushes the dichotomic weight to 0.999 > fail_hi
    def trainer(alpha):
        return (1000.0 * (alpha - 0.9), 1.0 - alpha)

    front = beds_run(BedsConfig(levels=2), trainer)
    new = [p.alpha for p in front.evaluated if p.level == 2]
    assert new == [pytest.approx(0.5 * (0.9 + 0.999), rel=1e-15)]


def test_stops_when_no_new_alpha():
    front = beds_run(BedsConfig(levels=6), lambda a: (1.0, 1.0))
    # identical outcomes: no segment to bisect, so the search ends after level 1
    assert front.level == 1
    assert len(front.evaluated) == 2


def test_failed_run_is_recorded_and_refilled():
    calls = []

    def trainer(alpha):
        calls.append(alpha)
        if len(calls) == 3:
            raise TrainingDivergedError("training diverged at iteration 7", iteration=7)
        return toy_trainer(alpha)

    front = beds_run(BedsConfig(levels=2), trainer)
    statuses = [(p.level, p.status) for p in front.evaluated]
    assert statuses == [(1, "ok"), (1, "ok"), (2, "failed"), (2, "ok")]
    failed, refill = front.evaluated[2], front.evaluated[3]
    assert math.isnan(failed.y[0])
    # on the toy the failed weight is the parents' midpoint, so the refill bisects its lower half
    assert failed.alpha == pytest.approx(0.5 * (0.9 + 0.999), rel=1e-12)
    assert refill.alpha == pytest.approx(0.5 * (0.9 + failed.alpha), rel=1e-15)
    assert all(p.status == "ok" for p in front.candidates)


def test_double_failure_abandons_slot():
    def trainer(alpha):
        if alpha not in (0.9, 0.999):
            raise TrainingDivergedError("training diverged at iteration 1", iteration=1)
        return toy_trainer(alpha)

    front = beds_run(BedsConfig(levels=3), trainer)
    assert [p.status for p in front.evaluated] == ["ok", "ok", "failed", "failed"]
    assert len(front.candidates) == 2


def test_all_level_one_failures_give_empty_front():
    def trainer(alpha):
        raise TrainingDivergedError("training diverged at iteration 1", iteration=1)

    front = beds_run(BedsConfig(levels=3), trainer)
    assert front.candidates == []
    assert len(front.evaluated) == 2


def test_knee_selection():
    pts = [_pt(0.9, 0.0, 10.0), _pt(0.95, 1.0, 1.0), _pt(0.99, 10.0, 0.0)]
    knee, rule = select_knee(pts)
    assert knee.alpha == 0.95
    assert rule["ideal"] == {"mse_f": 0.0, "mse_u": 0.0}
    assert rule["distance"] == pytest.approx(math.hypot(0.1, 0.1))


def test_knee_matches_recomputation():
    rng = np.random.default_rng(0)
    pts = filter_nondominated([_pt(float(a), float(x), float(y))
                               for a, x, y in zip(np.linspace(0.9, 0.999, 20), rng.random(20), rng.random(20))])
    knee, _ = select_knee(pts)
    f = np.array([p.y for p in pts])
    z = (f - f.min(axis=0)) / (f.max(axis=0) - f.min(axis=0))
    assert knee is pts[int(np.argmin(np.hypot(z[:, 0], z[:, 1])))]


def test_knee_requires_points():
    with pytest.raises(ValueError):
        select_knee([])


def test_front_csv(tmp_path):
    front = beds_run(BedsConfig(levels=3), toy_trainer)
    path = tmp_path / "front.csv"
    write_front_csv(front.candidates, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "alpha,mse_f,mse_u,run_id,level,status"
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == len(front.candidates)
    ys = [(float(r[1]), float(r[2])) for r in rows]
    assert sorted(brute_force_front(ys)) == sorted(ys)
    assert [float(r[0]) for r in rows] == sorted(float(r[0]) for r in rows)
