"""Nonstandard finite-difference (NSFD) integration of the SVIHR system.

The explicit scheme updates the compartments in the fixed order
S, V, I, H, R, each update using the values already advanced in the same
step. With ``Λ = μ = 0`` the total population is conserved up to the
defect ``φ β (1 + κ) S' (I' - I)``; every compartment stays nonnegative as
long as the denominator of the ``I`` update is positive, which is checked.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .epi_model import COMPARTMENTS, CompartmentState, derive_rates
from .errors import NoFeasibleParametersError, PositivityError

__all__ = [
    "NsfdRun",
    "FitResult",
    "denominator",
    "step",
    "simulate",
    "fit_peak",
    "default_grid",
    "write_trajectory_csv",
]


@dataclass
class NsfdRun:
    step_weeks: float
    steps: int
    initial: CompartmentState
    trajectory: list = field(default_factory=list)

    def as_array(self):
        """Trajectory as an ``(steps + 1, 5)`` array."""
        return np.array([s.as_array() for s in self.trajectory])

    @property
    def infected(self):
        return np.array([s.i for s in self.trajectory])


@dataclass(frozen=True)
class FitResult:
    beta: float
    kappa: float
    peak_error: float


def denominator(h, mu):
    """Denominator function ``(exp(mu h) - 1) / mu``; exactly ``h`` for ``mu == 0``."""
    if h <= 0:
        raise ValueError("step size must be > 0")
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if mu == 0:
        return float(h)
    return math.expm1(mu * h) / mu


def step(p, d, h, state, *, phi=None, index=None):
    """Advance ``state`` by one explicit NSFD step of size ``h`` weeks."""
    if phi is None:
        phi = denominator(h, p.mu)
    s, v, i, hh, r = state.s, state.v, state.i, state.h, state.r
    s1 = (s + phi * p.lambda_in) / (1.0 + phi * (p.beta * i + p.vac + p.mu))
    v1 = (v + phi * s1 * (p.vac - p.beta * p.kappa * i)) / (1.0 + phi * p.mu)
    denom_i = 1.0 + phi * (d.eta + d.omega1 + p.mu - p.beta * (1.0 + p.kappa) * s1)
    if not denom_i > 0.0:
        where = "" if index is None else f" at step {index}"
        raise PositivityError(
            f"NSFD positivity condition failed{where}: denominator {denom_i!r}",
            step=index,
            denominator=denom_i,
        )
    i1 = i / denom_i
    h1 = (phi * d.eta * i1 + hh) / (1.0 + phi * (d.omega2 + p.mu))
    r1 = (r + phi * (d.omega1 * i1 + d.omega2 * h1)) / (1.0 + phi * p.mu)
    # V can only go negative through the kappa*beta*I*S' drain; report it.
    if v1 < 0.0:
        where = "" if index is None else f" at step {index}"
        raise PositivityError(f"NSFD positivity condition failed{where}: V became {v1!r}", step=index)
    return CompartmentState(s1, v1, i1, h1, r1)


def simulate(p, d, h, initial, steps):
    """Iterate :func:`step` ``steps`` times starting from ``initial``."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if not isinstance(initial, CompartmentState):
        initial = CompartmentState.from_array(initial)
    phi = denominator(h, p.mu)
    traj = [initial]
    state = initial
    for n in range(1, steps + 1):
        state = step(p, d, h, state, phi=phi, index=n)
        traj.append(state)
    return NsfdRun(step_weeks=float(h), steps=int(steps), initial=initial, trajectory=traj)


def default_grid():
    """40 log-spaced ``beta`` in [1e-9, 1e-7] and five ``kappa`` levels."""
    return np.logspace(-9, -7, 40), np.array([0.001, 0.005, 0.01, 0.05, 0.1])


def fit_peak(observed, grid, p, h, initial, steps):
    """Grid search for ``(beta, kappa)`` matching the observed infection peak.

    Each candidate is simulated from ``initial``; its peak infected count,
    expressed in the observed normalization, is compared with the observed
    normalized peak. Candidates that violate the positivity condition are
    skipped. Ties go to the smaller ``beta`` and then the smaller ``kappa``.
    """
    betas, kappas = grid
    betas = sorted(float(b) for b in betas)
    kappas = sorted(float(k) for k in kappas)
    if not betas or not kappas:
        raise ValueError("fit grid must be nonempty")
    i_col = COMPARTMENTS.index("I")
    target = float(np.max(np.asarray(observed.values)[:, i_col]))
    scale = float(observed.scales[i_col])

    best = None
    for beta in betas:
        for kappa in kappas:
            q = p.with_(beta=beta, kappa=kappa)
            try:
                run = simulate(q, derive_rates(q), h, initial, steps)
            except PositivityError:
                continue
            err = abs(float(np.max(run.infected)) / scale - target)
            if best is None or err < best.peak_error:
                best = FitResult(beta=beta, kappa=kappa, peak_error=err)
    if best is None:
        raise NoFeasibleParametersError("no feasible parameters on grid")
    return best


def write_trajectory_csv(run, path, start_week=0):
    """Write ``week,S,V,I,H,R`` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("week",) + COMPARTMENTS)
        for n, state in enumerate(run.trajectory):
            week = start_week + n * run.step_weeks
            w.writerow([_fmt(week)] + [_fmt(x) for x in state.as_array()])


def _fmt(x):
    return "%.17g" % float(x)
