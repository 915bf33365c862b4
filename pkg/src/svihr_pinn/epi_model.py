"""SVIHR compartment model: parameters, derived rates and right-hand side.

Compartments are ordered ``(S, V, I, H, R)`` everywhere. Time is measured
in weeks.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

__all__ = [
    "COMPARTMENTS",
    "SvihrParams",
    "DerivedRates",
    "CompartmentState",
    "derive_rates",
    "rhs",
    "scaled_rhs",
    "rhs_jacobian",
    "LONG_TERM",
    "SHORT_TERM",
]

COMPARTMENTS = ("S", "V", "I", "H", "R")


@dataclass(frozen=True)
class SvihrParams:
    """Parameters of the SVIHR system.

    Attributes
    ----------
    beta : float
        Transmission risk per individual pair and week.
    kappa : float
        Residual infection probability after vaccination.
    vac : float
        Vaccination coefficient (per week).
    xi : float
        Fraction of infected individuals that are hospitalized.
    t_infect, t_hosp : float
        Mean infection and hospitalization periods (weeks).
    mort : float
        Mortality coefficient of hospitalized individuals.
    lambda_in : float
        Recruitment rate (individuals per week).
    mu : float
        Natural death rate (per week).
    population : float
        Total population size N.
    """

    beta: float = 1.476e-8
    kappa: float = 0.001
    vac: float = 0.0231
    xi: float = 0.0735
    t_infect: float = 1.2
    t_hosp: float = 1.5
    mort: float = 0.0142
    lambda_in: float = 0.0
    mu: float = 0.0
    population: float = 83_100_000.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{f.name} must be finite and >= 0, got {v!r}")
        if self.t_infect <= 0 or self.t_hosp <= 0:
            raise ValueError("t_infect and t_hosp must be > 0")
        for name in ("xi", "mort", "kappa"):
            if getattr(self, name) > 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


# Table values for the two training scenarios (long- and short-term data).
LONG_TERM = SvihrParams(beta=1.314e-8, kappa=0.001, vac=0.0159, xi=0.0862, mort=0.0232)
SHORT_TERM = SvihrParams(beta=1.476e-8, kappa=0.001, vac=0.0231, xi=0.0735, mort=0.0142)


@dataclass(frozen=True)
class DerivedRates:
    omega1: float
    omega2: float
    eta: float


@dataclass(frozen=True)
class CompartmentState:
    s: float
    v: float
    i: float
    h: float
    r: float

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) >= 0:
                raise ValueError(f"compartment {f.name} must be >= 0")

    def as_array(self):
        return np.array([self.s, self.v, self.i, self.h, self.r], dtype=float)

    @classmethod
    def from_array(cls, values):
        return cls(*(float(x) for x in values))

    @property
    def total(self):
        return self.s + self.v + self.i + self.h + self.r


def derive_rates(p):
    """Weekly transition rates implied by ``p``.

    The hospital discharge rate ``(1 - mort) / t_hosp`` is inferred: it is
    the only form consistent with both tabulated values.
    """
    return DerivedRates(
        omega1=(1.0 - p.xi) / p.t_infect,
        omega2=(1.0 - p.mort) / p.t_hosp,
        eta=p.xi / p.t_infect,
    )


def rhs(p, d, state):
    """Time derivative of ``(S, V, I, H, R)``.

    ``state`` may be a :class:`CompartmentState` or any 5-sequence whose
    elements support ``+ - *`` with floats (floats, numpy arrays or
    :class:`~svihr_pinn.autodiff.TapeVar`).
    """
    if isinstance(state, CompartmentState):
        s, v, i, h, r = state.s, state.v, state.i, state.h, state.r
    else:
        s, v, i, h, r = state
    infection = p.beta * i * s
    return (
        p.lambda_in - infection - (p.vac + p.mu) * s,
        p.vac * s - p.kappa * infection - p.mu * v,
        (1.0 + p.kappa) * infection - (d.eta + d.omega1 + p.mu) * i,
        d.eta * i - (d.omega2 + p.mu) * h,
        d.omega1 * i + d.omega2 * h - p.mu * r,
    )


def scaled_rhs(p, d, state, scales, horizon_weeks):
    """Right-hand side in unit-interval compartments and normalized time.

    Component ``k`` is ``horizon_weeks * rhs(state * scales)[k] / scales[k]``.
    """
    if horizon_weeks <= 0:
        raise ValueError("horizon_weeks must be > 0")
    scales = [float(c) for c in scales]
    if len(scales) != 5 or min(scales) <= 0:
        raise ValueError("scales must be 5 positive numbers")
    raw = rhs(p, d, [x * c for x, c in zip(state, scales)])
    return tuple(f * (horizon_weeks / c) for f, c in zip(raw, scales))


def rhs_jacobian(p, d, x):
    """Jacobian of :func:`rhs` at states ``x`` of shape ``(n, 5)``.

    Returns an array of shape ``(n, 5, 5)`` with ``J[:, k, j] = dF_k/dx_j``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    s, i = x[:, 0], x[:, 2]
    b = p.beta
    J = np.zeros((x.shape[0], 5, 5))
    J[:, 0, 0] = -b * i - (p.vac + p.mu)
    J[:, 0, 2] = -b * s
    J[:, 1, 0] = p.vac - p.kappa * b * i
    J[:, 1, 1] = -p.mu
    J[:, 1, 2] = -p.kappa * b * s
    J[:, 2, 0] = (1.0 + p.kappa) * b * i
    J[:, 2, 2] = (1.0 + p.kappa) * b * s - (d.eta + d.omega1 + p.mu)
    J[:, 3, 2] = d.eta
    J[:, 3, 3] = -(d.omega2 + p.mu)
    J[:, 4, 2] = d.omega1
    J[:, 4, 3] = d.omega2
    J[:, 4, 4] = -p.mu
    return J
