"""PINN losses, learning-rate schedule, Adam and the training loop.

The data loss is the mean squared Euclidean distance between network
outputs and normalized observations; the residual loss is the mean squared
defect ``d net/dt - G(net)`` where ``G`` is the SVIHR right-hand side in
normalized coordinates. Training minimizes ``alpha * mse_u + (1 - alpha) * mse_f``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import mlp
from .autodiff import Tape
from .epi_model import rhs_jacobian, scaled_rhs
from .errors import ConfigError, TrainingDivergedError

__all__ = [
    "TrainConfig",
    "LossBreakdown",
    "AdamState",
    "TrainResult",
    "data_loss",
    "residual_loss",
    "combined_loss",
    "tape_gradient",
    "loss_and_grad",
    "lr_schedule",
    "adam_step",
    "collocation_times",
    "train",
    "predict",
    "write_history_csv",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 0.995
    iterations: int = 2000
    lr_start: float = 0.003
    lr_end: float = 0.00015
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    collocation: object = "training"  # or an int: uniform grid of that many points on [0, 1]

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ConfigError("iterations must be an integer >= 1")
        if not 0.0 < self.lr_end <= self.lr_start:
            raise ConfigError("need 0 < lr_end <= lr_start")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0 and self.epsilon > 0):
            raise ConfigError("invalid Adam hyperparameters")
        if self.collocation != "training":
            if isinstance(self.collocation, bool) or not isinstance(self.collocation, int) or self.collocation < 1:
                raise ConfigError("collocation must be 'training' or a positive integer")


@dataclass(frozen=True)
class LossBreakdown:
    mse_u: float
    mse_f: float
    combined: float

    @classmethod
    def from_parts(cls, alpha, mse_u, mse_f):
        return cls(mse_u, mse_f, alpha * mse_u + (1.0 - alpha) * mse_f)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


@dataclass
class TrainResult:
    params: mlp.NetworkParams
    history: list = field(default_factory=list)
    lrs: list = field(default_factory=list)
    final: LossBreakdown = None
    alpha: float = None

    @property
    def outcome(self):
        """``(mse_f, mse_u)`` of the final parameters."""
        return (self.final.mse_f, self.final.mse_u)


# -- tape (reference) losses ---------------------------------------------------


def _as_bound(params, tape):
    if isinstance(params, mlp.NetworkParams):
        return mlp.bind(params, tape)
    return params


def data_loss(params, series, tape):
    """Data loss of ``params`` on the training rows of ``series``, recorded on ``tape``.

    ``params`` may be :class:`~svihr_pinn.mlp.NetworkParams` or parameters
    already bound to ``tape``.
    """
    bound = _as_bound(params, tape)
    times, obs = series.train()
    if len(times) == 0:
        raise ValueError("series has no training rows")
    total = tape.const(0.0)
    for t, row in zip(times, obs):
        out = mlp.forward(bound, float(t), tape)
        for v, o in zip(out.values, row):
            total = total + (v - float(o)) * (v - float(o))
    return total * (1.0 / len(times))


def residual_loss(params, p, d, scales, horizon, times, tape):
    """Residual loss at collocation ``times``, recorded on ``tape``."""
    bound = _as_bound(params, tape)
    times = list(times)
    if not times:
        raise ValueError("collocation set is empty")
    total = tape.const(0.0)
    for t in times:
        out = mlp.forward(bound, float(t), tape)
        g = scaled_rhs(p, d, out.values, scales, horizon)
        for dv, gk in zip(out.time_derivatives, g):
            r = dv - gk
            total = total + r * r
    return total * (1.0 / len(times))


def tape_gradient(params, alpha, series, p, d, times=None):
    """Combined loss and its gradient computed on a scalar tape.

    Slow; used to cross-check :func:`loss_and_grad`.
    """
    tape = Tape()
    bound = mlp.bind(params, tape)
    if times is None:
        times = series.train()[0]
    lu = data_loss(bound, series, tape)
    lf = residual_loss(bound, p, d, series.scales, series.horizon_weeks, times, tape)
    loss = lu * alpha + lf * (1.0 - alpha)
    return LossBreakdown(lu.value, lf.value, loss.value), tape.gradient(loss, bound.leaves)


# -- vectorized losses ---------------------------------------------------------


def _scaled_residual(p, d, y, dy, scales, horizon):
    x = y * scales
    s, v, i, h, r = x.T
    # same expression as epi_model.rhs, vectorized over rows
    infection = p.beta * i * s
    F = np.stack([
        p.lambda_in - infection - (p.vac + p.mu) * s,
        p.vac * s - p.kappa * infection - p.mu * v,
        (1.0 + p.kappa) * infection - (d.eta + d.omega1 + p.mu) * i,
        d.eta * i - (d.omega2 + p.mu) * h,
        d.omega1 * i + d.omega2 * h - p.mu * r,
    ], axis=1)
    G = F * (horizon / scales)
    return dy - G, x


def loss_and_grad(flat, alpha, t_data, obs, t_coll, p, d, scales, horizon, widths=mlp.WIDTHS):
    """Combined loss, its breakdown and the flat gradient.

    ``t_coll`` may be ``None`` to reuse the data times as collocation points.
    """
    params = mlp.unflatten(flat, widths)
    scales = np.asarray(scales, dtype=float)
    l = len(t_data)
    if t_coll is None:
        y, dy, cache = mlp.batch_forward(params, t_data)
        yc, dyc = y, dy
    else:
        m_pts = len(t_coll)
        y_all, dy_all, cache = mlp.batch_forward(params, np.concatenate([t_data, t_coll]))
        y, dy = y_all[:l], dy_all[:l]
        yc, dyc = y_all[l:], dy_all[l:]
    diff = y - obs
    mse_u = float(np.sum(diff * diff) / l)
    res, x = _scaled_residual(p, d, yc, dyc, scales, horizon)
    m = len(yc)
    mse_f = float(np.sum(res * res) / m)

    g_res = (2.0 * (1.0 - alpha) / m) * res
    # dG_k/dy_j = horizon * (scales_j / scales_k) * dF_k/dx_j
    J = rhs_jacobian(p, d, x) * (horizon * scales[None, None, :] / scales[None, :, None])
    g_yc = -np.einsum("nk,nkj->nj", g_res, J)
    g_dyc = g_res
    g_yd = (2.0 * alpha / l) * diff
    if t_coll is None:
        g_y, g_dy = g_yd + g_yc, g_dyc
    else:
        g_y = np.vstack([g_yd, g_yc])
        g_dy = np.vstack([np.zeros_like(g_yd), g_dyc])
    grad = mlp.batch_backward(params, cache, g_y, g_dy)
    return LossBreakdown.from_parts(alpha, mse_u, mse_f), grad


def combined_loss(flat, alpha, t_data, obs, t_coll, p, d, scales, horizon):
    """Loss breakdown only (no gradient); used by finite-difference checks."""
    params = mlp.unflatten(flat)
    y, dy, _ = mlp.batch_forward(params, t_data)
    mse_u = float(np.sum((y - obs) ** 2) / len(t_data))
    if t_coll is not None:
        y, dy, _ = mlp.batch_forward(params, t_coll)
    res, _ = _scaled_residual(p, d, y, dy, np.asarray(scales, dtype=float), horizon)
    mse_f = float(np.sum(res * res) / len(y))
    return LossBreakdown.from_parts(alpha, mse_u, mse_f)


# -- optimisation ----------------------------------------------------------------


def lr_schedule(kappa, config):
    """Logistic decay from ``lr_start`` to ``lr_end`` centred at half the iterations."""
    kmax = config.iterations
    x = (kappa - 0.5 * kmax) / (0.08 * kmax)
    # logistic written to avoid overflow for large |x|
    if x >= 0:
        sig = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        sig = e / (1.0 + e)
    return -(config.lr_start - config.lr_end) * sig + config.lr_start


def adam_step(params, grad, state, lr, beta1=0.9, beta2=0.999, epsilon=1e-8):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``."""
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if params.shape != grad.shape or state.m.shape != params.shape:
        raise ValueError(f"shape mismatch: params {params.shape}, grad {grad.shape}, state {state.m.shape}")
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    new = params - lr * m_hat / (np.sqrt(v_hat) + epsilon)
    return new, AdamState(m, v, t)


def collocation_times(config, series):
    """``None`` means: use the training times."""
    if config.collocation == "training":
        return None
    return np.linspace(0.0, 1.0, int(config.collocation))


def train(config, p, d, series, init_params=None):
    """Run ``config.iterations`` Adam steps on the combined loss.

    ``history[k]`` holds the losses evaluated before update ``k + 1``;
    ``final`` holds the losses of the returned parameters.
    """
    t_data, obs = series.train()
    if len(t_data) == 0:
        raise ValueError("series has no training rows")
    t_coll = collocation_times(config, series)
    params = init_params if init_params is not None else mlp.init(config.seed)
    flat = mlp.flatten(params)
    state = AdamState.zeros(flat.size)
    history, lrs = [], []
    args = (t_data, obs, t_coll, p, d, series.scales, series.horizon_weeks)
    for k in range(1, config.iterations + 1):
        losses, grad = loss_and_grad(flat, config.alpha, *args)
        if not (math.isfinite(losses.combined) and np.all(np.isfinite(grad))):
            raise TrainingDivergedError(f"training diverged at iteration {k}", iteration=k)
        lr = lr_schedule(k, config)
        history.append(losses)
        lrs.append(lr)
        flat, state = adam_step(flat, grad, state, lr, config.beta1, config.beta2, config.epsilon)
        if k % 500 == 0:
            log.debug("iter %d: mse_u=%.3e mse_f=%.3e", k, losses.mse_u, losses.mse_f)
    final = combined_loss(flat, config.alpha, *args)
    if not math.isfinite(final.combined):
        raise TrainingDivergedError(f"training diverged at iteration {config.iterations}", iteration=config.iterations)
    return TrainResult(mlp.unflatten(flat), history, lrs, final, config.alpha)


def predict(params, weeks, series):
    """Denormalized ``(n, 5)`` compartment values at ``weeks``.

    ``series`` supplies the normalization (first week, horizon, scales);
    weeks past the training window are extrapolated.
    """
    t = series.to_time(weeks)
    y, _, _ = mlp.batch_forward(params, t)
    return y * series.scales


def write_history_csv(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("iteration", "lr", "mse_u", "mse_f", "combined"))
        for k, (lr, h) in enumerate(zip(result.lrs, result.history), start=1):
            w.writerow((k, "%.17g" % lr, "%.17g" % h.mse_u, "%.17g" % h.mse_f, "%.17g" % h.combined))
