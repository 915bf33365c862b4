"""scikit-learn compatible wrappers.

``X`` is always a column of week indices and ``y`` an ``(n, 5)`` table of
compartment counts ``(S, V, I, H, R)``. Both estimators learn their own
normalization during ``fit`` and return counts from ``predict``.

>>> from svihr_pinn.estimators import PINNRegressor
>>> est = PINNRegressor(alpha=0.995, iterations=2000)  # doctest: +SKIP
>>> est.fit(weeks_train, counts_train).predict(weeks_all)  # doctest: +SKIP
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, clone
from sklearn.utils.validation import check_is_fitted

from .data_io import NormalizedSeries, RawSeries, SplitSpec, normalize
from .errors import DataFormatError
from .epi_model import SHORT_TERM, CompartmentState, derive_rates
from .nsfd import default_grid, fit_peak, simulate
from .pinn_train import TrainConfig, predict, train
from .validation import check_compartments, check_consecutive, check_weeks

__all__ = ["PINNRegressor", "NSFDPeakFitter", "alpha_trainer"]


def _raw_series(X, y):
    weeks = check_weeks(X)
    y = check_compartments(y, len(weeks))
    order = check_consecutive(weeks)
    return RawSeries(weeks[order].astype(int), y[order])


class PINNRegressor(RegressorMixin, BaseEstimator):
    """Physics-informed network fitted to weekly compartment counts.

    Parameters
    ----------
    model : SvihrParams, default=None
        Epidemiological parameters of the residual term (short-term values
        if None).
    alpha : float, default=0.995
        Weight of the data loss; ``1 - alpha`` weights the residual loss.
    iterations : int, default=2000
    lr_start, lr_end : float
        Endpoints of the logistic learning-rate schedule.
    beta1, beta2, epsilon : float
        Adam hyperparameters.
    seed : int, default=0
        Seed of the weight initialization.
    collocation : "training" or int, default="training"
        Residual evaluation points: the training times or a uniform grid.
    horizon_end : int, default=None
        Last week of the considered horizon (training plus prediction).
        Normalized time 1 corresponds to this week; defaults to the last
        training week.

    Attributes
    ----------
    params_ : NetworkParams
    scales_ : ndarray of shape (5,)
    t0_ : int
    horizon_weeks_ : float
    loss_ : LossBreakdown
        Losses of the fitted parameters.
    history_ : list of LossBreakdown
    """

    def __init__(self, model=None, alpha=0.995, iterations=2000, lr_start=0.003, lr_end=0.00015,
                 beta1=0.9, beta2=0.999, epsilon=1e-8, seed=0, collocation="training", horizon_end=None):
        self.model = model
        self.alpha = alpha
        self.iterations = iterations
        self.lr_start = lr_start
        self.lr_end = lr_end
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.seed = seed
        self.collocation = collocation
        self.horizon_end = horizon_end

    def _config(self):
        return TrainConfig(alpha=self.alpha, iterations=self.iterations, lr_start=self.lr_start,
                           lr_end=self.lr_end, beta1=self.beta1, beta2=self.beta2,
                           epsilon=self.epsilon, seed=self.seed, collocation=self.collocation)

    def fit(self, X, y):
        raw = _raw_series(X, y)
        first, last = int(raw.weeks[0]), int(raw.weeks[-1])
        end = last if self.horizon_end is None else int(self.horizon_end)
        if end < last:
            raise ValueError("horizon_end must not precede the last training week")
        # the prediction horizon may extend past the data
        split = SplitSpec((first, last), (last, end))
        scales = raw.values.max(axis=0)
        if np.any(scales <= 0):
            raise DataFormatError("degenerate compartment: a column is zero on the training window")
        horizon = float(end - first) if end > first else 1.0
        series = NormalizedSeries(weeks=raw.weeks, times=(raw.weeks - first) / horizon,
                                  values=raw.values / scales, scales=scales,
                                  horizon_weeks=horizon, split=split)
        p = self.model if self.model is not None else SHORT_TERM
        result = train(self._config(), p, derive_rates(p), series)
        self.series_ = series
        self.params_ = result.params
        self.scales_ = series.scales
        self.t0_ = first
        self.horizon_weeks_ = horizon
        self.loss_ = result.final
        self.history_ = result.history
        self.lrs_ = result.lrs
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        """Compartment counts, shape ``(n, 5)``; extrapolates beyond the training weeks."""
        check_is_fitted(self, "params_")
        weeks = check_weeks(X)
        return predict(self.params_, weeks, self.series_)

    def outcome(self):
        """``(mse_f, mse_u)`` of the fitted network."""
        check_is_fitted(self, "loss_")
        return (self.loss_.mse_f, self.loss_.mse_u)


class NSFDPeakFitter(BaseEstimator):
    """Estimate ``(beta, kappa)`` by matching the infection peak with NSFD runs.

    The first row of the data is the initial state; the NSFD run covers the
    whole data span with step ``h`` weeks.
    """

    def __init__(self, model=None, beta_grid=None, kappa_grid=None, h=1.0):
        self.model = model
        self.beta_grid = beta_grid
        self.kappa_grid = kappa_grid
        self.h = h

    def fit(self, X, y):
        raw = _raw_series(X, y)
        series = normalize(raw, SplitSpec.full(raw))
        betas, kappas = default_grid()
        grid = (betas if self.beta_grid is None else self.beta_grid,
                kappas if self.kappa_grid is None else self.kappa_grid)
        p = self.model if self.model is not None else SHORT_TERM
        span = float(raw.weeks[-1] - raw.weeks[0])
        steps = int(round(span / self.h))
        initial = CompartmentState.from_array(raw.values[0])
        res = fit_peak(series, grid, p, self.h, initial, steps)
        self.beta_, self.kappa_, self.peak_error_ = res.beta, res.kappa, res.peak_error
        self.model_ = p.with_(beta=res.beta, kappa=res.kappa)
        self.t0_ = int(raw.weeks[0])
        self.initial_ = initial
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        """Simulated counts at the requested weeks (multiples of ``h`` from the first week)."""
        check_is_fitted(self, "model_")
        weeks = check_weeks(X)
        offsets = (weeks - self.t0_) / self.h
        idx = np.rint(offsets).astype(int)
        if np.any(idx < 0) or not np.allclose(offsets, idx):
            raise ValueError("weeks must lie on the step grid at or after the first fitted week")
        run = simulate(self.model_, derive_rates(self.model_), self.h, self.initial_, int(idx.max()))
        return run.as_array()[idx]


def alpha_trainer(estimator, X, y):
    """Trainer callback for :func:`~svihr_pinn.pareto.beds_run`.

    Each call clones ``estimator`` with the requested ``alpha`` and returns
    its ``(mse_f, mse_u)``; the fitted clones are kept in ``trainer.fitted``.
    """
    fitted = {}

    def trainer(alpha):
        est = clone(estimator).set_params(alpha=alpha)
        est.fit(X, y)
        fitted[alpha] = est
        return est.outcome()

    trainer.fitted = fitted
    return trainer
