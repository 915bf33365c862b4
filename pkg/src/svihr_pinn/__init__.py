"""Physics-informed SVIHR network training with biobjective weight search."""

from .epi_model import LONG_TERM, SHORT_TERM, CompartmentState, SvihrParams, derive_rates
from .estimators import NSFDPeakFitter, PINNRegressor, alpha_trainer
from .pareto import BedsConfig, beds_run, filter_nondominated
from .pinn_train import TrainConfig, train

__all__ = [
    "LONG_TERM",
    "SHORT_TERM",
    "CompartmentState",
    "SvihrParams",
    "derive_rates",
    "NSFDPeakFitter",
    "PINNRegressor",
    "alpha_trainer",
    "BedsConfig",
    "beds_run",
    "filter_nondominated",
    "TrainConfig",
    "train",
]

__version__ = "0.1.0"
