import numpy as np
import pytest

from svihr_pinn.data_io import SplitSpec, normalize, synthesize
from svihr_pinn.epi_model import SHORT_TERM, CompartmentState, derive_rates

INITIAL = CompartmentState(75e6, 7e6, 1e5, 5e3, 995e3)


@pytest.fixture
def initial():
    return INITIAL


@pytest.fixture(scope="session")
def synth_raw():
    """Noiseless 20-point NSFD data with the short-term parameters."""
    return synthesize(SHORT_TERM, derive_rates(SHORT_TERM), 1.0, INITIAL, 19)


@pytest.fixture(scope="session")
def synth_series(synth_raw):
    return normalize(synth_raw, SplitSpec.full(synth_raw))


def central_diff(f, x, k, h):
    xp, xm = np.array(x, dtype=float), np.array(x, dtype=float)
    xp[k] += h
    xm[k] -= h
    return (f(xp) - f(xm)) / (2.0 * h)


def close(a, b, rel, floor):
    """Relative agreement with an absolute floor for values near zero."""
    return abs(a - b) <= max(rel * abs(b), floor)
