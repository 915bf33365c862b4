"""Weekly compartment data: CSV ingestion, normalization and synthesis.

Input files have the header ``week,S,V,I,H,R``; weeks are consecutive
integers and every cell is a nonnegative compartment size (a stock, not a
weekly increment).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .epi_model import COMPARTMENTS, CompartmentState, derive_rates
from .errors import DataFormatError
from .nsfd import simulate

__all__ = [
    "HEADER",
    "RawSeries",
    "NormalizedSeries",
    "SplitSpec",
    "load_csv",
    "write_csv",
    "normalize",
    "denormalize",
    "synthesize",
    "synthesize_two_wave",
    "mse_val",
    "save_normalization",
    "load_normalization",
    "fmt17",
]

HEADER = ("week",) + COMPARTMENTS


def fmt17(x):
    """Format a real with 17 significant digits (round-trips exactly)."""
    return "%.17g" % float(x)


@dataclass(frozen=True)
class RawSeries:
    weeks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        weeks = np.asarray(self.weeks, dtype=int)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != 5 or values.shape[0] != weeks.shape[0]:
            raise DataFormatError("values must be an (l, 5) table matching weeks")
        if weeks.size and np.any(np.diff(weeks) != 1):
            raise DataFormatError("weeks must increase by exactly 1")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DataFormatError("negative value")
        object.__setattr__(self, "weeks", weeks)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.weeks)

    def window(self, first, last):
        """Rows with ``first <= week <= last``."""
        mask = (self.weeks >= first) & (self.weeks <= last)
        return RawSeries(self.weeks[mask], self.values[mask])


@dataclass(frozen=True)
class SplitSpec:
    """Training weeks ``[a, b]`` and validation weeks ``[b, c]``."""

    train_range: tuple
    validate_range: tuple

    def __post_init__(self):
        a, b = self.train_range
        b2, c = self.validate_range
        if b2 != b:
            raise ValueError("validation must start where training ends")
        if not (a <= b <= c):
            raise ValueError("train range must precede the validation range")
        if b - a < 0:
            raise ValueError("training window is empty")

    @property
    def first(self):
        return self.train_range[0]

    @property
    def last(self):
        return self.validate_range[1]

    @property
    def horizon_weeks(self):
        return float(self.validate_range[1] - self.train_range[0])

    def check_within(self, raw):
        if len(raw) == 0 or self.first < raw.weeks[0] or self.last > raw.weeks[-1]:
            raise ValueError(
                f"split {self.train_range}/{self.validate_range} outside data weeks "
                f"{raw.weeks[0] if len(raw) else None}..{raw.weeks[-1] if len(raw) else None}"
            )

    def to_dict(self):
        return {"train": list(self.train_range), "validate": list(self.validate_range)}

    @classmethod
    def full(cls, raw):
        return cls((int(raw.weeks[0]), int(raw.weeks[-1])), (int(raw.weeks[-1]), int(raw.weeks[-1])))


@dataclass(frozen=True)
class NormalizedSeries:
    """Unit-interval view of a data window.

    ``values`` covers every week of the split (training and validation);
    ``train_mask`` selects the training rows. ``times`` maps the first
    training week to 0 and the last validation week to 1.
    """

    weeks: np.ndarray
    times: np.ndarray
    values: np.ndarray
    scales: np.ndarray
    horizon_weeks: float
    split: SplitSpec

    @property
    def train_mask(self):
        a, b = self.split.train_range
        return (self.weeks >= a) & (self.weeks <= b)

    @property
    def validate_mask(self):
        b, c = self.split.validate_range
        return (self.weeks >= b) & (self.weeks <= c)

    def train(self):
        """The training rows as ``(times, values)``."""
        m = self.train_mask
        return self.times[m], self.values[m]

    def to_time(self, weeks):
        return (np.asarray(weeks, dtype=float) - self.split.first) / self.horizon_weeks

    def metadata(self):
        return {
            "scales": [fmt17(s) for s in self.scales],
            "split": self.split.to_dict(),
            "horizon_weeks": fmt17(self.horizon_weeks),
            "t0_week": self.split.first,
        }


def load_csv(path):
    """Read and validate a ``week,S,V,I,H,R`` file."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        missing = [c for c in HEADER if c not in header]
        if missing:
            raise DataFormatError(f"{path}: missing column(s) {', '.join(missing)}")
        cols = [header.index(c) for c in HEADER]
        weeks, rows = [], []
        for rowno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                cells = [row[c].strip() for c in cols]
            except IndexError:
                raise DataFormatError(f"{path}: row {rowno}: missing cell") from None
            if any(c == "" for c in cells):
                raise DataFormatError(f"{path}: row {rowno}: missing cell")
            try:
                week = float(cells[0])
                vals = [float(c) for c in cells[1:]]
            except ValueError:
                raise DataFormatError(f"{path}: row {rowno}: non-numeric cell") from None
            if not week.is_integer():
                raise DataFormatError(f"{path}: row {rowno}: week must be an integer")
            if weeks and int(week) != weeks[-1] + 1:
                raise DataFormatError(f"{path}: gap at row {rowno}")
            if any(not math.isfinite(v) for v in vals):
                raise DataFormatError(f"{path}: row {rowno}: non-finite value")
            if any(v < 0 for v in vals):
                raise DataFormatError(f"{path}: row {rowno}: negative value")
            weeks.append(int(week))
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return RawSeries(np.array(weeks), np.array(rows))


def write_csv(raw, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for week, row in zip(raw.weeks, raw.values):
            w.writerow([str(int(week))] + [fmt17(x) for x in row])


def normalize(raw, window):
    """Scale each column by its maximum over the training window.

    Validation rows use the same scales and may therefore exceed 1.
    """
    window.check_within(raw)
    sub = raw.window(window.first, window.last)
    a, b = window.train_range
    train = sub.values[(sub.weeks >= a) & (sub.weeks <= b)]
    scales = train.max(axis=0)
    if np.any(scales <= 0):
        bad = [COMPARTMENTS[k] for k in np.flatnonzero(scales <= 0)]
        raise DataFormatError(f"degenerate compartment: {', '.join(bad)} is zero on the training window")
    horizon = window.horizon_weeks
    if horizon <= 0:
        # single-week window; keep times finite
        horizon = 1.0
    times = (sub.weeks - window.first) / horizon
    return NormalizedSeries(
        weeks=sub.weeks,
        times=times.astype(float),
        values=sub.values / scales,
        scales=scales,
        horizon_weeks=float(horizon),
        split=window,
    )


def denormalize(series, values=None):
    """Map normalized compartment values back to counts."""
    v = series.values if values is None else np.asarray(values, dtype=float)
    return v * series.scales


def synthesize(p, d, h, initial, steps, noise_rel=0.0, seed=0, start_week=0):
    """Weekly data from an NSFD trajectory with multiplicative uniform noise.

    Each cell is ``x * (1 + noise_rel * u)`` with ``u ~ U[-1, 1]``, clipped
    at zero.
    """
    if noise_rel < 0:
        raise ValueError("noise_rel must be >= 0")
    run = simulate(p, d, h, initial, steps)
    values = run.as_array()
    if noise_rel > 0:
        rng = np.random.default_rng(seed)
        u = rng.uniform(-1.0, 1.0, size=values.shape)
        values = np.clip(values * (1.0 + noise_rel * u), 0.0, None)
    return RawSeries(np.arange(start_week, start_week + steps + 1), values)


def synthesize_two_wave(p, h, initial, steps, switch_step, beta_second, reseed_infected=0.0, start_week=0):
    """Two-wave test data: ``beta`` switches to ``beta_second`` after ``switch_step``.

    ``reseed_infected`` individuals are moved from S to I at the switch,
    which starts the second wave even if the first one has died out. The
    constant-parameter model only partly explains such data.
    """
    if not 0 < switch_step < steps:
        raise ValueError("switch_step must lie inside the run")
    first = simulate(p, derive_rates(p), h, initial, switch_step)
    last = first.trajectory[-1].as_array()
    moved = min(reseed_infected, last[0])
    last[0] -= moved
    last[2] += moved
    q = p.with_(beta=beta_second)
    second = simulate(q, derive_rates(q), h, CompartmentState.from_array(last), steps - switch_step)
    values = np.vstack([first.as_array(), second.as_array()[1:]])
    return RawSeries(np.arange(start_week, start_week + steps + 1), values)


def mse_val(predicted, observed):
    """Mean squared error between two infected-compartment series."""
    predicted = np.asarray(predicted, dtype=float).ravel()
    observed = np.asarray(observed, dtype=float).ravel()
    if predicted.shape != observed.shape:
        raise ValueError(f"length mismatch: {predicted.size} vs {observed.size}")
    if predicted.size == 0:
        raise ValueError("empty series")
    return float(np.mean((predicted - observed) ** 2))


def save_normalization(series, path):
    with open(path, "w") as fh:
        json.dump(series.metadata(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_normalization(path):
    """Return ``(scales, SplitSpec, horizon_weeks)`` from a metadata file."""
    with open(path) as fh:
        meta = json.load(fh)
    split = SplitSpec(tuple(meta["split"]["train"]), tuple(meta["split"]["validate"]))
    return np.array([float(s) for s in meta["scales"]]), split, float(meta["horizon_weeks"])
