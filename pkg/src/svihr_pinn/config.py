"""JSON run configuration.

Top-level keys: ``model``, ``nsfd``, ``train``, ``beds``, ``data``,
``output_dir``. Every block is optional and filled with defaults; unknown
keys anywhere are rejected. See ``README.md`` for the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data_io import SplitSpec
from .epi_model import SHORT_TERM, CompartmentState, SvihrParams
from .errors import ConfigError
from .nsfd import default_grid
from .pareto import BedsConfig
from .pinn_train import TrainConfig

__all__ = ["RunConfig", "NsfdConfig", "DataConfig", "load_config", "parse_config"]

DEFAULT_INITIAL = {"s": 75_000_000.0, "v": 7_000_000.0, "i": 100_000.0, "h": 5_000.0, "r": 995_000.0}


@dataclass(frozen=True)
class NsfdConfig:
    h: float = 1.0
    steps: int = 19
    initial: CompartmentState = CompartmentState(**DEFAULT_INITIAL)
    beta_grid: tuple = tuple(default_grid()[0])
    kappa_grid: tuple = tuple(default_grid()[1])


@dataclass(frozen=True)
class DataConfig:
    path: str = None
    noise_rel: float = 0.0
    seed: int = 0
    start_week: int = 0
    split: SplitSpec = None


@dataclass(frozen=True)
class RunConfig:
    model: SvihrParams = SHORT_TERM
    nsfd: NsfdConfig = field(default_factory=NsfdConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    beds: BedsConfig = field(default_factory=BedsConfig)
    beds_trainer: str = "pinn"
    data: DataConfig = field(default_factory=DataConfig)
    output_dir: str = "run"


def _strict(block, allowed, where):
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(block) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _grid(spec, where):
    if isinstance(spec, list):
        values = [float(v) for v in spec]
    elif isinstance(spec, dict):
        _strict(spec, {"logspace"}, where)
        lo, hi, num = spec["logspace"]
        values = list(np.logspace(np.log10(lo), np.log10(hi), int(num)))
    else:
        raise ConfigError(f"{where} must be a list or {{'logspace': [min, max, num]}}")
    if not values:
        raise ConfigError(f"{where} is empty")
    return tuple(values)


def parse_config(raw):
    """Validate a decoded JSON document and build a :class:`RunConfig`."""
    _strict(raw, {"model", "nsfd", "train", "beds", "data", "output_dir"}, "config")
    try:
        model = SvihrParams.from_dict(raw.get("model", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from None

    nb = raw.get("nsfd", {})
    _strict(nb, {"h", "steps", "initial", "grid"}, "nsfd")
    initial = dict(DEFAULT_INITIAL)
    if "initial" in nb:
        _strict(nb["initial"], DEFAULT_INITIAL.keys(), "nsfd.initial")
        initial.update({k: float(v) for k, v in nb["initial"].items()})
    grid = nb.get("grid", {})
    _strict(grid, {"beta", "kappa"}, "nsfd.grid")
    betas, kappas = default_grid()
    try:
        nsfd = NsfdConfig(
            h=float(nb.get("h", 1.0)),
            steps=int(nb.get("steps", 19)),
            initial=CompartmentState(**initial),
            beta_grid=_grid(grid["beta"], "nsfd.grid.beta") if "beta" in grid else tuple(betas),
            kappa_grid=_grid(grid["kappa"], "nsfd.grid.kappa") if "kappa" in grid else tuple(kappas),
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"nsfd: {exc}") from None
    if nsfd.h <= 0 or nsfd.steps < 0:
        raise ConfigError("nsfd: need h > 0 and steps >= 0")

    tb = raw.get("train", {})
    _strict(tb, {"alpha", "iterations", "lr_start", "lr_end", "adam", "seed", "collocation"}, "train")
    adam = tb.get("adam", {})
    _strict(adam, {"beta1", "beta2", "epsilon"}, "train.adam")
    kw = {k: tb[k] for k in ("alpha", "iterations", "lr_start", "lr_end", "seed", "collocation") if k in tb}
    kw.update(adam)
    try:
        train = TrainConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"train: {exc}") from None

    bb = dict(raw.get("beds", {}))
    _strict(bb, {"levels", "alpha1", "alpha2", "fail_hi", "fail_lo", "trainer"}, "beds")
    trainer = bb.pop("trainer", "pinn")
    if trainer not in ("pinn", "toy"):
        raise ConfigError("beds.trainer must be 'pinn' or 'toy'")
    beds = BedsConfig(**bb)

    db = raw.get("data", {})
    _strict(db, {"path", "synth", "split"}, "data")
    synth = db.get("synth", {})
    _strict(synth, {"noise_rel", "seed", "start_week"}, "data.synth")
    if "path" in db and "synth" in db:
        raise ConfigError("data: give either path or synth, not both")
    split = None
    if "split" in db:
        _strict(db["split"], {"train", "validate"}, "data.split")
        try:
            split = SplitSpec(tuple(int(x) for x in db["split"]["train"]),
                              tuple(int(x) for x in db["split"]["validate"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"data.split: {exc}") from None
    noise = float(synth.get("noise_rel", 0.0))
    if noise < 0:
        raise ConfigError("data.synth.noise_rel must be >= 0")
    data = DataConfig(path=db.get("path"), noise_rel=noise, seed=int(synth.get("seed", 0)),
                      start_week=int(synth.get("start_week", 0)), split=split)

    out = raw.get("output_dir", "run")
    if not isinstance(out, str):
        raise ConfigError("output_dir must be a string")
    return RunConfig(model=model, nsfd=nsfd, train=train, beds=beds, beds_trainer=trainer,
                     data=data, output_dir=out)


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(raw)

