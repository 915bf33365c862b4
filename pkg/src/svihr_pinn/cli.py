"""Command-line entry point ``svihr-pinn``.

Exit codes: 0 success, 1 configuration or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import mlp, pareto, svg
from .config import load_config
from .data_io import (
    SplitSpec,
    fmt17,
    load_csv,
    mse_val,
    normalize,
    save_normalization,
    synthesize,
    write_csv,
)
from .epi_model import COMPARTMENTS, derive_rates
from .errors import ConfigError, NumericalError, SvihrError
from .nsfd import fit_peak, simulate, write_trajectory_csv
from .pinn_train import predict, train, write_history_csv

log = logging.getLogger("svihr_pinn")

I_COL = COMPARTMENTS.index("I")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_text(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _load_data(cfg):
    if cfg.data.path:
        return load_csv(cfg.data.path)
    n = cfg.nsfd
    return synthesize(cfg.model, derive_rates(cfg.model), n.h, n.initial, n.steps,
                      noise_rel=cfg.data.noise_rel, seed=cfg.data.seed, start_week=cfg.data.start_week)


def _series(cfg):
    raw = _load_data(cfg)
    split = cfg.data.split or SplitSpec.full(raw)
    try:
        split.check_within(raw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return raw, normalize(raw, split)


# -- commands -----------------------------------------------------------------------


def cmd_simulate(cfg, out, args):
    n = cfg.nsfd
    run = simulate(cfg.model, derive_rates(cfg.model), n.h, n.initial, n.steps)
    write_trajectory_csv(run, os.path.join(out, "trajectory.csv"))
    weeks = [k * n.h for k in range(n.steps + 1)]
    text = svg.line_chart([("I (NSFD)", (weeks, list(run.infected)))],
                          "NSFD trajectory: infected", "week", "infected individuals")
    _write_text(os.path.join(out, "trajectory.svg"), text)
    return {"steps": n.steps, "peak_infected": float(run.infected.max())}


def cmd_synth(cfg, out, args):
    raw = _load_data(cfg)
    write_csv(raw, os.path.join(out, "data.csv"))
    return {"rows": len(raw)}


def cmd_fit(cfg, out, args):
    raw, series = _series(cfg)
    n = cfg.nsfd
    first = int(series.weeks[0])
    initial = raw.values[raw.weeks == first][0]
    steps = int(round(series.horizon_weeks / n.h))
    res = fit_peak(series, (n.beta_grid, n.kappa_grid), cfg.model, n.h, initial, steps)
    result = {"beta": res.beta, "kappa": res.kappa, "peak_error": res.peak_error,
              "grid_size": [len(n.beta_grid), len(n.kappa_grid)], "h": n.h, "steps": steps}
    _write_json(os.path.join(out, "fit.json"), result)
    return result


def _train_once(cfg, series, alpha):
    tc = replace(cfg.train, alpha=alpha)
    return train(tc, cfg.model, derive_rates(cfg.model), series)


def _prediction_svg(weeks, observed_i, predicted_i, train_end, title):
    return svg.line_chart(
        [("reported data", (list(weeks), list(observed_i))), ("PINN", (list(weeks), list(predicted_i)))],
        title, "week", "infected individuals", markers=["reported data"], vline=train_end,
    )


def cmd_train(cfg, out, args):
    raw, series = _series(cfg)
    result = _train_once(cfg, series, cfg.train.alpha)
    mlp.save_snapshot(result.params, os.path.join(out, "params.csv"), seed=cfg.train.seed, alpha=cfg.train.alpha)
    write_history_csv(result, os.path.join(out, "history.csv"))
    save_normalization(series, os.path.join(out, "normalization.json"))
    pred = predict(result.params, series.weeks, series)
    _write_text(os.path.join(out, "prediction.svg"), _prediction_svg(
        series.weeks, series.values[:, I_COL] * series.scales[I_COL], pred[:, I_COL],
        series.split.train_range[1], f"PINN prediction, alpha = {cfg.train.alpha:g}"))
    summary = {"alpha": cfg.train.alpha, "iterations": cfg.train.iterations, "seed": cfg.train.seed,
               "mse_u": result.final.mse_u, "mse_f": result.final.mse_f, "combined": result.final.combined}
    _write_json(os.path.join(out, "train.json"), summary)
    return summary


def cmd_validate(cfg, out, args):
    if not args.params:
        raise ConfigError("validate needs --params <snapshot>")
    raw, series = _series(cfg)
    params, meta = mlp.load_snapshot(args.params)
    pred = predict(params, series.weeks, series)[:, I_COL] / series.scales[I_COL]
    obs = series.values[:, I_COL]
    tm, vm = series.train_mask, series.validate_mask & ~series.train_mask
    result = {
        "alpha": meta["alpha"],
        "mse_val": mse_val(pred, obs),
        "mse_val_train": mse_val(pred[tm], obs[tm]),
        "mse_val_validate": mse_val(pred[vm], obs[vm]) if vm.any() else None,
        "train_range": list(series.split.train_range),
        "validate_range": list(series.split.validate_range),
    }
    _write_json(os.path.join(out, "validate.json"), result)
    _write_text(os.path.join(out, "validation.svg"), _prediction_svg(
        series.weeks, obs * series.scales[I_COL], pred * series.scales[I_COL],
        series.split.train_range[1], "Reported vs predicted infections"))
    return result


def toy_trainer(alpha):
    """Exact weighted-sum minimizer of ``(x - 1)^2`` (data) and ``(x + 1)^2`` (residual)."""
    x = 2.0 * alpha - 1.0
    return ((x + 1.0) ** 2, (x - 1.0) ** 2)


def cmd_beds(cfg, out, args):
    if cfg.beds_trainer == "toy":
        trainer = toy_trainer
    else:
        _, series = _series(cfg)

        def trainer(alpha):
            res = _train_once(cfg, series, alpha)
            return res.outcome

    front = pareto.beds_run(cfg.beds, trainer)
    pareto.write_front_csv(front.candidates, os.path.join(out, "front.csv"))
    pareto.write_front_csv(front.evaluated, os.path.join(out, "runs.csv"))
    for level in range(1, front.level + 1):
        pts = [pt for pt in front.evaluated if pt.status == "ok" and pt.level <= level]
        if not pts:
            continue
        nd = front.by_level(level)
        labels = {pt.y: f"{pt.alpha:.6g}" for pt in pts}
        _write_text(os.path.join(out, f"level_{level}.svg"), svg.scatter_front(
            [pt.y for pt in pts], [pt.y for pt in nd],
            f"Level {level}: {len(pts)} training runs", labels=labels))
    summary = {"levels": front.level, "runs": len(front.evaluated),
               "failed": sum(pt.status != "ok" for pt in front.evaluated)}
    if front.candidates:
        knee, rule = pareto.select_knee(front.candidates)
        summary["knee"] = {"alpha": knee.alpha, "mse_f": knee.y[0], "mse_u": knee.y[1], "run_id": knee.run_id}
        summary["selection"] = rule
    _write_json(os.path.join(out, "knee.json"), summary)
    return summary


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "train": cmd_train,
    "beds": cmd_beds,
    "validate": cmd_validate,
    "synth": cmd_synth,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="svihr-pinn", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--alpha", type=float, help="override train.alpha")
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("--seed", type=int, help="override train.seed")
    ap.add_argument("--params", help="parameter snapshot (validate)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.alpha is not None:
            overrides["alpha"] = args.alpha
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            cfg = replace(cfg, train=replace(cfg.train, **overrides))
        out = args.out or cfg.output_dir
        os.makedirs(out, exist_ok=True)
        result = COMMANDS[args.command](cfg, out, args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SvihrError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(result, sort_keys=True, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
