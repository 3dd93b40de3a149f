"""``uqimp`` command line: simulate, importance, prune, replicate, figure-oor.

Every subcommand reads an optional JSON config whose keys mirror the long
flag names (``tau_n_rule`` for ``--tau-n-rule``); flags given on the
command line override the file. Failures exit nonzero with a one-line JSON
object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .datagen import Dataset
from .density import KdeConfig, QuantileGrid, TailConfig
from .experiment import ExperimentConfig, fit_predictor, make_dataset, oor_curve, replicate, write_table
from .importance import estimate_importance
from .io import (
    read_dataset,
    read_external_predictions,
    write_curve_csv,
    write_dataset,
    write_json,
    write_kept_matrix,
)
from .predict import wrap_external
from .pruning import PruneConfig, prune_multi

log = logging.getLogger("uqimp")

PAPER_SCALE_REPS = 500

# flag dest -> default; None means "not given" so config values can fill in
DEFAULTS = {
    "model": "1",
    "error": "normal",
    "n": 1000,
    "p": 4,
    "reps": 50,
    "seed": 1,
    "grid": "0.1,0.3,0.5,0.7,0.9",
    "fitter": "poly",
    "alpha": 0.05,
    "tau_n_rule": "0.4",
    "bandwidth": None,
    "out": "out",
    "threads": 1,
    "paper_scale": False,
    "data": None,
}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}")


def parse_tau_n_rule(text) -> float:
    """Exponent a of tau_n = n^-a; accepts ``0.4`` or ``n^-0.4``."""
    s = str(text).replace(" ", "")
    if s.startswith("n^-"):
        s = s[3:]
    try:
        a = float(s)
    except ValueError:
        raise CliError(f"--tau-n-rule: expected an exponent like 0.4 or n^-0.4, got {text!r}") from None
    if not 0 < a < 1:
        raise CliError("--tau-n-rule exponent must lie in (0, 1)")
    return a


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file whose keys mirror the flags")
    p.add_argument("--out", help="output directory")
    p.add_argument("--grid", help="comma-separated quantile levels")
    p.add_argument("--tau-n-rule", dest="tau_n_rule", help="tail fraction exponent a in n^-a")
    p.add_argument("--bandwidth", type=float, help="fixed KDE bandwidth (default Silverman)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--fitter", help="ols | poly | mcp | external:PATH")


def _add_design(p: argparse.ArgumentParser):
    p.add_argument("--model", help="1-9 or 'linear'")
    p.add_argument("--error", choices=["normal", "t3", "exp2", "cauchy"])
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--seed", type=int, help="seed base; replication r uses seed + r")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="uqimp", description=__doc__.splitlines()[0])
    top.add_argument("-v", "--verbose", action="store_true")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="write a synthetic dataset")
    _add_common(s)
    _add_design(s)

    for name, helptext in (("importance", "unpruned importance curve"),
                           ("prune", "gate + backward pruning")):
        c = sub.add_parser(name, help=helptext)
        _add_common(c)
        c.add_argument("--data", help="dataset CSV (y,x1,...,xp)")

    r = sub.add_parser("replicate", help="desk-scale replication table")
    _add_common(r)
    _add_design(r)
    r.add_argument("--reps", type=int)
    r.add_argument("--threads", type=int)
    r.add_argument("--paper-scale", dest="paper_scale", action="store_true", default=None,
                   help=f"use {PAPER_SCALE_REPS} replications")

    f = sub.add_parser("figure-oor", help="out-of-range fraction on a 99-point tau grid")
    _add_common(f)
    _add_design(f)
    f.add_argument("--data", help="dataset CSV; simulated from the design flags if absent")
    return top


def resolve_options(args: argparse.Namespace) -> dict:
    """Defaults < config file < command-line flags."""
    opts = dict(DEFAULTS)
    if args.command == "figure-oor":
        opts.update(model="linear", fitter="ols")
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
        opts.update(cfg)
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            opts[key] = v
    if opts["paper_scale"]:
        opts["reps"] = PAPER_SCALE_REPS
    return opts


def _model(value):
    return "linear" if str(value) == "linear" else int(value)


def _grid(opts) -> tuple[float, ...]:
    g = opts["grid"]
    if isinstance(g, (list, tuple)):
        return QuantileGrid(tuple(g)).taus
    return QuantileGrid.parse(str(g)).taus


def _experiment(opts, fitter=None) -> ExperimentConfig:
    return ExperimentConfig(
        model=_model(opts["model"]),
        error=opts["error"],
        n=int(opts["n"]),
        p=int(opts["p"]),
        reps=int(opts["reps"]),
        seed_base=int(opts["seed"]),
        taus=_grid(opts),
        fitter=fitter or opts["fitter"],
        alpha=float(opts["alpha"]),
        tau_n_exponent=parse_tau_n_rule(opts["tau_n_rule"]),
        bandwidth=opts["bandwidth"],
        threads=int(opts["threads"]),
    )


def center_if_needed(data: Dataset) -> tuple[Dataset, bool]:
    """Center feature columns whose mean is far from zero.

    Pruning replaces a feature with a point mass at 0, which is mean
    imputation only for centered columns.
    """
    X = data.X
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    off = np.abs(mean) > 3.0 * np.maximum(sd, 1e-300) / np.sqrt(data.n)
    if not off.any():
        return data, False
    cols = ", ".join(f"x{j + 1}" for j in np.flatnonzero(off))
    warnings.warn(f"features not centered ({cols}); centering all feature columns")
    meta = dict(data.meta, centered_with=mean.tolist())
    return Dataset(X - mean, data.y, meta), True


def _load_for_curve(opts):
    if not opts["data"]:
        raise CliError("--data is required")
    data = read_dataset(opts["data"])
    fitter = str(opts["fitter"])
    if fitter.startswith("external:"):
        # stored predictions belong to the raw rows, so no centering here
        ext = read_external_predictions(fitter.split(":", 1)[1], data)
        return data, wrap_external(data, ext), False, "external"
    data, centered = center_if_needed(data)
    # user data: no design to generate, so no model-specific interactions
    cfg = _experiment(dict(opts, model="linear", p=data.p), fitter=fitter)
    return data, fit_predictor(cfg, data), centered, fitter


def _configs(opts):
    return (QuantileGrid(_grid(opts)), KdeConfig(bandwidth=opts["bandwidth"]),
            TailConfig(parse_tau_n_rule(opts["tau_n_rule"])))


def cmd_simulate(opts) -> dict:
    cfg = _experiment(opts, fitter="ols")
    data = make_dataset(cfg, 0)
    path = write_dataset(data, Path(opts["out"]) / "data.csv")
    return {"data": str(path), "n": data.n, "p": data.p}


def cmd_importance(opts) -> dict:
    data, pred, centered, fitter = _load_for_curve(opts)
    grid, kde, tail = _configs(opts)
    curve = estimate_importance(data, pred, grid, kde, tail)
    out = Path(opts["out"])
    csv_path = write_curve_csv(curve, out / "importance.csv")
    write_json({**curve.to_dict(), "fitter": fitter, "centered": centered}, out / "importance.json")
    return {"curve": str(csv_path)}


def cmd_prune(opts) -> dict:
    data, pred, centered, fitter = _load_for_curve(opts)
    grid, kde, tail = _configs(opts)
    curve = estimate_importance(data, pred, grid, kde, tail)
    report, pruned = prune_multi(data, pred, curve, PruneConfig(float(opts["alpha"]), grid), kde)
    out = Path(opts["out"])
    write_curve_csv(curve, out / "importance.csv")
    csv_path = write_curve_csv(pruned, out / "pruned.csv")
    write_json({**report.to_dict(), "fitter": fitter, "centered": centered}, out / "report.json")
    write_kept_matrix(report, data.p, out / "kept.csv")
    return {"pruned": str(csv_path), "dropped": sorted(report.dropped)}


def cmd_replicate(opts) -> dict:
    if str(opts["fitter"]).startswith("external:"):
        raise CliError("replicate needs a built-in fitter")
    cfg = _experiment(opts)
    summary = replicate(cfg)
    out = Path(opts["out"])
    path = write_table(summary, out / "table.csv")
    write_json({"config": cfg.to_dict(), **summary.to_dict()}, out / "summary.json")
    return {"table": str(path), "n_ok": summary.n_ok, "n_failed": summary.n_failed,
            "seconds_total": summary.seconds_total}


def cmd_figure_oor(opts) -> dict:
    if opts["data"]:
        data, pred, _, _ = _load_for_curve(opts)
    else:
        cfg = _experiment(opts)
        data = make_dataset(cfg, 0)
        pred = fit_predictor(cfg, data)
    taus, frac = oor_curve(data, pred)
    path = Path(opts["out"]) / "oor.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("tau,fraction\n")
        for t, f in zip(taus, frac):
            fh.write(f"{float(t)!r},{float(f)!r}\n")
    k = int(np.argmin(frac))
    return {"oor": str(path), "argmin_tau": float(taus[k]), "min_fraction": float(frac[k])}


COMMANDS = {
    "simulate": cmd_simulate,
    "importance": cmd_importance,
    "prune": cmd_prune,
    "replicate": cmd_replicate,
    "figure-oor": cmd_figure_oor,
}


def _fail(exc: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except CliError as exc:
        return _fail(exc, 2)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve_options(args)
        result = COMMANDS[args.command](opts)
    except CliError as exc:
        return _fail(exc, 2)
    except Exception as exc:  # surfaced as JSON, never a traceback
        log.debug("command failed", exc_info=True)
        return _fail(exc, 1)
    print(json.dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
