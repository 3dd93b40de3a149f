"""Replication harness: simulate, fit, estimate, prune, aggregate."""

from __future__ import annotations

import csv
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .datagen import (
    Dataset,
    ErrorLaw,
    FeatureSpec,
    ModelSpec,
    generate,
    generate_linear_benchmark,
)
from .density import KdeConfig, QuantileGrid, TailConfig, out_of_range_fraction
from .importance import estimate_importance
from .predict import (
    BasisConfig,
    McpConfig,
    fit_additive_poly,
    fit_mcp_additive,
    fit_ols,
)
from .pruning import PruneConfig, prun_metric, prune_multi

__all__ = [
    "ExperimentConfig",
    "RepResult",
    "ReplicationSummary",
    "make_dataset",
    "fit_predictor",
    "run_replication",
    "replicate",
    "oor_curve",
    "write_table",
    "read_table",
]

log = logging.getLogger(__name__)

FITTERS = ("ols", "poly", "mcp")


@dataclass
class ExperimentConfig:
    model: int | str = 1
    error: str = "normal"
    n: int = 1000
    p: int = 4
    reps: int = 50
    seed_base: int = 1
    feature_seed: int = 5
    rho: float = 0.5
    taus: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    fitter: str = "poly"
    alpha: float = 0.05
    tau_n_exponent: float = 0.4
    bandwidth: float | None = None
    degree: int = 3
    # None -> X1*X3 tensor product for models 4-8, nothing otherwise
    interactions: tuple[tuple[int, int], ...] | None = None
    exp_parameterization: str = "rate"
    threads: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.model != "linear":
            self.model = ModelSpec(int(self.model)).id
            if self.p < 4:
                raise ValueError(f"model {self.model} needs p >= 4, got p={self.p}")
        if self.fitter not in FITTERS:
            raise ValueError(f"fitter must be one of {FITTERS}")
        self.taus = QuantileGrid(tuple(self.taus)).taus
        PruneConfig(self.alpha)
        ErrorLaw(self.error, self.exp_parameterization)

    @property
    def grid(self) -> QuantileGrid:
        return QuantileGrid(self.taus)

    @property
    def kde(self) -> KdeConfig:
        return KdeConfig(bandwidth=self.bandwidth)

    @property
    def tail(self) -> TailConfig:
        return TailConfig(self.tau_n_exponent)

    def basis(self) -> BasisConfig:
        inter = self.interactions
        if inter is None:
            inter = ((0, 2),) if self.model in (4, 5, 6, 7, 8) else ()
        return BasisConfig(self.degree, tuple(inter))

    def to_dict(self):
        return asdict(self)


def make_dataset(cfg: ExperimentConfig, rep: int = 0) -> Dataset:
    feats = FeatureSpec(cfg.p, cfg.rho, cfg.feature_seed)
    law = ErrorLaw(cfg.error, cfg.exp_parameterization)
    seed = cfg.seed_base + rep
    if cfg.model == "linear":
        return generate_linear_benchmark(feats, law, cfg.n, seed)
    return generate(ModelSpec(cfg.model), feats, law, cfg.n, seed)


def fit_predictor(cfg: ExperimentConfig, data: Dataset):
    if cfg.fitter == "ols":
        return fit_ols(data)
    if cfg.fitter == "poly":
        return fit_additive_poly(data, cfg.basis())
    return fit_mcp_additive(data, cfg.basis(), McpConfig())


@dataclass
class RepResult:
    rep: int
    seed: int
    ok: bool
    beta_init: np.ndarray | None = None
    beta: np.ndarray | None = None
    gof_passed: list[bool] = field(default_factory=list)
    dropped: list[int] = field(default_factory=list)
    seconds: float = 0.0
    error: str = ""


def run_replication(cfg: ExperimentConfig, rep: int) -> RepResult:
    seed = cfg.seed_base + rep
    t0 = time.perf_counter()
    try:
        data = make_dataset(cfg, rep)
        pred = fit_predictor(cfg, data)
        curve = estimate_importance(data, pred, cfg.grid, cfg.kde, cfg.tail)
        report, pruned = prune_multi(data, pred, curve, PruneConfig(cfg.alpha, cfg.grid), cfg.kde)
    except Exception as exc:  # failed reps are counted, not fatal
        log.warning("replication %d (seed %d) failed: %s", rep, seed, exc)
        return RepResult(rep, seed, False, seconds=time.perf_counter() - t0,
                         error=f"{type(exc).__name__}: {exc}")
    return RepResult(
        rep, seed, True, curve.beta, pruned.beta,
        [r.gof_passed for r in report.per_tau], sorted(report.dropped),
        time.perf_counter() - t0,
    )


@dataclass
class ReplicationSummary:
    taus: tuple[float, ...]
    p: int
    mean: np.ndarray  # (K, p)
    sd: np.ndarray  # (K, p)
    zero_rate: np.ndarray  # (K, p) share of reps with an exact zero
    prun: np.ndarray  # (K,)
    gof_pass_rate: np.ndarray  # (K,)
    n_ok: int
    n_failed: int
    seconds_mean: float
    seconds_total: float
    results: list[RepResult] = field(default_factory=list, repr=False)

    def betas(self) -> np.ndarray:
        """(reps_ok, K, p) stack of pruned curves."""
        return np.stack([r.beta for r in self.results if r.ok])

    def to_dict(self):
        return {
            "taus": list(self.taus),
            "p": self.p,
            "mean": self.mean,
            "sd": self.sd,
            "zero_rate": self.zero_rate,
            "prun": self.prun,
            "gof_pass_rate": self.gof_pass_rate,
            "n_ok": self.n_ok,
            "n_failed": self.n_failed,
            "seconds_mean": self.seconds_mean,
            "seconds_total": self.seconds_total,
            "failures": [
                {"rep": r.rep, "seed": r.seed, "error": r.error} for r in self.results if not r.ok
            ],
        }


def _summarize(cfg: ExperimentConfig, results: list[RepResult], wall: float) -> ReplicationSummary:
    ok = [r for r in results if r.ok]
    K = len(cfg.taus)
    if not ok:
        raise RuntimeError(f"all {len(results)} replications failed; first error: {results[0].error}")
    B = np.stack([r.beta for r in ok])
    B0 = np.stack([r.beta_init for r in ok])
    if len(ok) == 1:
        warnings.warn("a single successful replication: standard deviations reported as 0")
        sd = np.zeros((K, cfg.p))
    else:
        sd = B.std(axis=0, ddof=1)
    prun = np.zeros(K)
    if cfg.p > 2:
        for k in range(K):
            init_nz = np.count_nonzero(B0[:, k, 2:], axis=1)
            final_nz = np.count_nonzero(B[:, k, 2:], axis=1)
            prun[k] = prun_metric(init_nz, final_nz, cfg.p, len(ok))
    return ReplicationSummary(
        cfg.taus, cfg.p, B.mean(axis=0), sd, (B == 0.0).mean(axis=0), prun,
        np.mean([r.gof_passed for r in ok], axis=0),
        len(ok), len(results) - len(ok),
        float(np.mean([r.seconds for r in ok])), wall, results,
    )


def _run_one(args):
    cfg, rep = args
    return run_replication(cfg, rep)


def replicate(cfg: ExperimentConfig) -> ReplicationSummary:
    """Run ``cfg.reps`` replications (seed_base + r) and aggregate them.

    Each replication is self-contained, so results do not depend on
    ``cfg.threads``.
    """
    t0 = time.perf_counter()
    jobs = [(cfg, r) for r in range(cfg.reps)]
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    return _summarize(cfg, results, time.perf_counter() - t0)


def oor_curve(data: Dataset, predictor, taus=None) -> tuple[np.ndarray, np.ndarray]:
    """Out-of-range fraction on a tau grid (default 0.01, ..., 0.99)."""
    taus = np.round(np.arange(1, 100) / 100, 2) if taus is None else np.asarray(taus)
    frac = np.array([out_of_range_fraction(data, predictor, t) for t in taus])
    return taus, frac


def _col(tau: float, j: int) -> str:
    return f"tau{tau!r}_beta{j + 1}"


def write_table(summary: ReplicationSummary, path) -> Path:
    """Wide table: rows mean/sd/zero_rate, columns tau-major then feature."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [_col(t, j) for t in summary.taus for j in range(summary.p)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stat"] + cols)
        for name in ("mean", "sd", "zero_rate"):
            M = getattr(summary, name)
            w.writerow([name] + [repr(float(v)) for v in M.ravel()])
        w.writerow(["prun"] + [repr(float(summary.prun[k])) for k in range(len(summary.taus))
                               for _ in range(summary.p)])
    return path


def read_table(path) -> dict:
    """Inverse of :func:`write_table`: {stat: (K, p) array} plus taus."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0][1:]
    taus, feats = [], []
    for h in header:
        t, b = h[3:].split("_beta")
        taus.append(float(t))
        feats.append(int(b))
    utaus = sorted(set(taus))
    p = max(feats)
    out = {"taus": tuple(utaus)}
    for row in rows[1:]:
        out[row[0]] = np.array([float(v) for v in row[1:]]).reshape(len(utaus), p)
    out["prun"] = out["prun"][:, 0]
    return out
