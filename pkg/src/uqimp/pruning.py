"""Goodness-of-fit gate and stepwise backward pruning of importance curves.

Every test compares a marginal-quantile estimate assembled from the
recentered influence function against the plain empirical quantile, with
variance tau (1 - tau) / (n f_Y(q)^2).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .datagen import Dataset
from .density import KdeConfig, QuantileGrid, empirical_quantile
from .importance import ImportanceCurve, outcome_density_at
from .predict import CounterfactualUnsupportedError, Predictor

__all__ = [
    "PruneConfig",
    "DensityContext",
    "QuantileTest",
    "TraceStep",
    "TauPruning",
    "PruningReport",
    "density_context",
    "marginal_quantile_full",
    "marginal_quantile_reduced",
    "quantile_test",
    "gof_test",
    "prune_at_tau",
    "prune_multi",
    "prun_metric",
]


@dataclass(frozen=True)
class PruneConfig:
    alpha: float = 0.05
    grid: QuantileGrid = field(default_factory=QuantileGrid)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class DensityContext:
    """Quantities shared by the full and every reduced estimator at one tau."""
    tau: float
    q_hat: float
    f_y_at_q: float
    sorted_residuals: np.ndarray
    yhat: np.ndarray

    @property
    def n(self) -> int:
        return self.sorted_residuals.size

    @property
    def c1(self) -> float:
        return 1.0 / self.f_y_at_q

    @property
    def c2(self) -> float:
        return self.q_hat - self.c1 * (1 - self.tau)

    @property
    def variance(self) -> float:
        return self.tau * (1 - self.tau) / (self.n * self.f_y_at_q**2)


@dataclass(frozen=True)
class QuantileTest:
    statistic: float
    p_value: float
    q_estimate: float
    q_hat: float
    variance: float

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "q_estimate": self.q_estimate,
            "q_hat": self.q_hat,
            "variance": self.variance,
        }


@dataclass(frozen=True)
class TraceStep:
    feature: int
    zeroed: tuple[int, ...]
    test: QuantileTest
    removed: bool


@dataclass
class TauPruning:
    tau: float
    gof: QuantileTest
    gof_passed: bool
    trace: list[TraceStep]
    kept: frozenset[int]
    dropped: frozenset[int]

    def to_dict(self):
        return {
            "tau": self.tau,
            "gof": self.gof.to_dict(),
            "gof_passed": self.gof_passed,
            "trace": [
                {"feature": s.feature, "zeroed": list(s.zeroed), "removed": s.removed,
                 **s.test.to_dict()}
                for s in self.trace
            ],
            "kept": sorted(self.kept),
            "dropped": sorted(self.dropped),
        }


@dataclass
class PruningReport:
    per_tau: list[TauPruning]
    kept: frozenset[int]
    dropped: frozenset[int]
    alpha: float

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "per_tau": [r.to_dict() for r in self.per_tau],
            "kept": sorted(self.kept),
            "dropped": sorted(self.dropped),
        }

    def kept_matrix(self, p: int) -> np.ndarray:
        """(K, p) boolean matrix of per-tau keep decisions."""
        M = np.zeros((len(self.per_tau), p), dtype=bool)
        for k, r in enumerate(self.per_tau):
            M[k, sorted(r.kept)] = True
        return M


def density_context(data: Dataset, predictor: Predictor, tau: float,
                    kde: KdeConfig | None = None, yhat=None) -> DensityContext:
    kde = kde or KdeConfig()
    if yhat is None:
        yhat = np.asarray(predictor.predict(data.X), dtype=float)
    q = empirical_quantile(data.y, tau)
    fq = outcome_density_at(data.y, q, kde)
    if not fq > 0:
        raise ValueError(f"outcome density at q_{tau} is zero")
    return DensityContext(tau, q, fq, np.sort(data.y - yhat), yhat)


def _survival_double_sum(sorted_resid: np.ndarray, cut: np.ndarray) -> float:
    # (1/n^2) sum_i sum_i' 1[R_i' > cut_i] via binary search on sorted residuals
    n = sorted_resid.size
    above = n - np.searchsorted(sorted_resid, cut, side="right")
    return float(above.sum()) / (n * cut.size)


def _assemble(ctx: DensityContext, yhat: np.ndarray) -> float:
    s = _survival_double_sum(ctx.sorted_residuals, ctx.q_hat - yhat)
    return ctx.c1 * s + ctx.c2


def marginal_quantile_full(data: Dataset, predictor: Predictor, tau: float,
                           ctx: DensityContext | None) -> float:
    if ctx is None:
        raise ValueError("density context is required")
    return _assemble(ctx, ctx.yhat)


def _zeroed_rows(X: np.ndarray, zeroed) -> np.ndarray:
    Xt = X.copy()
    Xt[:, list(zeroed)] = 0.0
    return Xt


def marginal_quantile_reduced(data: Dataset, predictor: Predictor, tau: float,
                              zeroed, ctx: DensityContext | None) -> float:
    """Same estimator with the ``zeroed`` feature columns set to a point mass at 0."""
    if ctx is None:
        raise ValueError("density context is required")
    if not predictor.live:
        raise CounterfactualUnsupportedError(
            "external predictor cannot evaluate counterfactual rows"
        )
    zeroed = list(zeroed)
    if not zeroed:
        return _assemble(ctx, ctx.yhat)
    yhat = np.asarray(predictor.predict(_zeroed_rows(data.X, zeroed)), dtype=float)
    return _assemble(ctx, yhat)


def quantile_test(q_estimate: float, ctx: DensityContext) -> QuantileTest:
    v = ctx.variance
    T = (q_estimate - ctx.q_hat) / np.sqrt(v)
    p = float(2 * norm.sf(abs(T)))
    return QuantileTest(float(T), p, float(q_estimate), ctx.q_hat, v)


def gof_test(data: Dataset, predictor: Predictor, tau: float,
             ctx: DensityContext | None = None, alpha: float = 0.05,
             kde: KdeConfig | None = None) -> QuantileTest:
    if ctx is None:
        ctx = density_context(data, predictor, tau, kde)
    return quantile_test(marginal_quantile_full(data, predictor, tau, ctx), ctx)


def prune_at_tau(data: Dataset, predictor: Predictor, beta_init, tau: float,
                 cfg: PruneConfig | None = None, ctx: DensityContext | None = None,
                 kde: KdeConfig | None = None):
    """Backward elimination at one quantile level.

    Features with exactly zero initial importance are dropped outright.
    The rest are tested weakest first (ascending |beta_init|); each test
    zeroes everything ranked below the candidate plus the candidate itself,
    and the loop stops at the first rejection.

    Returns ``(kept, dropped, trace)``.
    """
    cfg = cfg or PruneConfig()
    beta_init = np.asarray(beta_init, dtype=float)
    p = beta_init.size
    if ctx is None:
        ctx = density_context(data, predictor, tau, kde)
    order = np.argsort(np.abs(beta_init), kind="stable")
    dropped = [int(j) for j in order if beta_init[j] == 0.0]
    candidates = [int(j) for j in order if beta_init[j] != 0.0]
    trace: list[TraceStep] = []
    for j in candidates:
        zeroed = tuple(dropped + [j])
        q_red = marginal_quantile_reduced(data, predictor, tau, zeroed, ctx)
        test = quantile_test(q_red, ctx)
        removed = test.p_value > cfg.alpha
        trace.append(TraceStep(j, zeroed, test, removed))
        if not removed:
            break
        dropped.append(j)
    dropped_set = frozenset(dropped)
    return frozenset(range(p)) - dropped_set, dropped_set, trace


def prune_multi(data: Dataset, predictor: Predictor, curve: ImportanceCurve,
                cfg: PruneConfig | None = None, kde: KdeConfig | None = None):
    """Gate + backward elimination at every tau of ``curve``; a feature is
    dropped only if it is dropped at all levels.

    Returns ``(report, pruned_curve)``.
    """
    cfg = cfg or PruneConfig()
    if curve.pruned:
        raise ValueError("curve is already pruned")
    if not predictor.live:
        raise CounterfactualUnsupportedError(
            "external predictor cannot evaluate counterfactual rows"
        )
    p = curve.p
    everything = frozenset(range(p))
    yhat = np.asarray(predictor.predict(data.X), dtype=float)
    per_tau = []
    for k, tau in enumerate(curve.taus):
        ctx = density_context(data, predictor, tau, kde, yhat=yhat)
        gof = gof_test(data, predictor, tau, ctx)
        if gof.p_value > cfg.alpha:
            kept, dropped, trace = prune_at_tau(data, predictor, curve.beta[k], tau, cfg, ctx)
            per_tau.append(TauPruning(tau, gof, True, trace, kept, dropped))
        else:
            per_tau.append(TauPruning(tau, gof, False, [], everything, frozenset()))
    final_dropped = frozenset.intersection(*(r.dropped for r in per_tau))
    report = PruningReport(per_tau, everything - final_dropped, final_dropped, cfg.alpha)
    return report, curve.with_pruning(final_dropped)


def prun_metric(init_nonzeros, final_nonzeros, p: int, R: int | None = None) -> float:
    """Percentage of near-zero entries (features 3..p) removed by pruning,
    averaged over replications."""
    init = np.atleast_1d(np.asarray(init_nonzeros, dtype=float))
    final = np.atleast_1d(np.asarray(final_nonzeros, dtype=float))
    if init.shape != final.shape:
        raise ValueError("per-replication counts must align")
    R = init.size if R is None else int(R)
    if p <= 2 or R < 1:
        raise ValueError("prun needs p > 2 and at least one replication")
    value = 100.0 * float(np.sum(init - final)) / (R * (p - 2))
    if value < 0:
        warnings.warn("negative prun: pruning increased the number of nonzero entries")
    return value
