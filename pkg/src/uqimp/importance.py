"""Plug-in importance curves across unconditional quantiles, and the
brute-force shift-intervention estimate used to validate them."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .datagen import Dataset
from .density import (
    KdeConfig,
    QuantileGrid,
    ResidualTailModel,
    TailConfig,
    empirical_quantile,
    fit_residual_density,
    kde_eval,
)
from .predict import CounterfactualUnsupportedError, Predictor

__all__ = [
    "ImportanceCurve",
    "IllConditionedDensityError",
    "estimate_importance",
    "influence_function",
    "shift_oracle",
    "outcome_density_at",
]

MIN_DENSITY = 1e-12


class IllConditionedDensityError(ValueError):
    pass


@dataclass
class ImportanceCurve:
    taus: QuantileGrid
    beta: np.ndarray  # (K, p)
    f_y_at_q: np.ndarray
    q_hat: np.ndarray
    pruned: bool = False
    kept_set: frozenset[int] = frozenset()
    diagnostics: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.beta.shape[1]

    def with_pruning(self, dropped) -> "ImportanceCurve":
        dropped = sorted(set(int(j) for j in dropped))
        beta = self.beta.copy()
        beta[:, dropped] = 0.0
        kept = frozenset(range(self.p)) - frozenset(dropped)
        return replace(self, beta=beta, pruned=True, kept_set=kept)

    def to_dict(self) -> dict:
        return {
            "taus": list(self.taus.taus),
            "beta": self.beta.tolist(),
            "f_y_at_q": self.f_y_at_q.tolist(),
            "q_hat": self.q_hat.tolist(),
            "pruned": self.pruned,
            "kept_set": sorted(self.kept_set),
            "diagnostics": self.diagnostics,
        }


def outcome_density_at(y, q: float, kde: KdeConfig) -> float:
    b = kde.resolve(y)
    return float(kde_eval(y, [q], b, kde.kernel)[0])


def influence_function(y, q_tau: float, tau: float, f_y_at_q: float):
    """(tau - 1[y <= q_tau]) / f_Y(q_tau); vectorized over ``y``."""
    if not f_y_at_q > 0:
        raise ValueError("density at the quantile must be positive")
    y = np.asarray(y, dtype=float)
    val = (tau - (y <= q_tau)) / f_y_at_q
    return float(val) if val.ndim == 0 else val


def estimate_importance(
    data: Dataset,
    predictor: Predictor,
    grid: QuantileGrid | None = None,
    kde: KdeConfig | None = None,
    tail: TailConfig | None = None,
    residual_model: ResidualTailModel | None = None,
) -> ImportanceCurve:
    """beta(tau) = mean_i f_R(q_tau - h(x_i)) / f_Y(q_tau) * grad h(x_i).

    The residual density (KDE plus Hill-tail extrapolation) is fitted once
    and shared by every quantile level.
    """
    grid = grid or QuantileGrid()
    kde = kde or KdeConfig()
    tail = tail or TailConfig()
    if data.n < 30:
        raise ValueError(f"importance estimation needs n >= 30, got {data.n}")
    yhat = np.asarray(predictor.predict(data.X), dtype=float)
    grad = np.asarray(predictor.gradient(data.X), dtype=float)
    if residual_model is None:
        residual_model = fit_residual_density(data.y - yhat, kde, tail)
    K = len(grid)
    beta = np.zeros((K, data.p))
    f_y = np.zeros(K)
    q_hat = np.zeros(K)
    for k, tau in enumerate(grid):
        q = empirical_quantile(data.y, tau)
        fq = outcome_density_at(data.y, q, kde)
        if not fq >= MIN_DENSITY:
            raise IllConditionedDensityError(
                f"outcome density at q_{tau} = {q:.6g} is {fq:.3g} (< {MIN_DENSITY})"
            )
        w = residual_model(q - yhat) / fq
        beta[k] = w @ grad / data.n
        f_y[k] = fq
        q_hat[k] = q
    diag = {"residual_density": residual_model.diagnostics(),
            "predictor": predictor.descriptor}
    return ImportanceCurve(grid, beta, f_y, q_hat, diagnostics=diag)


def shift_oracle(
    data: Dataset,
    predictor: Predictor,
    tau: float,
    j: int,
    t: float | None = None,
    mc: int | None = None,
    seed: int = 0,
    central: bool = True,
) -> float:
    """Finite-difference derivative of the counterfactual tau-quantile under a
    location shift of feature ``j``.

    Counterfactual outcomes are h(x_a + t e_j) + R_b with row index a and
    residual index b drawn independently, so residuals are decoupled from
    the rows they came with. The same (a, b) draws are reused for every
    shift. ``t`` defaults to 0.05 * sd(X_j).
    """
    if not predictor.live:
        raise CounterfactualUnsupportedError(
            "external predictor cannot evaluate counterfactual rows"
        )
    n = data.n
    mc = n if mc is None else int(mc)
    if mc < n:
        raise ValueError("mc must be at least n")
    if t is None:
        t = 0.05 * float(np.std(data.X[:, j]))
    if t == 0:
        raise ValueError("shift size t must be nonzero")
    resid = data.y - predictor.predict(data.X)
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, n, size=mc)
    res = resid[rng.integers(0, n, size=mc)]
    Xs = data.X[rows]

    def q_at(step):
        Xt = Xs.copy()
        Xt[:, j] += step
        return empirical_quantile(predictor.predict(Xt) + res, tau)

    if central:
        return (q_at(t) - q_at(-t)) / (2 * t)
    return (q_at(t) - q_at(0.0)) / t
