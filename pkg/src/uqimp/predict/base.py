"""Black-box predictor contract plus the least-squares baseline and the
adapters for externally produced predictions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..datagen import Dataset

__all__ = [
    "Predictor",
    "LinearPredictor",
    "CallablePredictor",
    "ExternalPredictions",
    "ExternalPredictor",
    "RankDeficientError",
    "CounterfactualUnsupportedError",
    "fit_ols",
    "wrap_external",
    "finite_difference_gradient",
]


class RankDeficientError(np.linalg.LinAlgError):
    pass


class CounterfactualUnsupportedError(RuntimeError):
    pass


class Predictor:
    """Fitted regression function h(x) with input gradients.

    Subclasses implement ``_predict`` and ``_gradient`` on 2-D arrays; the
    public methods also accept a single 1-D row.
    """

    descriptor: str = "predictor"
    #: False when the predictor can only replay stored training outputs.
    live: bool = True

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return float(self._predict(X[None, :])[0])
        return self._predict(X)

    def gradient(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return self._gradient(X[None, :])[0]
        return self._gradient(X)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _gradient(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"descriptor": self.descriptor}


def finite_difference_gradient(f: Callable[[np.ndarray], np.ndarray], X: np.ndarray,
                               rel_step: float = 1e-5) -> np.ndarray:
    """Central differences of a vectorized ``f`` with step rel_step*max(1, |x_j|)."""
    X = np.asarray(X, dtype=float)
    G = np.empty_like(X)
    for j in range(X.shape[1]):
        h = rel_step * np.maximum(1.0, np.abs(X[:, j]))
        Xp = X.copy()
        Xm = X.copy()
        Xp[:, j] += h
        Xm[:, j] -= h
        G[:, j] = (f(Xp) - f(Xm)) / (2 * h)
    return G


class LinearPredictor(Predictor):
    def __init__(self, intercept: float, coef: np.ndarray, descriptor: str = "ols"):
        self.intercept = float(intercept)
        self.coef = np.asarray(coef, dtype=float)
        self.descriptor = descriptor

    def _predict(self, X):
        return self.intercept + X @ self.coef

    def _gradient(self, X):
        return np.broadcast_to(self.coef, X.shape).copy()

    def to_dict(self):
        return {
            "descriptor": self.descriptor,
            "intercept": self.intercept,
            "coef": self.coef.tolist(),
        }


class CallablePredictor(Predictor):
    """Wraps arbitrary vectorized callables; gradients fall back to central
    finite differences when no analytic gradient is supplied."""

    def __init__(self, predict_fn, gradient_fn=None, descriptor: str = "callable"):
        self._f = predict_fn
        self._g = gradient_fn
        self.descriptor = descriptor

    def _predict(self, X):
        return np.asarray(self._f(X), dtype=float).ravel()

    def _gradient(self, X):
        if self._g is not None:
            return np.asarray(self._g(X), dtype=float)
        return finite_difference_gradient(self._predict, X)


def fit_ols(data: Dataset) -> LinearPredictor:
    n, p = data.X.shape
    D = np.column_stack([np.ones(n), data.X])
    if n <= p + 1:
        raise RankDeficientError(f"OLS needs n > p + 1 (n={n}, p={p})")
    coef, _, rank, _ = np.linalg.lstsq(D, data.y, rcond=None)
    if rank < p + 1:
        raise RankDeficientError(
            f"design matrix is rank deficient (rank {rank} < {p + 1} columns)"
        )
    return LinearPredictor(coef[0], coef[1:], descriptor="ols")


@dataclass
class ExternalPredictions:
    yhat: np.ndarray
    grad: np.ndarray
    source: str = "external"

    def __post_init__(self):
        self.yhat = np.asarray(self.yhat, dtype=float).ravel()
        self.grad = np.atleast_2d(np.asarray(self.grad, dtype=float))
        if self.grad.shape[0] != self.yhat.shape[0]:
            raise ValueError("yhat and grad must have the same number of rows")


class ExternalPredictor(Predictor):
    """Replays stored predictions/gradients for the training rows only."""

    live = False

    def __init__(self, X: np.ndarray, ext: ExternalPredictions):
        self._X = X
        self._ext = ext
        self.descriptor = f"external:{ext.source}"

    def _check_rows(self, X):
        if X.shape != self._X.shape or not np.array_equal(X, self._X):
            raise CounterfactualUnsupportedError(
                "external predictor cannot evaluate counterfactual rows"
            )

    def _predict(self, X):
        self._check_rows(X)
        return self._ext.yhat.copy()

    def _gradient(self, X):
        self._check_rows(X)
        return self._ext.grad.copy()


def wrap_external(data: Dataset, ext: ExternalPredictions) -> ExternalPredictor:
    if ext.yhat.shape[0] != data.n:
        raise ValueError(
            f"external predictions have {ext.yhat.shape[0]} rows, dataset has {data.n}"
        )
    if ext.grad.shape != data.X.shape:
        raise ValueError(
            f"external gradient shape {ext.grad.shape} does not match features {data.X.shape}"
        )
    return ExternalPredictor(data.X, ext)
