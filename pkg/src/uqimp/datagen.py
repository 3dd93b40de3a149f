"""Synthetic benchmark data: AR(1)-correlated Gaussian features, the nine
outcome models used in the low/high-dimensional experiments, and four
error laws.

All samplers are pure functions of their seed (numpy PCG64 streams), so a
replication indexed by ``r`` is reproducible regardless of how replications
are scheduled.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = [
    "ErrorKind",
    "ErrorLaw",
    "FeatureSpec",
    "ModelSpec",
    "Dataset",
    "sample_features",
    "sample_errors",
    "outcome_mean",
    "error_scale",
    "generate",
    "generate_linear_benchmark",
    "MODEL_IDS",
]

MODEL_IDS = tuple(range(1, 10))


class ErrorKind(str, enum.Enum):
    NORMAL = "normal"
    T3 = "t3"
    EXP2 = "exp2"
    CAUCHY = "cauchy"
    # degenerate law (eps == 0), only meant for checking the outcome maps
    ZERO = "zero"


@dataclass(frozen=True)
class ErrorLaw:
    kind: ErrorKind = ErrorKind.NORMAL
    # "Exp(2)" is read as rate 2 (mean 0.5); "mean" switches to mean 2.
    exp_parameterization: str = "rate"

    def __post_init__(self):
        object.__setattr__(self, "kind", ErrorKind(self.kind))
        if self.exp_parameterization not in ("rate", "mean"):
            raise ValueError("exp_parameterization must be 'rate' or 'mean'")


@dataclass(frozen=True)
class FeatureSpec:
    p: int
    rho: float = 0.5
    seed: int = 5

    def __post_init__(self):
        if int(self.p) < 1:
            raise ValueError(f"feature count p must be >= 1, got {self.p}")
        if not abs(self.rho) < 1:
            raise ValueError(f"|rho| must be < 1, got {self.rho}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def covariance(self) -> np.ndarray:
        idx = np.arange(self.p)
        return self.rho ** np.abs(idx[:, None] - idx[None, :])


@dataclass(frozen=True)
class ModelSpec:
    id: int

    def __post_init__(self):
        if self.id not in MODEL_IDS:
            raise ValueError(f"model id must be in 1..9, got {self.id}")

    @property
    def heteroscedastic(self) -> bool:
        return self.id >= 7

    @property
    def relevant(self) -> tuple[int, ...]:
        """0-based indices of features entering the outcome map."""
        if self.id in (1, 2, 3, 9):
            return (0, 1)
        return (0, 1, 2)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-D array")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]} entries"
            )
        if self.X.shape[0] < 2:
            raise ValueError("a dataset needs at least 2 rows")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset contains non-finite values")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def sample_features(spec: FeatureSpec, n: int) -> np.ndarray:
    """Draw ``n`` rows from N(0, Sigma) with Sigma[j, k] = rho**|j - k|.

    Uses the AR(1) recursion x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j, which
    reproduces the covariance exactly without factorizing Sigma.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(spec.seed)
    Z = rng.standard_normal((n, spec.p))
    X = np.empty_like(Z)
    X[:, 0] = Z[:, 0]
    innov = np.sqrt(1.0 - spec.rho**2)
    for j in range(1, spec.p):
        X[:, j] = spec.rho * X[:, j - 1] + innov * Z[:, j]
    return X


def sample_errors(law: ErrorLaw, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    kind = law.kind
    if kind is ErrorKind.NORMAL:
        return rng.standard_normal(n)
    if kind is ErrorKind.T3:
        return rng.standard_t(3, size=n)
    if kind is ErrorKind.EXP2:
        scale = 0.5 if law.exp_parameterization == "rate" else 2.0
        return rng.exponential(scale, size=n)
    if kind is ErrorKind.CAUCHY:
        return rng.standard_cauchy(n)
    if kind is ErrorKind.ZERO:
        return np.zeros(n)
    raise ValueError(f"unknown error law {kind!r}")


def outcome_mean(model_id: int, X: np.ndarray) -> np.ndarray:
    """Noise-free part of the outcome map for model ``model_id``."""
    ModelSpec(model_id)
    x1, x2 = X[:, 0], X[:, 1]
    if model_id == 1:
        return (1 + 2 * x1) ** 2 - 5 * x2
    if model_id == 2:
        return 1 + np.exp(2 * x1) * (np.abs(x1) <= 1) - 5 * x2
    if model_id in (3, 9):
        return 1 + 2 * np.cos(x1) - 5 * x2
    x3 = X[:, 2]
    if model_id in (4, 7):
        return (1 + 2 * x1 + x3) ** 2 - 5 * x2
    if model_id in (5, 8):
        return 1 + np.exp(2 * x1 + x3) * (np.abs(x1) <= 1) - 5 * x2
    # model 6
    return (1 + 2 * np.cos(x1) + x3) ** 2 - 5 * x2


def error_scale(model_id: int, X: np.ndarray) -> np.ndarray:
    if model_id >= 7:
        return np.exp(X[:, 0])
    return np.ones(X.shape[0])


def generate(
    model: ModelSpec,
    features: FeatureSpec,
    law: ErrorLaw,
    n: int,
    error_seed: int = 1,
) -> Dataset:
    """Simulate ``n`` observations from one of the nine benchmark models.

    Columns beyond X_4 are pure noise features. Features use
    ``features.seed``; errors use ``error_seed`` so that replications can
    share a fixed design while redrawing the noise.
    """
    if not isinstance(model, ModelSpec):
        model = ModelSpec(int(model))
    if features.p < 4:
        raise ValueError(
            f"model {model.id} needs p >= 4 (X1..X3 plus irrelevant X4), got p={features.p}"
        )
    X = sample_features(features, n)
    eps = sample_errors(law, n, error_seed)
    y = outcome_mean(model.id, X) + error_scale(model.id, X) * eps
    meta = {
        "model": model.id,
        "n": n,
        "p": features.p,
        "rho": features.rho,
        "feature_seed": features.seed,
        "error_seed": error_seed,
        "error_law": law.kind.value,
        "exp_parameterization": law.exp_parameterization,
    }
    return Dataset(X, y, meta)


def generate_linear_benchmark(
    features: FeatureSpec,
    law: ErrorLaw,
    n: int,
    error_seed: int = 1,
) -> Dataset:
    """Linear design Y = 1 - 2 X_1 + 5 X_2 + eps (out-of-range benchmark)."""
    if features.p < 2:
        raise ValueError("the linear benchmark needs p >= 2")
    X = sample_features(features, n)
    eps = sample_errors(law, n, error_seed)
    y = 1 - 2 * X[:, 0] + 5 * X[:, 1] + eps
    meta = {
        "model": "linear",
        "n": n,
        "p": features.p,
        "rho": features.rho,
        "feature_seed": features.seed,
        "error_seed": error_seed,
        "error_law": law.kind.value,
        "exp_parameterization": law.exp_parameterization,
    }
    return Dataset(X, y, meta)
