"""Additive polynomial basis (optionally with tensor-product pairs) and its
unpenalized least-squares fit."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..datagen import Dataset
from .base import Predictor, RankDeficientError

__all__ = ["BasisConfig", "PolyBasis", "AdditivePolyPredictor", "fit_additive_poly"]


@dataclass(frozen=True)
class BasisConfig:
    degree: int = 3
    # 0-based feature index pairs that get a full degree x degree tensor product
    interactions: tuple[tuple[int, int], ...] = field(default_factory=tuple)
    standardize: bool = True

    def __post_init__(self):
        if int(self.degree) < 1:
            raise ValueError("degree must be >= 1")
        pairs = tuple((int(a), int(b)) for a, b in self.interactions)
        for a, b in pairs:
            if a == b or a < 0 or b < 0:
                raise ValueError(f"invalid interaction pair {(a, b)}")
        object.__setattr__(self, "interactions", pairs)

    def n_columns(self, p: int) -> int:
        """Basis columns excluding the intercept."""
        return p * self.degree + len(self.interactions) * self.degree**2


class PolyBasis:
    """Column map  x -> [z_j^k]_{j,k} ++ [z_a^k z_b^l]  with z = (x - mean)/scale."""

    def __init__(self, cfg: BasisConfig, mean: np.ndarray, scale: np.ndarray):
        self.cfg = cfg
        self.mean = np.asarray(mean, dtype=float)
        self.scale = np.asarray(scale, dtype=float)
        self.p = self.mean.shape[0]
        for a, b in cfg.interactions:
            if max(a, b) >= self.p:
                raise ValueError(f"interaction {(a, b)} out of range for p={self.p}")

    @classmethod
    def from_data(cls, cfg: BasisConfig, X: np.ndarray) -> "PolyBasis":
        p = X.shape[1]
        if cfg.standardize:
            mean = X.mean(axis=0)
            scale = X.std(axis=0)
            scale = np.where(scale > 0, scale, 1.0)
        else:
            mean, scale = np.zeros(p), np.ones(p)
        return cls(cfg, mean, scale)

    @property
    def n_columns(self) -> int:
        return self.cfg.n_columns(self.p)

    def column_owner(self) -> list[tuple[int, ...]]:
        """Raw features each basis column depends on."""
        d = self.cfg.degree
        owners = [(j,) for j in range(self.p) for _ in range(d)]
        for a, b in self.cfg.interactions:
            owners.extend([(a, b)] * d * d)
        return owners

    def _powers(self, Z: np.ndarray) -> np.ndarray:
        # P[k] = Z**k for k = 0..degree
        d = self.cfg.degree
        P = np.empty((d + 1,) + Z.shape)
        P[0] = 1.0
        for k in range(1, d + 1):
            P[k] = P[k - 1] * Z
        return P

    def design(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        d = self.cfg.degree
        Z = (X - self.mean) / self.scale
        P = self._powers(Z)
        cols = np.empty((n, self.n_columns))
        # additive block: column j*d + (k-1) holds z_j^k
        cols[:, : self.p * d] = P[1:].transpose(1, 2, 0).reshape(n, self.p * d)
        c = self.p * d
        for a, b in self.cfg.interactions:
            for k in range(1, d + 1):
                for l in range(1, d + 1):
                    cols[:, c] = P[k][:, a] * P[l][:, b]
                    c += 1
        return cols

    def gradient(self, X: np.ndarray, coef: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        d = self.cfg.degree
        Z = (X - self.mean) / self.scale
        P = self._powers(Z)
        C = coef[: self.p * d].reshape(self.p, d)
        # d/dz of sum_k c_k z^k = sum_k k c_k z^(k-1)
        G = np.zeros((n, self.p))
        for k in range(1, d + 1):
            G += k * C[:, k - 1] * P[k - 1]
        c = self.p * d
        for a, b in self.cfg.interactions:
            for k in range(1, d + 1):
                for l in range(1, d + 1):
                    w = coef[c]
                    c += 1
                    if w == 0.0:
                        continue
                    G[:, a] += w * k * P[k - 1][:, a] * P[l][:, b]
                    G[:, b] += w * l * P[k][:, a] * P[l - 1][:, b]
        return G / self.scale

    def to_dict(self) -> dict:
        return {
            "degree": self.cfg.degree,
            "interactions": [list(t) for t in self.cfg.interactions],
            "standardize": self.cfg.standardize,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
        }


class AdditivePolyPredictor(Predictor):
    def __init__(self, basis: PolyBasis, intercept: float, coef: np.ndarray,
                 descriptor: str = "poly", fit_info: dict | None = None):
        self.basis = basis
        self.intercept = float(intercept)
        self.coef = np.asarray(coef, dtype=float)
        self.descriptor = descriptor
        self.fit_info = fit_info or {}

    def _predict(self, X):
        return self.intercept + self.basis.design(X) @ self.coef

    def _gradient(self, X):
        return self.basis.gradient(X, self.coef)

    def active_features(self) -> np.ndarray:
        """Sorted raw-feature indices with at least one nonzero basis coefficient."""
        act = set()
        for w, owner in zip(self.coef, self.basis.column_owner()):
            if w != 0.0:
                act.update(owner)
        return np.array(sorted(act), dtype=int)

    def to_dict(self):
        return {
            "descriptor": self.descriptor,
            "intercept": self.intercept,
            "coef": self.coef.tolist(),
            "basis": self.basis.to_dict(),
            "fit_info": self.fit_info,
        }


def fit_additive_poly(data: Dataset, cfg: BasisConfig | None = None) -> AdditivePolyPredictor:
    cfg = cfg or BasisConfig()
    basis = PolyBasis.from_data(cfg, data.X)
    Phi = basis.design(data.X)
    m = Phi.shape[1] + 1
    if m >= data.n:
        raise RankDeficientError(
            f"{m} basis columns for n={data.n} rows; use fit_mcp_additive for this size"
        )
    D = np.column_stack([np.ones(data.n), Phi])
    coef, _, rank, _ = np.linalg.lstsq(D, data.y, rcond=None)
    if rank < m:
        raise RankDeficientError(
            f"basis design is rank deficient (rank {rank} < {m}); use fit_mcp_additive"
        )
    return AdditivePolyPredictor(basis, coef[0], coef[1:], descriptor=f"poly(d={cfg.degree})")
