"""Marginal quantiles, kernel density estimates, and a residual density that
is extrapolated beyond the observed residual range with a Hill tail."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "QuantileGrid",
    "KdeConfig",
    "TailConfig",
    "HillFit",
    "TailSide",
    "ResidualTailModel",
    "BandwidthError",
    "TailFitError",
    "empirical_quantile",
    "silverman_bandwidth",
    "kde_at",
    "kde_eval",
    "hill_estimator",
    "fit_residual_density",
    "out_of_range_fraction",
    "DEFAULT_TAUS",
]

DEFAULT_TAUS = (0.1, 0.3, 0.5, 0.7, 0.9)
_SQRT_2PI = math.sqrt(2 * math.pi)


class BandwidthError(ValueError):
    pass


class TailFitError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class QuantileGrid:
    taus: tuple[float, ...] = DEFAULT_TAUS

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        if not taus:
            raise ValueError("quantile grid is empty")
        if any(not 0 < t < 1 for t in taus):
            raise ValueError("quantile levels must lie in (0, 1)")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("quantile levels must be strictly increasing")
        object.__setattr__(self, "taus", taus)

    def __len__(self):
        return len(self.taus)

    def __iter__(self):
        return iter(self.taus)

    @classmethod
    def parse(cls, text: str) -> "QuantileGrid":
        return cls(tuple(float(t) for t in text.split(",") if t.strip()))


@dataclass(frozen=True)
class KdeConfig:
    kernel: str = "gaussian"
    # None -> Silverman's rule; a positive float fixes the bandwidth
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kernel not in ("gaussian", "epanechnikov"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError("manual bandwidth must be positive")

    def resolve(self, values: np.ndarray) -> float:
        if self.bandwidth is not None:
            return float(self.bandwidth)
        return silverman_bandwidth(values)


@dataclass(frozen=True)
class TailConfig:
    # tau_n = n ** (-tau_n_exponent); exceedances k ~ n ** (1 - exponent)
    tau_n_exponent: float = 0.4
    min_exceedances: int = 10

    def __post_init__(self):
        if not 0 < self.tau_n_exponent < 1:
            raise ValueError("tau_n exponent must lie in (0, 1)")
        if self.min_exceedances < 0:
            raise ValueError("min_exceedances must be >= 0")

    def tau_n(self, n: int) -> float:
        return float(n) ** (-self.tau_n_exponent)


def _check_finite(values) -> np.ndarray:
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(v)):
        raise ValueError("sample contains non-finite values")
    return v


def _order_index(n: int, tau: float) -> int:
    # 1-based rank ceil(n*tau); the small slack keeps n*tau that is an integer
    # up to rounding (e.g. 1000*0.3) on the left end of the check-loss argmin.
    k = math.ceil(n * tau - 1e-9)
    return min(max(k, 1), n)


def empirical_quantile(values, tau: float, *, _sorted: bool = False) -> float:
    """Lowest minimizer of the check loss: the order statistic of rank ceil(n tau)."""
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    v = np.asarray(values, dtype=float) if _sorted else _check_finite(values)
    k = _order_index(v.size, tau)
    if _sorted:
        return float(v[k - 1])
    return float(np.partition(v, k - 1)[k - 1])


def silverman_bandwidth(values) -> float:
    v = _check_finite(values)
    n = v.size
    sd = float(np.std(v, ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(v, [75, 25])
    iqr = (q75 - q25) / 1.34
    spread = min(sd, iqr) if min(sd, iqr) > 0 else max(sd, iqr)
    if not spread > 0:
        raise BandwidthError("zero standard deviation and interquartile range; bandwidth undefined")
    return 0.9 * spread * n ** (-0.2)


def _kernel(kind: str) -> Callable[[np.ndarray], np.ndarray]:
    if kind == "gaussian":
        return lambda u: np.exp(-0.5 * u * u) / _SQRT_2PI
    return lambda u: np.where(np.abs(u) <= 1, 0.75 * (1 - u * u), 0.0)


def kde_eval(values, points, bandwidth: float, kernel: str = "gaussian",
             chunk: int = 2048) -> np.ndarray:
    """(1/(n b)) sum_i K((v_i - x)/b) at every x in ``points``."""
    v = np.asarray(values, dtype=float).ravel()
    x = np.atleast_1d(np.asarray(points, dtype=float))
    K = _kernel(kernel)
    out = np.empty(x.shape[0])
    for s in range(0, x.shape[0], chunk):
        u = (v[None, :] - x[s:s + chunk, None]) / bandwidth
        out[s:s + chunk] = K(u).sum(axis=1)
    return out / (v.size * bandwidth)


def kde_at(values, point: float, cfg: KdeConfig | None = None) -> float:
    cfg = cfg or KdeConfig()
    v = _check_finite(values)
    if np.unique(v).size < 2:
        raise BandwidthError("kernel density needs at least two distinct values")
    b = cfg.resolve(v)
    return float(kde_eval(v, [point], b, cfg.kernel)[0])


@dataclass(frozen=True)
class HillFit:
    gamma_hat: float
    threshold: float
    k: int
    tau_n: float
    raw_gamma: float


def hill_estimator(values, tau_n: float, min_exceedances: int = 10,
                   max_gamma: float = 10.0) -> HillFit:
    """Hill tail index from exceedances of the (1 - tau_n) empirical quantile.

    Normalized by n * tau_n and clamped to [0, max_gamma].
    """
    v = np.sort(_check_finite(values))
    n = v.size
    if not 0 < tau_n < 1:
        raise ValueError("tau_n must lie in (0, 1)")
    q = empirical_quantile(v, 1 - tau_n, _sorted=True)
    exceed = v[v > q]
    diag = {"threshold": q, "k": int(exceed.size), "n": n, "tau_n": tau_n}
    if q <= 0:
        raise TailFitError("Hill threshold must be positive", diag)
    if exceed.size < min_exceedances:
        raise TailFitError(
            f"only {exceed.size} exceedances above threshold (need {min_exceedances})", diag
        )
    raw = float(np.sum(np.log(exceed) - math.log(q)) / (n * tau_n))
    return HillFit(min(max(raw, 0.0), max_gamma), q, int(exceed.size), tau_n, raw)


@dataclass(frozen=True)
class TailSide:
    """One extrapolated tail, fitted on (sign * residuals + shift)."""
    threshold: float  # in original residual units on the fitted side's scale
    shift: float
    gamma_hat: float
    density_at_threshold: float
    k: int

    def evaluate(self, s: np.ndarray) -> np.ndarray:
        # s is the signed distance already mapped to this side (s > range edge)
        if self.gamma_hat <= 0.0:
            return np.zeros_like(s)
        ratio = (s + self.shift) / (self.threshold + self.shift)
        return ratio ** (-1.0 / self.gamma_hat) * self.density_at_threshold


@dataclass
class ResidualTailModel:
    residuals: np.ndarray
    bandwidth_inner: float
    bandwidth_anchor: float
    kernel: str
    upper: TailSide
    lower: TailSide

    @property
    def range(self) -> tuple[float, float]:
        return float(self.residuals[0]), float(self.residuals[-1])

    def kde(self, r) -> np.ndarray:
        return kde_eval(self.residuals, r, self.bandwidth_inner, self.kernel)

    def __call__(self, r):
        """Density at ``r``: plain KDE inside [min R, max R], tail ratio outside."""
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        lo, hi = self.range
        out = np.zeros(r_arr.shape)
        inside = (r_arr >= lo) & (r_arr <= hi)
        if inside.any():
            out[inside] = self.kde(r_arr[inside])
        above = r_arr > hi
        if above.any():
            out[above] = self.upper.evaluate(r_arr[above])
        below = r_arr < lo
        if below.any():
            out[below] = self.lower.evaluate(-r_arr[below])
        if np.ndim(r) == 0:
            return float(out[0])
        return out

    def diagnostics(self) -> dict:
        lo, hi = self.range
        side = lambda t: {
            "threshold": t.threshold,
            "shift": t.shift,
            "gamma_hat": t.gamma_hat,
            "density_at_threshold": t.density_at_threshold,
            "k": t.k,
        }
        return {
            "range": [lo, hi],
            "bandwidth_inner": self.bandwidth_inner,
            "bandwidth_anchor": self.bandwidth_anchor,
            "upper": side(self.upper),
            "lower": side(self.lower),
        }


def _fit_side(signed: np.ndarray, sorted_resid: np.ndarray, sign: float, b2: float,
              kernel: str, tail: TailConfig) -> TailSide:
    n = signed.size
    tau_n = tail.tau_n(n)
    q = empirical_quantile(signed, 1 - tau_n)
    shift = 0.0
    if q <= 0:
        # move the threshold to one residual sd above zero; ratios are then
        # taken in shifted coordinates
        scale = float(np.std(signed))
        shift = scale - q
    try:
        hill = hill_estimator(signed + shift, tau_n, tail.min_exceedances)
    except TailFitError as exc:
        exc.diagnostics["side"] = "upper" if sign > 0 else "lower"
        raise
    anchor = float(kde_eval(sorted_resid, [sign * q], b2, kernel)[0])
    return TailSide(q, shift, hill.gamma_hat, anchor, hill.k)


def fit_residual_density(residuals, kde: KdeConfig | None = None,
                         tail: TailConfig | None = None) -> ResidualTailModel:
    kde = kde or KdeConfig()
    tail = tail or TailConfig()
    r = np.sort(_check_finite(residuals))
    if r.size < 30:
        raise ValueError(f"residual density needs n >= 30, got {r.size}")
    if r[0] == r[-1]:
        raise ValueError("residuals are all equal; density undefined")
    b1 = kde.resolve(r)
    b2 = kde.resolve(r)
    upper = _fit_side(r, r, 1.0, b2, kde.kernel, tail)
    lower = _fit_side(-r, r, -1.0, b2, kde.kernel, tail)
    return ResidualTailModel(r, b1, b2, kde.kernel, upper, lower)


def out_of_range_fraction(data, predictor, tau: float) -> float:
    """Share of rows whose density argument q_tau - h(x_i) falls outside the
    observed residual range."""
    yhat = predictor.predict(data.X)
    resid = data.y - yhat
    q = empirical_quantile(data.y, tau)
    arg = q - yhat
    out = (arg < resid.min()) | (arg > resid.max())
    return float(np.mean(out))
