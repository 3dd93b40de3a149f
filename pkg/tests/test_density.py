import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import simpson
from scipy.stats import t as student

from uqimp.density import (
    BandwidthError,
    KdeConfig,
    QuantileGrid,
    TailConfig,
    TailFitError,
    empirical_quantile,
    fit_residual_density,
    hill_estimator,
    kde_at,
    kde_eval,
    silverman_bandwidth,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
samples = arrays(np.float64, st.integers(2, 60), elements=finite)


def test_quantile_order_statistic():
    v = np.array([5.0, 1.0, 3.0, 2.0, 4.0])
    assert empirical_quantile(v, 0.2) == 1.0
    assert empirical_quantile(v, 0.21) == 2.0
    assert empirical_quantile(v, 0.5) == 3.0
    x = np.arange(1, 1001, dtype=float)
    assert empirical_quantile(x, 0.3) == 300.0


def test_quantile_minimizes_check_loss(rng):
    v = rng.normal(size=37)
    for tau in (0.1, 0.33, 0.5, 0.9):
        q = empirical_quantile(v, tau)
        loss = lambda c: np.sum((v - c) * (tau - (v < c)))
        assert all(loss(q) <= loss(c) + 1e-12 for c in v)


@settings(max_examples=60, deadline=None)
@given(v=samples, t1=st.floats(0.01, 0.99), t2=st.floats(0.01, 0.99))
def test_quantile_monotone_in_tau(v, t1, t2):
    lo, hi = sorted((t1, t2))
    assert empirical_quantile(v, lo) <= empirical_quantile(v, hi)


@settings(max_examples=60, deadline=None)
@given(v=samples, tau=st.floats(0.01, 0.99), c=st.floats(-100, 100))
def test_quantile_location_equivariance(v, tau, c):
    assert empirical_quantile(v + c, tau) == empirical_quantile(v, tau) + c


def test_quantile_rejects_bad_input():
    with pytest.raises(ValueError):
        empirical_quantile([1.0, 2.0], 1.0)
    with pytest.raises(ValueError):
        empirical_quantile([1.0, np.inf], 0.5)


def test_grid_validation():
    assert QuantileGrid.parse("0.1, 0.5").taus == (0.1, 0.5)
    for bad in ((), (0.5, 0.3), (0.0, 0.5), (0.5, 0.5)):
        with pytest.raises(ValueError):
            QuantileGrid(bad)


def test_silverman_rule(rng):
    v = rng.normal(size=500)
    sd = v.std(ddof=1)
    iqr = (np.percentile(v, 75) - np.percentile(v, 25)) / 1.34
    assert silverman_bandwidth(v) == pytest.approx(0.9 * min(sd, iqr) * 500**-0.2)
    with pytest.raises(BandwidthError):
        silverman_bandwidth(np.ones(10))


def test_silverman_uses_sd_when_iqr_vanishes():
    v = np.r_[np.zeros(20), 1.0]
    assert silverman_bandwidth(v) == pytest.approx(0.9 * v.std(ddof=1) * 21**-0.2)


@pytest.mark.parametrize("kernel", ["gaussian", "epanechnikov"])
@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(5, 200))
def test_kde_integrates_to_one(kernel, seed, n):
    v = np.random.default_rng(seed).standard_t(3, size=n)
    b = silverman_bandwidth(v)
    grid = np.linspace(v.min() - 8 * b, v.max() + 8 * b, 20_001)
    mass = simpson(kde_eval(v, grid, b, kernel), x=grid)
    assert 0.99 <= mass <= 1.01


def test_kde_matches_normal_density(rng):
    v = rng.normal(size=20_000)
    assert kde_at(v, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=0.03)


def test_kde_chunking_is_invisible(rng):
    v = rng.normal(size=300)
    x = np.linspace(-3, 3, 101)
    assert np.allclose(kde_eval(v, x, 0.3, chunk=7), kde_eval(v, x, 0.3), rtol=1e-14)


def test_manual_bandwidth():
    assert KdeConfig(bandwidth=0.2).resolve(np.arange(5.0)) == 0.2
    with pytest.raises(ValueError):
        KdeConfig(bandwidth=0.0)
    with pytest.raises(ValueError):
        KdeConfig(kernel="box")


# --- Hill ------------------------------------------------------------------

def test_hill_on_pareto():
    est = []
    for s in range(20):
        u = np.random.default_rng(s).uniform(size=5000)
        est.append(hill_estimator(u ** (-0.5), TailConfig().tau_n(5000)).gamma_hat)
    assert np.median(est) == pytest.approx(0.5, abs=0.1)


def test_hill_normalization_and_clamp():
    v = np.r_[np.ones(90), np.e * np.ones(10)]
    # threshold is 1 (the 0.9 quantile), 10 exceedances each contributing log(e)
    fit = hill_estimator(v, 0.1, min_exceedances=5)
    assert fit.threshold == 1.0 and fit.k == 10
    assert fit.gamma_hat == pytest.approx(10 / (100 * 0.1))
    huge = np.r_[np.ones(90), np.full(10, 1e300)]
    assert hill_estimator(huge, 0.1, min_exceedances=5).gamma_hat == 10.0


def test_hill_errors():
    with pytest.raises(TailFitError) as e:
        hill_estimator(-np.arange(1.0, 101.0), 0.1)
    assert "threshold" in e.value.diagnostics
    with pytest.raises(TailFitError, match="exceedances"):
        hill_estimator(np.arange(1.0, 51.0), 0.1, min_exceedances=10)


# --- residual density with tail extrapolation ---------------------------------

@pytest.fixture(scope="module")
def resid_model():
    r = np.random.default_rng(7).standard_t(4, size=2000)
    return fit_residual_density(r)


def test_inside_range_is_plain_kde(resid_model):
    lo, hi = resid_model.range
    x = np.linspace(lo, hi, 50)
    assert np.array_equal(resid_model(x), resid_model.kde(x))


@pytest.mark.parametrize("side", ["upper", "lower"])
def test_tail_anchor_continuity_exact(resid_model, side):
    t = getattr(resid_model, side)
    sign = 1.0 if side == "upper" else -1.0
    at_threshold = t.evaluate(np.array([t.threshold]))[0]
    assert at_threshold == resid_model.kde([sign * t.threshold])[0]


def test_tails_positive_and_decreasing(resid_model):
    lo, hi = resid_model.range
    up = resid_model(hi + np.array([0.1, 1, 5, 50]))
    dn = resid_model(lo - np.array([0.1, 1, 5, 50]))
    for arr in (up, dn):
        assert np.all(arr > 0) and np.all(np.diff(arr) < 0)


def test_scalar_call(resid_model):
    assert isinstance(resid_model(0.0), float)


def test_shifted_threshold_for_one_sided_residuals():
    r = np.random.default_rng(3).exponential(size=1000)
    m = fit_residual_density(r)
    # every negated residual is <= 0, so the lower side needs a shift
    assert m.lower.shift > 0
    assert m.upper.shift == 0.0
    assert np.isfinite(m.diagnostics()["lower"]["gamma_hat"])


def test_zero_gamma_gives_zero_beyond_range():
    r = np.r_[np.linspace(-1, 1, 200), np.full(40, 1.0)]
    m = fit_residual_density(r, tail=TailConfig(min_exceedances=0))
    assert m.upper.gamma_hat == 0.0
    assert m(5.0) == 0.0


def test_residual_density_validation():
    with pytest.raises(ValueError):
        fit_residual_density(np.arange(10.0))
    with pytest.raises(ValueError):
        fit_residual_density(np.ones(100))


def test_tau_n_rule():
    assert TailConfig(0.5).tau_n(10_000) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        TailConfig(1.0)


def test_quantile_spot_values(rng):
    assert empirical_quantile([1.0, 2, 3, 4, 5], 0.5) == 3.0
    assert empirical_quantile(np.full(9, 2.5), 0.77) == 2.5
    assert empirical_quantile(rng.normal(size=100_000), 0.9) == pytest.approx(1.2816, abs=0.03)


def test_kde_spot_values(rng):
    assert kde_at(rng.normal(size=100_000), 0.0) == pytest.approx(0.3989, abs=0.02)
    phi1 = math.exp(-0.5) / math.sqrt(2 * math.pi)
    assert kde_at([-1.0, 1.0], 0.0, KdeConfig(bandwidth=1.0)) == pytest.approx(phi1, rel=1e-12)


def test_kde_symmetry_exact(rng):
    half = rng.normal(size=200)
    v = np.r_[half, -half]
    for x in (0.3, 1.7, 4.0):
        assert kde_at(v, x) == kde_at(v, -x)


def test_hill_zero_when_no_log_excess():
    v = np.r_[np.linspace(0.1, 1.0, 90), np.ones(10)]
    assert hill_estimator(v, 0.1, min_exceedances=0).gamma_hat == 0.0


def test_hill_shrinks_on_exponential_as_n_grows():
    med = []
    for n in (5000, 50_000):
        med.append(np.median([hill_estimator(np.random.default_rng(s).exponential(size=n),
                                             TailConfig().tau_n(n)).gamma_hat for s in range(20)]))
    assert med[1] < med[0]


def test_residual_density_at_median_equals_kde_at():
    r = np.random.default_rng(0).standard_t(3, size=5000)
    m = fit_residual_density(r)
    med = float(np.median(r))
    assert m(med) == kde_at(r, med)


def test_t3_tail_extrapolation_accuracy():
    r = np.random.default_rng(0).standard_t(3, size=5000)
    m = fit_residual_density(r)
    x = 3 * r.max()
    ratio = m(x) / student(3).pdf(x)
    assert 1 / 3 <= ratio <= 3
