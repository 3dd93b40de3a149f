import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uqimp.datagen import (
    Dataset,
    ErrorLaw,
    FeatureSpec,
    ModelSpec,
    error_scale,
    generate,
    generate_linear_benchmark,
    outcome_mean,
    sample_errors,
    sample_features,
)


def test_feature_covariance_matches_ar1():
    X = sample_features(FeatureSpec(6, rho=0.5, seed=3), 200_000)
    emp = np.cov(X, rowvar=False)
    assert np.allclose(emp, FeatureSpec(6).covariance(), atol=0.01)


def test_covariance_entries():
    S = FeatureSpec(4, rho=0.5).covariance()
    assert S[0, 3] == 0.125 and S[2, 1] == 0.5 and np.all(np.diag(S) == 1)


def test_design_fixed_across_error_seeds():
    a = generate(ModelSpec(1), FeatureSpec(4), ErrorLaw(), 50, error_seed=1)
    b = generate(ModelSpec(1), FeatureSpec(4), ErrorLaw(), 50, error_seed=2)
    assert np.array_equal(a.X, b.X)
    assert not np.array_equal(a.y, b.y)


def test_generation_is_deterministic():
    a = generate(ModelSpec(5), FeatureSpec(4), ErrorLaw("t3"), 30, error_seed=7)
    b = generate(ModelSpec(5), FeatureSpec(4), ErrorLaw("t3"), 30, error_seed=7)
    assert np.array_equal(a.y, b.y)


@pytest.mark.parametrize("m", range(1, 10))
def test_zero_error_recovers_outcome_map(m):
    d = generate(ModelSpec(m), FeatureSpec(5), ErrorLaw("zero"), 40)
    assert np.array_equal(d.y, outcome_mean(m, d.X))


def test_model_formulas_at_a_point():
    x = np.array([[0.5, 1.0, -1.0, 0.0]])
    assert outcome_mean(1, x)[0] == pytest.approx(4 - 5)
    assert outcome_mean(2, x)[0] == pytest.approx(1 + np.e - 5)
    assert outcome_mean(3, x)[0] == pytest.approx(1 + 2 * np.cos(0.5) - 5)
    assert outcome_mean(4, x)[0] == pytest.approx(1 - 5)
    assert outcome_mean(5, x)[0] == pytest.approx(1 + 1 - 5)
    assert outcome_mean(6, x)[0] == pytest.approx(4 * np.cos(0.5) ** 2 - 5)
    x_far = np.array([[1.5, 0.0, 0.0, 0.0]])
    assert outcome_mean(2, x_far)[0] == 1.0


def test_heteroscedastic_models_scale_by_exp_x1():
    x = np.array([[0.3, 0, 0, 0]])
    for m in (7, 8, 9):
        assert ModelSpec(m).heteroscedastic
        assert error_scale(m, x)[0] == pytest.approx(np.exp(0.3))
    assert error_scale(4, x)[0] == 1.0


def test_exp2_parameterizations():
    rate = sample_errors(ErrorLaw("exp2"), 100_000, 0)
    mean = sample_errors(ErrorLaw("exp2", "mean"), 100_000, 0)
    assert rate.mean() == pytest.approx(0.5, rel=0.02)
    assert mean.mean() == pytest.approx(2.0, rel=0.02)


def test_linear_benchmark():
    d = generate_linear_benchmark(FeatureSpec(4), ErrorLaw("zero"), 20)
    assert np.allclose(d.y, 1 - 2 * d.X[:, 0] + 5 * d.X[:, 1])
    assert d.meta["model"] == "linear"


@pytest.mark.parametrize("bad", [0, 10, -1])
def test_model_id_validation(bad):
    with pytest.raises(ValueError):
        ModelSpec(bad)


def test_model_needs_four_features():
    with pytest.raises(ValueError, match="p >= 4"):
        generate(ModelSpec(4), FeatureSpec(3), ErrorLaw(), 10)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.zeros(4))
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan, 1.0], [0.0, 1.0]]), np.zeros(2))


@settings(max_examples=25, deadline=None)
@given(p=st.integers(1, 30), seed=st.integers(0, 2**31), n=st.integers(1, 50))
def test_feature_shapes(p, seed, n):
    X = sample_features(FeatureSpec(p, seed=seed), n)
    assert X.shape == (n, p) and np.all(np.isfinite(X))


def test_high_dim_generation_is_cheap():
    d = generate(ModelSpec(2), FeatureSpec(500), ErrorLaw(), 1000)
    assert d.X.shape == (1000, 500)


def test_marginal_variance_and_correlations():
    x1 = sample_features(FeatureSpec(1), 100_000)[:, 0]
    assert x1.var() == pytest.approx(1, abs=0.05)
    C = np.corrcoef(sample_features(FeatureSpec(4), 100_000), rowvar=False)
    assert C[0, 1] == pytest.approx(0.5, abs=0.02)
    assert C[0, 2] == pytest.approx(0.25, abs=0.02)


def test_features_bit_identical_for_same_seed():
    a = sample_features(FeatureSpec(7, seed=11), 100)
    assert np.array_equal(a, sample_features(FeatureSpec(7, seed=11), 100))


def test_error_law_moments():
    z = sample_errors(ErrorLaw("normal"), 100_000, 4)
    assert z.mean() == pytest.approx(0, abs=0.02) and z.std() == pytest.approx(1, abs=0.02)
    c = sample_errors(ErrorLaw("cauchy"), 100_000, 4)
    assert np.median(c) == pytest.approx(0, abs=0.05)


@pytest.mark.parametrize("m,x,y", [
    (1, (0, 0, 0, 0), 1.0),
    (3, (0, 1, 0, 0), -2.0),
    (5, (2, 0, 0, 0), 1.0),
])
def test_outcome_map_spot_values(m, x, y):
    assert outcome_mean(m, np.array([x], dtype=float))[0] == pytest.approx(y)
