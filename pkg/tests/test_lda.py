import numpy as np
import pytest

from dcerad.errors import DimensionMismatch, SingularCovariance, TooFewSamples
from dcerad.lda import LdaModel, lda_fit, lda_predict, lda_score


def one_dim_model(ridge=0.0):
    x = np.array([[0.0], [1.0], [4.0], [5.0]])
    y = np.array([0, 0, 1, 1])
    return lda_fit(x, y, ridge=ridge)


def test_one_dimensional_closed_form():
    model = one_dim_model()
    # pooled var 0.5, w = (4.5 - 0.5)/0.5 = 8, boundary at 2.5
    assert model.weights[0] == pytest.approx(8.0, abs=1e-9)
    assert model.bias == pytest.approx(-20.0, abs=1e-9)
    assert lda_score(model, np.array([2.5])) == pytest.approx(0.0, abs=1e-9)


def test_one_dimensional_scores():
    model = one_dim_model()
    assert lda_score(model, np.array([3.0])) > 0
    assert lda_score(model, np.array([0.5])) < 0      # benign mean side


def test_predict_tie_goes_benign():
    model = one_dim_model()
    assert lda_predict(model, np.array([2.5])) == 0
    assert lda_predict(model, np.array([4.5])) == 1


def test_symmetric_classes_bias_is_prior_ratio():
    x = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    y = np.array([0, 0, 1, 1])
    model = lda_fit(x, y, ridge=0.0)
    assert model.bias == pytest.approx(np.log(1.0), abs=1e-12)   # equal priors


def test_prewhitened_weights_are_mean_difference():
    rng = np.random.default_rng(0)
    n = 4000
    x0 = rng.normal(size=(n, 3))
    x1 = rng.normal(size=(n, 3)) + np.array([1.0, -0.5, 2.0])
    x = np.vstack([x0, x1])
    y = np.array([0] * n + [1] * n)
    model = lda_fit(x, y)
    delta = x1.mean(axis=0) - x0.mean(axis=0)
    assert np.allclose(model.weights, np.linalg.solve(np.cov(np.vstack([
        x0 - x0.mean(0), x1 - x1.mean(0)]).T, ddof=2), delta), rtol=1e-6)
    # identity covariance: weights close to the mean difference
    assert np.allclose(model.weights, delta, atol=0.15)


def test_separable_clusters_train_perfectly():
    rng = np.random.default_rng(123)
    n = 50
    x0 = rng.normal(scale=0.3, size=(n, 2))
    x1 = rng.normal(scale=0.3, size=(n, 2)) + np.array([4.0, 4.0])
    x = np.vstack([x0, x1])
    y = np.array([0] * n + [1] * n)
    model = lda_fit(x, y)
    assert (lda_predict(model, x) == y).all()


def test_score_is_affine():
    rng = np.random.default_rng(5)
    model = LdaModel(weights=rng.normal(size=4), bias=0.7, priors=(0.5, 0.5))
    a = rng.normal(size=4)
    b = rng.normal(size=4)
    t = 0.37
    lhs = lda_score(model, t * a + (1 - t) * b)
    rhs = t * lda_score(model, a) + (1 - t) * lda_score(model, b)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_prediction_invariant_under_positive_rescaling():
    rng = np.random.default_rng(6)
    model = one_dim_model()
    scaled = LdaModel(weights=model.weights * 7.5, bias=model.bias * 7.5,
                      priors=model.priors)
    xs = rng.uniform(-3, 8, size=(50, 1))
    np.testing.assert_array_equal(lda_predict(model, xs), lda_predict(scaled, xs))


def test_gaussian_direction_convergence():
    rng = np.random.default_rng(7)
    n = 10_000
    mu = np.array([1.5, -0.8])
    x0 = rng.normal(size=(n, 2))
    x1 = rng.normal(size=(n, 2)) + mu
    model = lda_fit(np.vstack([x0, x1]), np.array([0] * n + [1] * n))
    cos = model.weights @ mu / (np.linalg.norm(model.weights) * np.linalg.norm(mu))
    assert cos >= 0.99


def test_errors():
    with pytest.raises(TooFewSamples):
        lda_fit(np.zeros((3, 2)), np.array([0, 1, 1]))
    with pytest.raises(SingularCovariance):
        lda_fit(np.zeros((6, 2)), np.array([0, 0, 0, 1, 1, 1]), ridge=0.0)
    model = one_dim_model()
    with pytest.raises(DimensionMismatch):
        lda_score(model, np.array([1.0, 2.0]))
