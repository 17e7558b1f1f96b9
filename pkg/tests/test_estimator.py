import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import Pipeline

import pirl1 as P
from pirl1.estimator import LpRegressor
from pirl1.io import make_instance


@pytest.fixture(scope="module")
def data():
    A, b, x_true = make_instance(40, 20, 4, 0.01, 7)
    return A, b, x_true


def test_fit_recovers_sparse_signal(data):
    X, y, x_true = data
    reg = LpRegressor(alpha=0.1, p=0.5, max_iter=5000).fit(X, y)
    assert set(np.flatnonzero(reg.coef_)) == set(np.flatnonzero(x_true))
    np.testing.assert_allclose(reg.coef_, x_true, atol=0.05)
    assert reg.n_iter_ == reg.result_.iterations
    assert reg.score(X, y) > 0.99


def test_predict_is_linear(data):
    X, y, _ = data
    reg = LpRegressor(alpha=0.1).fit(X, y)
    np.testing.assert_allclose(reg.predict(X[:5]), X[:5] @ reg.coef_)


def test_get_set_params_round_trip():
    reg = LpRegressor(alpha=0.3, p=0.7, mu=0.8)
    params = reg.get_params()
    assert params["alpha"] == 0.3
    assert params["p"] == 0.7
    other = LpRegressor().set_params(**params)
    assert other.get_params() == params


def test_clone_before_and_after_fit(data):
    X, y, _ = data
    reg = LpRegressor(alpha=0.1)
    cloned = clone(reg)
    assert cloned.get_params() == reg.get_params()
    reg.fit(X, y)
    refit = clone(reg)
    assert not hasattr(refit, "coef_")


def test_pipeline_composition(data):
    X, y, _ = data
    pipe = Pipeline([("model", LpRegressor(alpha=0.1, max_iter=5000))])
    pipe.fit(X, y)
    assert pipe.predict(X).shape == y.shape


def test_predict_requires_fit():
    reg = LpRegressor()
    with pytest.raises(Exception):
        reg.predict(np.ones((2, 3)))


def test_predict_checks_feature_count(data):
    X, y, _ = data
    reg = LpRegressor(alpha=0.1).fit(X, y)
    with pytest.raises(ValueError):
        reg.predict(np.ones((2, X.shape[1] + 1)))


def test_fit_validates_shapes():
    with pytest.raises(ValueError):
        LpRegressor().fit(np.ones((4, 3)), np.ones(5))


def test_diagnostics_from_fit(data):
    X, y, _ = data
    reg = LpRegressor(alpha=0.1, max_iter=5000, tol_step=1e-12).fit(X, y)
    report = reg.diagnostics()
    assert isinstance(report, P.DiagnosticsReport)
    assert report.descent_violations == 0
    assert report.all_passed


def test_explicit_beta_honored(data):
    X, y, _ = data
    loss = P.LeastSquares(X, y)
    reg = LpRegressor(alpha=0.1, beta=0.7 * loss.L_f).fit(X, y)
    assert reg.config_.beta == pytest.approx(0.7 * loss.L_f)
    with pytest.raises(P.BetaTooSmallError):
        LpRegressor(alpha=0.1, beta=0.4 * loss.L_f).fit(X, y)
