"""Scikit-learn style estimator wrapping the sparse lp solver.

LpRegressor fits linear models by minimizing
0.5 ||X w - y||^2 + alpha * sum_i |w_i|^p with 0 < p < 1, which drives
small coefficients exactly to zero more aggressively than the lasso.
The estimator follows the sklearn contract (get_params/set_params,
fit/predict, clone-safety), so it composes with pipelines and model
selection utilities.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import LpProblem, SolverConfig, SolverStatus
from .diagnostics import run_diagnostics
from .losses import LeastSquares
from .solver import run


class LpRegressor(RegressorMixin, BaseEstimator):
    """Sparse linear regression with an lp (0 < p < 1) coefficient penalty.

    Parameters
    ----------
    alpha : float, default=0.1
        Regularization weight on the penalty sum_i |w_i|^p.
    p : float, default=0.5
        Quasi-norm exponent, strictly between 0 and 1.
    beta : float or "auto", default="auto"
        Prox parameter; must exceed half the squared spectral norm of X.
        "auto" uses the certified bound itself.
    mu : float, default=0.9
        Per-iteration decay of the smoothing vector.
    eps0 : float, default=1.0
        Initial smoothing, broadcast over coordinates.
    max_iter : int, default=100000
        Iteration cap.
    tol_step : float, default=1e-10
        Step-norm tolerance of the termination test.
    tol_eps : float, default=1e-12
        Smoothing tolerance of the termination test.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Fitted coefficients. No intercept is fitted; center the data
        beforehand if one is needed.
    n_iter_ : int
        Iterations taken by the solver.
    result_ : SolverResult
        Full solver output including the per-iteration trace.
    """

    def __init__(
        self,
        alpha: float = 0.1,
        p: float = 0.5,
        beta="auto",
        mu: float = 0.9,
        eps0: float = 1.0,
        max_iter: int = 100_000,
        tol_step: float = 1e-10,
        tol_eps: float = 1e-12,
    ):
        self.alpha = alpha
        self.p = p
        self.beta = beta
        self.mu = mu
        self.eps0 = eps0
        self.max_iter = max_iter
        self.tol_step = tol_step
        self.tol_eps = tol_eps

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        loss = LeastSquares(X, y)
        beta = loss.L_f if self.beta == "auto" else float(self.beta)
        problem = LpProblem(loss=loss, lam=self.alpha, p=self.p)
        config = SolverConfig(
            beta=beta,
            mu=self.mu,
            eps0=self.eps0,
            max_iter=self.max_iter,
            tol_step=self.tol_step,
            tol_eps=self.tol_eps,
        )
        result = run(problem, config, np.zeros(problem.n))
        if result.status is SolverStatus.NUMERICAL_FAILURE:
            raise RuntimeError("solver failed numerically; see result trace")
        if result.status is SolverStatus.MAX_ITER_REACHED:
            warnings.warn(
                f"solver hit the iteration cap ({self.max_iter}) before the "
                "termination tolerances",
                ConvergenceWarning,
            )
        self.problem_ = problem
        self.config_ = config
        self.result_ = result
        self.coef_ = np.asarray(result.x_final, dtype=float)
        self.n_iter_ = result.iterations
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return X @ self.coef_

    def diagnostics(self):
        """Run the convergence-theory checks on the stored fit trace."""
        check_is_fitted(self, "result_")
        return run_diagnostics(self.problem_, self.config_, self.result_)
