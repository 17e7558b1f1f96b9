"""Smooth loss functions with certified Lipschitz-gradient constants.

Every loss carries a constant ``L_f`` that upper-bounds the Lipschitz
constant of its gradient. Spectral quantities are estimated by power
iteration with a deterministic start vector and then inflated by 1% so
that ``L_f`` is a certified upper bound even when the iteration stops
slightly early. Step-size rules downstream only need an upper bound, so
conservatism is free.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge (degenerate matrix scaling)."""


POWER_MAX_ITER = 1000
POWER_RTOL = 1e-10
SPECTRAL_INFLATION = 1.01


def _spectral_bound(matvec, n: int) -> float:
    """Inflated largest eigenvalue of a symmetric PSD operator.

    ``matvec`` must implement v -> M v for a symmetric positive
    semidefinite M of size n. Runs power iteration from a fixed-seed
    start vector; stops when the Rayleigh quotient stabilizes to
    relative precision POWER_RTOL, then inflates by SPECTRAL_INFLATION.
    """
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = np.inf
    for _ in range(POWER_MAX_ITER):
        mv = matvec(v)
        lam_new = float(v @ mv) / float(v @ v)
        norm_mv = float(np.linalg.norm(mv))
        if norm_mv == 0.0:
            # The iterate is annihilated: for a PSD operator and a random
            # start vector this only happens for the zero operator.
            return 0.0
        v = mv / norm_mv
        if np.isfinite(lam) and abs(lam_new - lam) <= POWER_RTOL * abs(lam_new):
            return SPECTRAL_INFLATION * lam_new
        lam = lam_new
    raise PowerIterationError(
        "power iteration did not converge within "
        f"{POWER_MAX_ITER} iterations (last estimate {lam})"
    )


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"{name} must be a nonempty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _as_vector(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _freeze(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    a.flags.writeable = False
    return a


class SmoothLoss:
    """Base class: differentiable f with gradient and certified L_f.

    Attributes
    ----------
    n : int
        Problem dimension (length of the argument vector).
    L_f : float
        Certified upper bound on the Lipschitz constant of the gradient.
    lower_bound_hint : float or None
        A known lower bound on f, when one is available in closed form.
    """

    n: int
    L_f: float
    lower_bound_hint: float | None

    def eval(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_arg(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(
                f"argument has shape {x.shape}, expected ({self.n},)"
            )
        return x


class LeastSquares(SmoothLoss):
    """f(x) = 0.5 * ||A x - b||_2^2 with L_f = sigma_max(A)^2."""

    def __init__(self, A, b):
        self.A = _freeze(_as_matrix(A, "A"))
        self.b = _freeze(_as_vector(b, "b"))
        m, n = self.A.shape
        if self.b.shape != (m,):
            raise ValueError(
                f"b has shape {self.b.shape}, expected ({m},) to match A"
            )
        self.m = m
        self.n = n
        A_ = self.A
        self.L_f = _spectral_bound(lambda v: A_.T @ (A_ @ v), n)
        self.lower_bound_hint = 0.0

    def eval(self, x) -> float:
        x = self._check_arg(x)
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def grad(self, x) -> np.ndarray:
        x = self._check_arg(x)
        return self.A.T @ (self.A @ x - self.b)


class Logistic(SmoothLoss):
    """Binary logistic loss sum_i log(1 + exp(-y_i a_i^T x)) + ridge/2 ||x||^2.

    Labels must be -1/+1. Without the ridge term the loss is not
    coercive, so level sets may be unbounded; pass ridge > 0 when a
    bounded level set is required.
    """

    def __init__(self, A, y, ridge: float = 0.0):
        self.A = _freeze(_as_matrix(A, "A"))
        y = np.asarray(y, dtype=float)
        m, n = self.A.shape
        if y.shape != (m,):
            raise ValueError(f"y has shape {y.shape}, expected ({m},) to match A")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels y must take values in {-1, +1}")
        self.y = _freeze(y)
        ridge = float(ridge)
        if not (ridge >= 0.0 and np.isfinite(ridge)):
            raise ValueError(f"ridge must be a finite nonnegative real, got {ridge}")
        self.ridge = ridge
        self.m = m
        self.n = n
        A_ = self.A
        self.L_f = 0.25 * _spectral_bound(lambda v: A_.T @ (A_ @ v), n) + ridge
        self.lower_bound_hint = 0.0

    def eval(self, x) -> float:
        x = self._check_arg(x)
        margins = self.y * (self.A @ x)
        val = float(np.sum(np.logaddexp(0.0, -margins)))
        if self.ridge:
            val += 0.5 * self.ridge * float(x @ x)
        return val

    def grad(self, x) -> np.ndarray:
        x = self._check_arg(x)
        margins = self.y * (self.A @ x)
        g = -self.A.T @ (self.y * expit(-margins))
        if self.ridge:
            g = g + self.ridge * x
        return g


class Quadratic(SmoothLoss):
    """f(x) = 0.5 x^T Q x + c^T x for symmetric PSD Q, L_f = sigma_max(Q)."""

    SYMMETRY_RTOL = 1e-12

    def __init__(self, Q, c):
        Q = _as_matrix(Q, "Q")
        n = Q.shape[0]
        if Q.shape != (n, n):
            raise ValueError(f"Q must be square, got shape {Q.shape}")
        scale = np.max(np.abs(Q))
        if np.max(np.abs(Q - Q.T)) > self.SYMMETRY_RTOL * max(scale, 1.0):
            raise ValueError("Q is not symmetric within 1e-12 relative tolerance")
        self.Q = _freeze(Q)
        c = np.asarray(c, dtype=float)
        if c.ndim == 0:
            c = np.full(n, float(c))  # scalar shorthand, e.g. c=0
        if c.shape != (n,):
            raise ValueError(f"c has shape {c.shape}, expected ({n},)")
        if not np.all(np.isfinite(c)):
            raise ValueError("c contains non-finite entries")
        self.c = _freeze(c)
        self.n = n
        Q_ = self.Q
        self.L_f = _spectral_bound(lambda v: Q_ @ v, n)
        self.lower_bound_hint = self._lower_bound()

    def _lower_bound(self) -> float | None:
        if not np.any(self.c):
            return 0.0
        try:
            chol = np.linalg.cholesky(self.Q)
        except np.linalg.LinAlgError:
            return None
        z = np.linalg.solve(chol, self.c)
        # min of the quadratic is -0.5 c^T Q^{-1} c when Q is invertible
        return -0.5 * float(z @ z)

    def eval(self, x) -> float:
        x = self._check_arg(x)
        return 0.5 * float(x @ (self.Q @ x)) + float(self.c @ x)

    def grad(self, x) -> np.ndarray:
        x = self._check_arg(x)
        return self.Q @ x + self.c


def fd_grad_check(loss: SmoothLoss, x, h: float = 1e-6) -> float:
    """Worst relative error between the analytic gradient and central differences.

    Uses the symmetric difference (f(x + h e_i) - f(x - h e_i)) / (2h) per
    coordinate; the error of coordinate i is normalized by
    max(1, |grad_i|, |fd_i|).
    """
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    x = np.asarray(x, dtype=float).copy()
    g = loss.grad(x)
    worst = 0.0
    for i in range(x.size):
        xi = x[i]
        x[i] = xi + h
        up = loss.eval(x)
        x[i] = xi - h
        down = loss.eval(x)
        x[i] = xi
        fd = (up - down) / (2.0 * h)
        err = abs(g[i] - fd) / max(1.0, abs(g[i]), abs(fd))
        worst = max(worst, err)
    return worst
