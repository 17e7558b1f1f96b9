"""Main loop: reweighting, prox steps, smoothing decay, termination, tracing.

Each iteration linearizes the lp term at the current iterate through the
weights w_i = p (|x_i| + eps_i)^(p-1), solves the resulting weighted-l1
prox subproblem in closed form, and shrinks the smoothing vector eps
geometrically. The smoothed objective decreases by at least
(beta - L_f/2) * ||step||^2 per iteration; the loop asserts that with a
small roundoff allowance and aborts with NUMERICAL_FAILURE if it ever
fails, so a returned trace is always a certified descent sequence.
"""

from __future__ import annotations

import numpy as np

from .core import (
    BetaTooSmallError,
    LpProblem,
    SolverConfig,
    SolverResult,
    SolverStatus,
    TraceRecord,
)
from .losses import SmoothLoss
from .prox import subproblem_solve

# absolute roundoff allowance for the per-iteration descent assertion;
# the underlying inequality is exact in real arithmetic
DESCENT_SLACK = 1e-10


def compute_weights(x, eps, p: float) -> np.ndarray:
    """Linearization weights w_i = p * (|x_i| + eps_i)^(p-1)."""
    x = np.asarray(x, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("eps must be positive componentwise")
    return p * (np.abs(x) + eps) ** (p - 1.0)


def update_epsilon(eps, mu: float, floor: float) -> np.ndarray:
    """Geometric decay eps -> mu * eps, clamped below at the floor."""
    return np.maximum(mu * np.asarray(eps, dtype=float), floor)


def smoothed_objective(problem: LpProblem, x, eps) -> float:
    """F(x, eps) = f(x) + lam * sum_i (|x_i| + eps_i)^p; eps may be zero."""
    x = np.asarray(x, dtype=float)
    eps = np.asarray(eps, dtype=float)
    reg = float(np.sum((np.abs(x) + eps) ** problem.p))
    return problem.loss.eval(x) + problem.lam * reg


def _residual_from_grad(g, x, lam: float, p: float) -> float:
    nz = np.flatnonzero(x)
    if nz.size == 0:
        return 0.0
    xs = x[nz]
    r = g[nz] + lam * p * np.abs(xs) ** (p - 1.0) * np.sign(xs)
    return float(np.max(np.abs(r)))


def stationarity_residual(problem: LpProblem, x) -> float:
    """Max violation of grad_i f + lam p |x_i|^(p-1) sign(x_i) = 0 on the support.

    Zero for the all-zero vector (empty support).
    """
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        return 0.0
    return _residual_from_grad(problem.loss.grad(x), x, problem.lam, problem.p)


def default_config(loss: SmoothLoss, **overrides) -> SolverConfig:
    """SolverConfig with beta = L_f, the conventional safe prox parameter."""
    overrides.setdefault("beta", loss.L_f)
    return SolverConfig(**overrides)


def run(problem: LpProblem, config: SolverConfig, x0) -> SolverResult:
    """Minimize the smoothed objective from x0, tracing every iterate.

    Terminates CONVERGED once the step norm falls to tol_step and every
    smoothing component to tol_eps, MAX_ITER_REACHED at the iteration
    cap, or NUMERICAL_FAILURE on non-finite values or a violated descent
    assertion (partial trace preserved in all cases).
    """
    loss = problem.loss
    if config.beta <= loss.L_f / 2.0:
        raise BetaTooSmallError(
            f"beta={config.beta} must exceed L_f/2={loss.L_f / 2.0} "
            "for the descent property to hold"
        )
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (problem.n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({problem.n},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 contains non-finite entries")
    eps = config.initial_eps(problem.n)

    lam, p = problem.lam, problem.p
    beta = config.beta
    beta_hat = beta - loss.L_f / 2.0

    g = loss.grad(x)
    f_val = loss.eval(x)
    F_val = f_val + lam * float(np.sum((np.abs(x) + eps) ** p))
    records = [
        TraceRecord.from_state(
            0, x, eps, F_val, f_val, 0.0, _residual_from_grad(g, x, lam, p)
        )
    ]

    status = SolverStatus.MAX_ITER_REACHED
    if not np.isfinite(F_val) or not np.all(np.isfinite(g)):
        status = SolverStatus.NUMERICAL_FAILURE
    else:
        for k in range(config.max_iter):
            w = compute_weights(x, eps, p)
            x_new = subproblem_solve(x, g, beta, lam, w)
            eps_new = update_epsilon(eps, config.mu, config.eps_floor)
            step = float(np.linalg.norm(x_new - x))

            if not np.all(np.isfinite(x_new)):
                status = SolverStatus.NUMERICAL_FAILURE
                break
            f_new = loss.eval(x_new)
            F_new = f_new + lam * float(np.sum((np.abs(x_new) + eps_new) ** p))
            g_new = loss.grad(x_new)
            if not np.isfinite(F_new) or not np.all(np.isfinite(g_new)):
                status = SolverStatus.NUMERICAL_FAILURE
                break

            records.append(
                TraceRecord.from_state(
                    k + 1,
                    x_new,
                    eps_new,
                    F_new,
                    f_new,
                    step,
                    _residual_from_grad(g_new, x_new, lam, p),
                )
            )
            if F_new > F_val - beta_hat * step * step + DESCENT_SLACK:
                status = SolverStatus.NUMERICAL_FAILURE
                break
            x, eps, g, F_val = x_new, eps_new, g_new, F_new
            if step <= config.tol_step and float(eps_new.max()) <= config.tol_eps:
                status = SolverStatus.CONVERGED
                break

    trace = tuple(records)
    return SolverResult(
        x_final=trace[-1].x,
        status=status,
        iterations=len(trace) - 1,
        trace=trace,
    )
