"""Closed-form weighted-l1 proximal subproblem, plus a brute-force oracle.

The per-iteration subproblem

    min_u  g^T (u - x) + (beta/2) ||u - x||^2 + lam * sum_i w_i |u_i|

is separable and solved exactly by soft-thresholding x - g/beta with the
componentwise thresholds lam * w / beta. The brute-force oracle minimizes
one coordinate by grid search plus ternary refinement and exists purely
to cross-check the closed form in tests.
"""

from __future__ import annotations

import numpy as np


def weighted_soft_threshold(v, t) -> np.ndarray:
    """Componentwise minimizer of 0.5 (u - v)^2 + t |u|, i.e. shrink v by t.

    Exact ties |v_i| == t_i produce +0.0, never a signed zero.
    """
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if v.shape != t.shape:
        raise ValueError(f"shape mismatch: v {v.shape} vs t {t.shape}")
    if np.any(t < 0):
        raise ValueError("thresholds must be nonnegative")
    mag = np.abs(v) - t
    np.maximum(mag, 0.0, out=mag)
    out = np.sign(v) * mag
    out[mag == 0.0] = 0.0
    return out


def subproblem_solve(x, g, beta: float, lam: float, w) -> np.ndarray:
    """Exact minimizer of the quadratic-plus-weighted-l1 model around x."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    w = np.asarray(w, dtype=float)
    if not (x.shape == g.shape == w.shape):
        raise ValueError(
            f"shape mismatch: x {x.shape}, g {g.shape}, w {w.shape}"
        )
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if np.any(w <= 0):
        raise ValueError("weights must be positive componentwise")
    return weighted_soft_threshold(x - g / beta, (lam / beta) * w)


def subproblem_optimality_residual(x_new, x, g, beta: float, lam: float, w) -> float:
    """Max-norm violation of the subproblem's first-order condition at x_new.

    On nonzero coordinates the condition is an equation; on zero
    coordinates it is membership of -(g_i - beta x_i) in the interval
    [-lam w_i, lam w_i], measured as distance to that interval. This
    avoids picking any particular subgradient representative.
    """
    x_new = np.asarray(x_new, dtype=float)
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    w = np.asarray(w, dtype=float)
    if x_new.size == 0:
        return 0.0
    r = g + beta * (x_new - x)
    nz = x_new != 0
    res_nz = np.abs(r[nz] + lam * w[nz] * np.sign(x_new[nz]))
    res_z = np.maximum(np.abs(r[~nz]) - lam * w[~nz], 0.0)
    worst = 0.0
    if res_nz.size:
        worst = float(res_nz.max())
    if res_z.size:
        worst = max(worst, float(res_z.max()))
    return worst


def prox_1d_brute_force(
    x: float,
    g: float,
    beta: float,
    lam: float,
    w: float,
    lo: float = -10.0,
    hi: float = 10.0,
    grid_step: float = 1e-4,
    refine_tol: float = 1e-12,
) -> float:
    """Brute-force minimizer of the 1-D subproblem objective on [lo, hi].

    Scans a uniform grid, then refines around the best grid point by
    ternary search (the objective is strictly convex, hence unimodal).
    Near the minimizer the objective is flat to within roundoff, so the
    refinement compares points through the expanded difference
    phi(u1) - phi(u2), which stays accurate for nearby arguments where
    subtracting two evaluated values would not. Testing oracle only; the
    closed form in subproblem_solve is the production path.
    """

    def phi(u):
        d = u - x
        return g * d + 0.5 * beta * d * d + lam * w * np.abs(u)

    def phi_diff(u1, u2):
        # phi(u1) - phi(u2) without evaluating either value
        return (u1 - u2) * (g + beta * (0.5 * (u1 + u2) - x)) + lam * w * (
            abs(u1) - abs(u2)
        )

    grid = np.arange(lo, hi + grid_step, grid_step)
    best = float(grid[int(np.argmin(phi(grid)))])

    a = max(lo, best - grid_step)
    b = min(hi, best + grid_step)
    while b - a > refine_tol:
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if phi_diff(m1, m2) <= 0.0:
            b = m2
        else:
            a = m1
    u = 0.5 * (a + b)
    # the kink at zero is a frequent minimizer; compare it explicitly
    if lo <= 0.0 <= hi and phi_diff(0.0, u) <= 0.0:
        return 0.0
    return float(u)
