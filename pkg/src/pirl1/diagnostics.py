"""Numerical verification of the solver's convergence theory along a trace.

Every check measures a property that is provable for the algorithm:
sufficient decrease of the smoothed objective, stabilization of support
and sign, magnitude bounds on surviving coordinates, the gradient bound
in the (x, delta) parameterization with delta = sqrt(eps), the
descent/relative-error constants of the KL framework, and the empirical
local convergence rate. Checks that quantify constants always use
certified upper bounds (inflated Lipschitz constants, upper-bound C), so
a reported violation indicates a real discrepancy rather than a sloppy
constant.

After the support stabilizes, the zeroed coordinates are frozen and the
theory lives on the reduced space of surviving coordinates; gradient
norms here are therefore evaluated on the stable support. Off the
support the delta-gradient grows like delta^(2p-1) as the smoothing
vanishes, which is exactly why the reduction is part of the statements
being checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CProvenance,
    DiagnosticsReport,
    LpProblem,
    RateClass,
    SolverConfig,
    SolverResult,
)
from .losses import LeastSquares
from .solver import DESCENT_SLACK, compute_weights

MIN_TRACE_FOR_RATE = 50
RATE_R2_GATE = 0.99
GRAD_BOUND_RSLACK = 1e-8


class NotStabilizedError(ValueError):
    """A tail check was invoked on a trace whose support never stabilized."""


class NonGeometricScheduleError(ValueError):
    """The smoothing schedule of the trace is not exact geometric decay."""


@dataclass(frozen=True)
class DescentCheck:
    violations: int
    worst_margin: float


@dataclass(frozen=True)
class CEstimate:
    C: float
    provenance: CProvenance
    R: float


@dataclass(frozen=True)
class Stabilization:
    support_stable_at: int | None
    sign_stable_at: int | None


@dataclass(frozen=True)
class GradientBoundCheck:
    D1: float
    violations: int


@dataclass(frozen=True)
class CConditionsCheck:
    a: float
    b: float
    a_x: float
    holds: bool
    evaluated_steps: int
    evaluated_x_steps: int
    sup_z_norm: float


@dataclass(frozen=True)
class RateEstimate:
    rate_class: RateClass
    rate_params: dict | None
    goodness: float


@dataclass(frozen=True)
class DeltaTrace:
    """Trace re-parameterized with delta = sqrt(eps), z = (x, delta)."""

    x_mat: np.ndarray      # K x n iterates
    delta_mat: np.ndarray  # K x n componentwise sqrt of the smoothing
    F_vals: np.ndarray     # K smoothed objective values

    @classmethod
    def from_trace(cls, trace) -> "DeltaTrace":
        if not trace:
            raise ValueError("trace must be nonempty")
        x = np.stack([r.x for r in trace])
        delta = np.sqrt(np.stack([r.eps for r in trace]))
        F = np.array([r.F_val for r in trace])
        return cls(x_mat=x, delta_mat=delta, F_vals=F)

    @property
    def z_mat(self) -> np.ndarray:
        return np.concatenate([self.x_mat, self.delta_mat], axis=1)


def check_descent(trace, beta_hat: float) -> DescentCheck:
    """Count violations of the per-iteration sufficient decrease.

    The property is F(k+1) <= F(k) - beta_hat * ||x(k+1) - x(k)||^2; the
    reported margin of an iteration is how far F(k+1) overshoots the
    allowed value, so positive margins beyond the roundoff slack count
    as violations and the worst margin is the largest seen.
    """
    if len(trace) < 2:
        raise ValueError("descent check needs a trace with at least 2 records")
    if not beta_hat > 0:
        raise ValueError(f"beta_hat must be positive, got {beta_hat}")
    F = np.array([r.F_val for r in trace])
    steps = np.array([r.step_norm for r in trace])
    margins = F[1:] - F[:-1] + beta_hat * steps[1:] ** 2
    violations = int(np.sum(margins > DESCENT_SLACK))
    return DescentCheck(violations=violations, worst_margin=float(margins.max()))


def constant_C(problem: LpProblem, config: SolverConfig, trace) -> CEstimate:
    """Weight-threshold constant C = sup over the level-set ball of the
    gradient norm, plus 2 R beta.

    For full-column-rank least squares the level set is contained in a
    computable ball: 0.5 ||A x - b||^2 <= F0 forces
    ||x|| <= (||b|| + sqrt(2 F0)) / sigma_min(A), which yields a closed
    form upper bound on C (provenance UPPER_BOUND; any overestimate of C
    keeps the absorption guarantee valid and only loosens the magnitude
    bounds in the safe direction). Every other case falls back to an
    empirical surrogate measured along the trace, which is useful for
    diagnostics but proves nothing.
    """
    if not trace:
        raise ValueError("trace must be nonempty")
    loss = problem.loss
    beta = config.beta
    if isinstance(loss, LeastSquares):
        m, n = loss.A.shape
        svals = np.linalg.svd(loss.A, compute_uv=False)
        smax, smin = float(svals[0]), float(svals[-1])
        full_rank = m >= n and smin > max(m, n) * np.finfo(float).eps * smax
        if full_rank:
            F0 = trace[0].F_val
            R = (float(np.linalg.norm(loss.b)) + math.sqrt(2.0 * F0)) / smin
            C = float(np.linalg.norm(loss.A.T @ loss.b)) + smax**2 * R + 2.0 * R * beta
            return CEstimate(C=C, provenance=CProvenance.UPPER_BOUND, R=R)
    x_max = max(float(np.linalg.norm(r.x)) for r in trace)
    g_max = max(float(np.linalg.norm(loss.grad(r.x))) for r in trace)
    R = 1.1 * x_max
    return CEstimate(
        C=g_max + 2.0 * R * beta, provenance=CProvenance.EMPIRICAL_SURROGATE, R=R
    )


def support_sign_stabilization(trace) -> Stabilization:
    """Earliest indices from which support resp. sign stay constant.

    A value is absent when constancy only holds over the final record by
    itself, i.e. when the trace gives no evidence of stabilization.
    """
    if not trace:
        raise ValueError("trace must be nonempty")
    K = len(trace)

    def suffix_start(equal) -> int | None:
        j = K - 1
        while j > 0 and equal(trace[j - 1], trace[j]):
            j -= 1
        return j if j < K - 1 else None

    return Stabilization(
        support_stable_at=suffix_start(lambda a, b: a.support == b.support),
        sign_stable_at=suffix_start(lambda a, b: np.array_equal(a.sign, b.sign)),
    )


def magnitude_threshold(C: float, lam: float, p: float) -> float:
    """(C / (p lam))^(1/(p-1)), the floor under surviving magnitudes."""
    if C <= 0:
        return math.inf
    return (C / (p * lam)) ** (1.0 / (p - 1.0))


def check_magnitude_bound(trace, C: float, problem: LpProblem, tol_step: float = 0.0) -> bool:
    """Verify the magnitude floor on the stabilized support.

    For every k past stabilization and every surviving coordinate the
    magnitude must exceed (C/(p lam))^(1/(p-1)) - eps_i^k (with 1e-12
    slack); the final point must additionally clear the eps-free floor,
    relaxed by tol_step because the run stopped at finite precision.
    """
    stab = support_sign_stabilization(trace)
    if stab.support_stable_at is None:
        raise NotStabilizedError("support did not stabilize within the trace")
    kbar = stab.support_stable_at
    idx = np.array(sorted(trace[-1].support), dtype=int)
    if idx.size == 0:
        return True
    thr = magnitude_threshold(C, problem.lam, problem.p)
    for rec in trace[kbar:]:
        if np.any(np.abs(rec.x[idx]) <= thr - rec.eps[idx] - 1e-12):
            return False
    x_last = trace[-1].x
    if np.any(np.abs(x_last[idx]) < thr - tol_step - 1e-12):
        return False
    return True


def grad_F_xdelta(problem: LpProblem, x, delta) -> np.ndarray:
    """Gradient of F(x, delta) = f(x) + lam sum (|x_i| + delta_i^2)^p.

    Returns the 2n concatenation of the x-block
    grad f + lam * w * sign(x) and the delta-block 2 lam * w * delta,
    where w = p (|x| + delta^2)^(p-1). The x-derivative does not exist
    on the axes; entries with x_i = 0 are set to 0 by convention.
    """
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    w = problem.p * (np.abs(x) + delta**2) ** (problem.p - 1.0)
    xblock = problem.loss.grad(x) + problem.lam * w * np.sign(x)
    xblock[x == 0] = 0.0
    dblock = 2.0 * problem.lam * w * delta
    return np.concatenate([xblock, dblock])


def _reduced_grad_F_norm(problem: LpProblem, x, eps, idx) -> float:
    """||grad F(x, delta)||_2 restricted to the stable support."""
    if idx.size == 0:
        return 0.0
    w = compute_weights(x, eps, problem.p)
    g = problem.loss.grad(x)
    xblock = g[idx] + problem.lam * w[idx] * np.sign(x[idx])
    dblock = 2.0 * problem.lam * w[idx] * np.sqrt(eps[idx])
    return math.sqrt(float(xblock @ xblock) + float(dblock @ dblock))


def gradient_bound_constant(problem: LpProblem, config: SolverConfig, C: float, delta0_max: float) -> float:
    """Conservative constant for the gradient-vs-step bound.

    Includes the sqrt(n) factor from the l1/l2 conversion in both terms;
    the stated constant in the source analysis drops it, but the
    derivation itself does not, so the conservative version is the one
    that must hold.
    """
    p, lam, n = problem.p, problem.lam, problem.n
    if C > 0:
        dbar = p * (1.0 - p) * (p * lam / C) ** ((p - 2.0) / (1.0 - p))
    else:
        dbar = 0.0
    root_mu = math.sqrt(config.mu)
    return max(
        config.beta + problem.loss.L_f + math.sqrt(n) * dbar,
        2.0 * math.sqrt(n) * dbar * delta0_max + 2.0 * C * root_mu / (1.0 - root_mu),
    )


def check_gradient_bound(trace, problem: LpProblem, config: SolverConfig, C: float) -> GradientBoundCheck:
    """Verify ||grad F(x^k, delta^k)|| <= D1 (||step|| + drop in ||delta||_1).

    Only applies after the support stabilizes (index kbar); the norm on
    the left is taken over the stable support, where the bound's weight
    estimates are valid. Violations are counted with 1e-8 relative slack.
    """
    stab = support_sign_stabilization(trace)
    if stab.support_stable_at is None:
        raise NotStabilizedError("support did not stabilize within the trace")
    kbar = stab.support_stable_at
    idx = np.array(sorted(trace[-1].support), dtype=int)
    delta0_max = float(np.sqrt(trace[0].eps).max())
    D1 = gradient_bound_constant(problem, config, C, delta0_max)
    violations = 0
    for k in range(kbar + 1, len(trace)):
        prev, cur = trace[k - 1], trace[k]
        lhs = _reduced_grad_F_norm(problem, cur.x, cur.eps, idx)
        delta_drop = float(np.sum(np.sqrt(prev.eps)) - np.sum(np.sqrt(cur.eps)))
        rhs = D1 * (float(np.linalg.norm(cur.x - prev.x)) + delta_drop)
        if lhs > rhs * (1.0 + GRAD_BOUND_RSLACK):
            violations += 1
    return GradientBoundCheck(D1=D1, violations=violations)


def _validate_geometric(trace, config: SolverConfig) -> None:
    for k in range(1, len(trace)):
        expected = np.maximum(config.mu * trace[k - 1].eps, config.eps_floor)
        if not np.array_equal(trace[k].eps, expected):
            raise NonGeometricScheduleError(
                f"eps at iteration {k} is not exact geometric decay of its predecessor"
            )


def check_c_conditions(trace, problem: LpProblem, config: SolverConfig) -> CConditionsCheck:
    """Measure the KL-framework constants on the stabilized tail.

    a: smallest ratio of the decrease of F(z) to ||z-step||^2 (sufficient
    decrease, condition C1); b: largest ratio of ||grad F(z)|| at the new
    point to the step length (relative error, condition C2); a_x: the
    same as a but for the x-part of the decrease at frozen smoothing,
    which the theory lower-bounds by beta - L_f/2. All quantities live
    on the reduced space of the stable support; z-steps of length zero
    are skipped. Boundedness of the sequence (condition C3) is reported
    as the largest ||z^k||.

    F-differences are reassembled from the stored f-values and
    per-coordinate regularizer terms rather than subtracting two large
    objective values, which keeps the quotients meaningful down to step
    sizes near the termination tolerance. Even so, a run can continue
    far past the point where its per-step decrease drops below what
    binary64 can resolve, so a quotient is only measured when the
    guaranteed decrease of the step, beta_hat ||dx||^2 for the x-part
    plus 2 lam sqrt(mu)/(1-sqrt(mu)) sum_i w_i (ddelta_i)^2 for the
    delta-part (weights taken from the trace), exceeds the roundoff
    floor 1e-12 * max(1, |F|). The relative-error ratio b involves no
    such cancellation and is measured on every nonzero step.
    """
    _validate_geometric(trace, config)
    stab = support_sign_stabilization(trace)
    if stab.support_stable_at is None:
        raise NotStabilizedError("support did not stabilize within the trace")
    kbar = stab.support_stable_at
    idx = np.array(sorted(trace[-1].support), dtype=int)
    lam, p = problem.lam, problem.p
    beta_hat = config.beta - problem.loss.L_f / 2.0

    a = math.inf
    b = 0.0
    a_x = math.inf
    evaluated = 0
    evaluated_x = 0
    root_mu = math.sqrt(config.mu)
    delta_gain = 2.0 * lam * root_mu / (1.0 - root_mu)
    for k in range(kbar, len(trace) - 1):
        cur, nxt = trace[k], trace[k + 1]
        dx = nxt.x - cur.x
        dx2 = float(dx @ dx)
        dd = np.sqrt(cur.eps[idx]) - np.sqrt(nxt.eps[idx])
        dz2 = dx2 + float(dd @ dd)
        if dz2 == 0.0:
            continue
        lhs = _reduced_grad_F_norm(problem, nxt.x, nxt.eps, idx)
        b = max(b, lhs / math.sqrt(dz2))
        floor = 1e-12 * max(1.0, abs(cur.F_val))
        reg_cur = (np.abs(cur.x[idx]) + cur.eps[idx]) ** p
        w_cur = compute_weights(cur.x, cur.eps, p)[idx]
        guaranteed = beta_hat * dx2 + delta_gain * float(np.sum(w_cur * dd * dd))
        if guaranteed >= floor:
            reg_nxt = (np.abs(nxt.x[idx]) + nxt.eps[idx]) ** p
            decrease = (cur.f_val - nxt.f_val) + lam * float(np.sum(reg_cur - reg_nxt))
            a = min(a, decrease / dz2)
            evaluated += 1
        if dx2 > 0.0 and beta_hat * dx2 >= floor:
            reg_nxt_fixed = (np.abs(nxt.x[idx]) + cur.eps[idx]) ** p
            decrease_x = (cur.f_val - nxt.f_val) + lam * float(
                np.sum(reg_cur - reg_nxt_fixed)
            )
            a_x = min(a_x, decrease_x / dx2)
            evaluated_x += 1

    sup_z = max(
        math.sqrt(float(r.x @ r.x) + float(np.sum(r.eps))) for r in trace
    )
    holds = a > 0.0 and math.isfinite(b)
    return CConditionsCheck(
        a=a,
        b=b,
        a_x=a_x,
        holds=holds,
        evaluated_steps=evaluated,
        evaluated_x_steps=evaluated_x,
        sup_z_norm=sup_z,
    )


def _linear_fit(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and R^2 of ys against xs."""
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    if ss_tot == 0.0:
        return float(slope), 1.0 if ss_res == 0.0 else 0.0
    return float(slope), 1.0 - ss_res / ss_tot


def _classify_rate(k: np.ndarray, e: np.ndarray, scale: float) -> RateEstimate:
    K = len(e)
    tail_start = K // 2
    # finite convergence: a trailing block of exact zeros that begins
    # before the tail means the iterates repeated exactly from then on
    j = K
    while j > 0 and e[j - 1] == 0.0:
        j -= 1
    if j < tail_start:
        return RateEstimate(RateClass.FINITE, None, math.nan)

    cutoff = 1e3 * np.finfo(float).eps * scale
    tk = k[tail_start:]
    te = e[tail_start:]
    keep = (te > cutoff) & (te > 0.0)
    tk, te = tk[keep], te[keep]
    if tk.size < 5:
        return RateEstimate(RateClass.INCONCLUSIVE, None, math.nan)
    y = np.log(te)

    candidates: list[tuple[float, RateClass, dict]] = []
    slope, r2_lin = _linear_fit(tk, y)
    gamma = math.exp(slope)
    if r2_lin >= RATE_R2_GATE and 0.0 < gamma < 1.0:
        candidates.append(
            (r2_lin, RateClass.LINEAR, {"gamma": gamma, "r_squared": r2_lin})
        )
    pos = tk > 0
    if int(pos.sum()) >= 5:
        expo, r2_pow = _linear_fit(np.log(tk[pos]), y[pos])
        if r2_pow >= RATE_R2_GATE and expo < 0.0:
            candidates.append(
                (r2_pow, RateClass.SUBLINEAR, {"exponent": expo, "r_squared": r2_pow})
            )
    if not candidates:
        return RateEstimate(RateClass.INCONCLUSIVE, None, math.nan)
    # both models can clear the gate on a short tail window; the better
    # fit decides, with ties going to the linear model
    candidates.sort(key=lambda c: (c[0], c[1] is RateClass.LINEAR))
    r2, cls, params = candidates[-1]
    return RateEstimate(cls, params, r2)


def estimate_rate(trace, x_star=None) -> RateEstimate:
    """Classify the empirical convergence rate of ||x^k - x*|| over the tail.

    x* defaults to the final iterate. Errors below 1e3 * eps_machine *
    ||x*|| sit at the noise floor and are excluded from the fits.
    """
    if len(trace) < MIN_TRACE_FOR_RATE:
        raise ValueError(
            f"rate estimation needs at least {MIN_TRACE_FOR_RATE} iterations, "
            f"got {len(trace)}"
        )
    x_star = trace[-1].x if x_star is None else np.asarray(x_star, dtype=float)
    e = np.array([float(np.linalg.norm(r.x - x_star)) for r in trace])
    k = np.arange(len(e), dtype=float)
    return _classify_rate(k, e, scale=float(np.linalg.norm(x_star)))


def estimate_rate_from_errors(k, e, scale: float | None = None) -> RateEstimate:
    """Rate classification for a standalone error sequence (k_i, e_i).

    Without a reference point the noise-floor cutoff scales with the
    largest error, which keeps the classification invariant under
    rescaling of the whole sequence.
    """
    k = np.asarray(k, dtype=float)
    e = np.asarray(e, dtype=float)
    if k.shape != e.shape or k.ndim != 1:
        raise ValueError("k and e must be 1-D arrays of equal length")
    if len(e) < 2:
        raise ValueError("error sequence too short to classify")
    if np.any(e < 0):
        raise ValueError("errors must be nonnegative")
    if scale is None:
        scale = float(e.max())
    return _classify_rate(k, e, scale=scale)


def check_zero_absorption(trace, problem: LpProblem, C: float) -> int:
    """Count re-activations of coordinates whose weight crossed C / lam.

    Once w_i exceeds C / lam at some iteration, the coordinate must stay
    exactly zero afterwards; the return value is the number of
    coordinate-iterations violating that, 0 for a theory-conforming trace.
    """
    n = problem.n
    exceeded = np.zeros(n, dtype=bool)
    violations = 0
    threshold = C / problem.lam
    for rec in trace:
        violations += int(np.sum(exceeded & (rec.x != 0)))
        w = compute_weights(rec.x, rec.eps, problem.p)
        exceeded |= w > threshold
    return violations


def run_diagnostics(
    problem: LpProblem,
    config: SolverConfig,
    result: SolverResult,
    x_star=None,
) -> DiagnosticsReport:
    """Run every check on a finished solve and assemble the report.

    Checks that require a stabilized support are skipped (NaN constants,
    failing gates) when stabilization never happened; the overall
    all_passed flag is false in that case through the stabilization
    fields themselves.
    """
    trace = result.trace
    beta_hat = config.beta - problem.loss.L_f / 2.0
    if len(trace) >= 2:
        descent = check_descent(trace, beta_hat)
    else:
        descent = DescentCheck(violations=0, worst_margin=-math.inf)
    ce = constant_C(problem, config, trace)
    stab = support_sign_stabilization(trace)

    magnitude_ok = False
    d1 = math.nan
    grad_violations = 0
    a = math.nan
    b = math.nan
    if stab.support_stable_at is not None:
        magnitude_ok = check_magnitude_bound(trace, ce.C, problem, tol_step=config.tol_step)
        gb = check_gradient_bound(trace, problem, config, ce.C)
        d1 = gb.D1
        grad_violations = gb.violations
        try:
            cc = check_c_conditions(trace, problem, config)
            a, b = cc.a, cc.b
        except NonGeometricScheduleError:
            pass

    try:
        rate = estimate_rate(trace, x_star)
    except ValueError:
        rate = RateEstimate(RateClass.INCONCLUSIVE, None, math.nan)

    return DiagnosticsReport(
        descent_violations=descent.violations,
        descent_worst_margin=descent.worst_margin,
        support_stable_at=stab.support_stable_at,
        sign_stable_at=stab.sign_stable_at,
        C_value=ce.C,
        C_provenance=ce.provenance,
        magnitude_bound_ok=magnitude_ok,
        D1_value=d1,
        gradient_bound_violations=grad_violations,
        c1_constant_a=a,
        c2_constant_b=b,
        rate_class=rate.rate_class,
        rate_params=rate.rate_params,
    )
