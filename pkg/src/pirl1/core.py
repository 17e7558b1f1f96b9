"""Shared domain types: problem instance, solver configuration, traces, reports.

All types are immutable value objects; arrays are stored as read-only
copies so instances can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .losses import SmoothLoss


class BetaTooSmallError(ValueError):
    """The prox parameter beta does not exceed L_f / 2."""


class Schedule(Enum):
    GEOMETRIC = "geometric"


class SolverStatus(Enum):
    CONVERGED = "converged"
    MAX_ITER_REACHED = "max_iter_reached"
    NUMERICAL_FAILURE = "numerical_failure"


class CProvenance(Enum):
    EXACT = "exact"
    UPPER_BOUND = "upper_bound"
    EMPIRICAL_SURROGATE = "empirical_surrogate"


class RateClass(Enum):
    FINITE = "finite"
    LINEAR = "linear"
    SUBLINEAR = "sublinear"
    INCONCLUSIVE = "inconclusive"


def _frozen_vector(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {a.shape}")
    a = a.copy()
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LpProblem:
    """Instance of: minimize f(x) + lam * sum_i |x_i|^p with 0 < p < 1.

    ``lam`` is the regularization weight, ``p`` the quasi-norm exponent,
    ``n`` the dimension (must match the loss).
    """

    loss: SmoothLoss
    lam: float
    p: float
    n: int = -1  # -1 means "take the loss dimension"

    def __post_init__(self):
        if not isinstance(self.loss, SmoothLoss):
            raise TypeError(f"loss must be a SmoothLoss, got {type(self.loss)!r}")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lam must be a finite positive real, got {self.lam}")
        if not (0.0 < self.p < 1.0):
            raise ValueError(f"p must lie in the open interval (0, 1), got {self.p}")
        n = self.loss.n if self.n == -1 else self.n
        if n != self.loss.n or n < 1:
            raise ValueError(
                f"dimension n={self.n} does not match loss dimension {self.loss.n}"
            )
        object.__setattr__(self, "n", n)


@dataclass(frozen=True)
class SolverConfig:
    """Algorithm parameters.

    ``beta`` must exceed L_f / 2 of the loss it is used with; that is
    checked when a solve starts, since the config does not know the loss.
    ``eps0`` is a positive scalar (broadcast) or positive vector.
    ``eps_floor`` clamps the smoothing from below to dodge overflow in
    the weights when a coordinate sits exactly at zero.
    """

    beta: float
    mu: float = 0.9
    eps0: float | np.ndarray = 1.0
    max_iter: int = 100_000
    tol_step: float = 1e-10
    tol_eps: float = 1e-12
    eps_floor: float = 1e-30
    schedule: Schedule = Schedule.GEOMETRIC

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be a finite positive real, got {self.beta}")
        if not (0.0 < self.mu < 1.0):
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
        eps0 = np.asarray(self.eps0, dtype=float)
        if eps0.ndim == 0:
            eps0 = float(eps0)
            if not (math.isfinite(eps0) and eps0 > 0):
                raise ValueError(f"eps0 must be positive, got {eps0}")
            min_eps0 = eps0
            object.__setattr__(self, "eps0", eps0)
        else:
            eps0 = _frozen_vector(eps0, "eps0")
            if eps0.size == 0 or not np.all(np.isfinite(eps0)) or np.any(eps0 <= 0):
                raise ValueError("eps0 must be positive componentwise")
            min_eps0 = float(eps0.min())
            object.__setattr__(self, "eps0", eps0)
        if not (isinstance(self.max_iter, int) and self.max_iter >= 1):
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not (math.isfinite(self.tol_step) and self.tol_step >= 0):
            raise ValueError(f"tol_step must be nonnegative, got {self.tol_step}")
        if not (math.isfinite(self.tol_eps) and self.tol_eps >= 0):
            raise ValueError(f"tol_eps must be nonnegative, got {self.tol_eps}")
        if not (math.isfinite(self.eps_floor) and self.eps_floor > 0):
            raise ValueError(f"eps_floor must be positive, got {self.eps_floor}")
        if self.eps_floor > min_eps0:
            raise ValueError(
                f"eps_floor={self.eps_floor} exceeds the smallest eps0 component {min_eps0}"
            )
        if not isinstance(self.schedule, Schedule):
            raise ValueError(f"schedule must be a Schedule, got {self.schedule!r}")

    def initial_eps(self, n: int) -> np.ndarray:
        """eps0 broadcast to dimension n."""
        if isinstance(self.eps0, float):
            return np.full(n, self.eps0)
        if self.eps0.shape != (n,):
            raise ValueError(
                f"eps0 has shape {self.eps0.shape}, expected ({n},)"
            )
        return self.eps0.copy()


@dataclass(frozen=True)
class TraceRecord:
    """Snapshot of one iterate: point, smoothing, objective, step data.

    ``support`` is the set of indices with x_i != 0 and ``sign`` the
    componentwise sign vector; both are derived from x and validated,
    so a record can never carry an inconsistent support/sign pair.
    """

    k: int
    x: np.ndarray
    eps: np.ndarray
    F_val: float
    f_val: float
    step_norm: float
    residual: float
    support: frozenset[int]
    sign: np.ndarray

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"iteration index must be nonnegative, got {self.k}")
        x = np.asarray(self.x, dtype=float)
        eps = np.asarray(self.eps, dtype=float)
        if x.ndim != 1 or x.shape != eps.shape:
            raise ValueError(
                f"x and eps must be 1-D with equal shapes, got {x.shape} and {eps.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError("x contains non-finite entries")
        if not np.all(eps > 0) or not np.all(np.isfinite(eps)):
            raise ValueError("eps must be positive componentwise")
        if not (self.step_norm >= 0):
            raise ValueError(f"step_norm must be nonnegative, got {self.step_norm}")
        if not (self.residual >= 0):
            raise ValueError(f"residual must be nonnegative, got {self.residual}")
        expected_support = frozenset(int(i) for i in np.flatnonzero(x))
        if self.support != expected_support:
            raise ValueError("support is inconsistent with the nonzeros of x")
        sign = np.asarray(self.sign)
        if sign.shape != x.shape or not np.array_equal(sign, np.sign(x).astype(np.int8)):
            raise ValueError("sign vector is inconsistent with x")

    @classmethod
    def from_state(cls, k, x, eps, F_val, f_val, step_norm, residual) -> "TraceRecord":
        x = _frozen_vector(x, "x")
        eps = _frozen_vector(eps, "eps")
        sign = np.sign(x).astype(np.int8)
        sign.flags.writeable = False
        support = frozenset(int(i) for i in np.flatnonzero(x))
        return cls(
            k=int(k),
            x=x,
            eps=eps,
            F_val=float(F_val),
            f_val=float(f_val),
            step_norm=float(step_norm),
            residual=float(residual),
            support=support,
            sign=sign,
        )


Trace = tuple[TraceRecord, ...]


@dataclass(frozen=True)
class SolverResult:
    x_final: np.ndarray
    status: SolverStatus
    iterations: int
    trace: tuple[TraceRecord, ...]

    def __post_init__(self):
        if not self.trace:
            raise ValueError("trace must be nonempty")
        if not np.array_equal(self.trace[-1].x, self.x_final):
            raise ValueError("x_final must equal the last traced iterate")
        if self.iterations != len(self.trace) - 1:
            raise ValueError(
                f"iterations={self.iterations} inconsistent with trace length {len(self.trace)}"
            )


@dataclass(frozen=True)
class DiagnosticsReport:
    """Measured outcome of every convergence-theory check on one trace.

    Constants that could not be computed (e.g. because the support never
    stabilized) are NaN; the corresponding boolean gates then fail.
    """

    descent_violations: int
    descent_worst_margin: float
    support_stable_at: int | None
    sign_stable_at: int | None
    C_value: float
    C_provenance: CProvenance
    magnitude_bound_ok: bool
    D1_value: float
    gradient_bound_violations: int
    c1_constant_a: float
    c2_constant_b: float
    rate_class: RateClass
    rate_params: dict | None = field(default=None)

    def __post_init__(self):
        has_params = self.rate_params is not None
        expects_params = self.rate_class in (RateClass.LINEAR, RateClass.SUBLINEAR)
        if has_params != expects_params:
            raise ValueError(
                "rate_params must be present exactly for linear/sublinear classes"
            )

    @property
    def all_passed(self) -> bool:
        """True when every guarantee-backed check passed.

        The rate class is reported but not gated: it is a statistical
        estimate, and a quickly converging run legitimately comes out
        FINITE or INCONCLUSIVE.
        """
        return (
            self.descent_violations == 0
            and self.support_stable_at is not None
            and self.sign_stable_at is not None
            and self.magnitude_bound_ok
            and self.gradient_bound_violations == 0
            and self.c1_constant_a > 0
            and math.isfinite(self.c2_constant_b)
        )

    def to_json_dict(self) -> dict:
        """Flat JSON-safe dict; non-finite floats map to None."""

        def num(v):
            if v is None:
                return None
            v = float(v)
            return v if math.isfinite(v) else None

        out = {
            "descent_violations": self.descent_violations,
            "descent_worst_margin": num(self.descent_worst_margin),
            "support_stable_at": self.support_stable_at,
            "sign_stable_at": self.sign_stable_at,
            "C_value": num(self.C_value),
            "C_provenance": self.C_provenance.value,
            "magnitude_bound_ok": self.magnitude_bound_ok,
            "D1_value": num(self.D1_value),
            "gradient_bound_violations": self.gradient_bound_violations,
            "c1_constant_a": num(self.c1_constant_a),
            "c2_constant_b": num(self.c2_constant_b),
            "rate_class": self.rate_class.value,
            "rate_gamma": None,
            "rate_exponent": None,
            "rate_r_squared": None,
            "all_passed": self.all_passed,
        }
        if self.rate_params:
            out["rate_gamma"] = num(self.rate_params.get("gamma"))
            out["rate_exponent"] = num(self.rate_params.get("exponent"))
            out["rate_r_squared"] = num(self.rate_params.get("r_squared"))
        return out
