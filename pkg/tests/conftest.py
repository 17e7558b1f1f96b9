"""Shared fixtures: golden problems, the seed-7 instance, the 100-run suite."""

from dataclasses import dataclass

import numpy as np
import pytest

import pirl1 as P
from pirl1.io import make_instance
from pirl1.losses import PowerIterationError

# The least-squares battery cycles sizes and the regularization grids
# over a deterministic seed scan. Seeds whose design matrix cannot be
# spectrally certified within the power-iteration budget (a nearly
# degenerate top eigen gap; seed 39 in this scan) are skipped, keeping
# the battery at exactly 100 solvable instances.
SUITE_SIZES = [(40, 20), (60, 30), (30, 15), (50, 25)]
SUITE_LAMBDAS = [0.01, 0.1, 1.0]
SUITE_PS = [0.3, 0.5, 0.7]
SUITE_NOISE = 0.01
SUITE_SPARSITY = 4
SUITE_COUNT = 100


@dataclass(frozen=True)
class SuiteRun:
    seed: int
    problem: P.LpProblem
    config: P.SolverConfig
    result: P.SolverResult
    c_estimate: P.CEstimate
    report: P.DiagnosticsReport


def build_suite_run(seed: int) -> SuiteRun | None:
    m, n = SUITE_SIZES[seed % 4]
    A, b, _ = make_instance(m, n, SUITE_SPARSITY, SUITE_NOISE, seed)
    try:
        loss = P.LeastSquares(A, b)
    except PowerIterationError:
        return None
    problem = P.LpProblem(
        loss=loss,
        lam=SUITE_LAMBDAS[seed % 3],
        p=SUITE_PS[(seed // 3) % 3],
    )
    # beta well above the L_f/2 validity floor but below the default L_f:
    # the faster contraction clears the transient out of the rate-fit
    # window while every descent-style guarantee still applies
    config = P.default_config(
        loss, beta=0.55 * loss.L_f, max_iter=5000, tol_step=1e-12
    )
    result = P.run(problem, config, np.zeros(n))
    c_est = P.constant_C(problem, config, result.trace)
    report = P.run_diagnostics(problem, config, result)
    return SuiteRun(seed, problem, config, result, c_est, report)


@pytest.fixture(scope="session")
def suite() -> list[SuiteRun]:
    runs = []
    seed = 0
    while len(runs) < SUITE_COUNT:
        run = build_suite_run(seed)
        if run is not None:
            runs.append(run)
        seed += 1
    return runs


@pytest.fixture(scope="session")
def one_d():
    """The 1-D golden problem 0.5 (x - 1.6)^2 + sqrt(|x|) from x0 = 0."""
    loss = P.LeastSquares([[1.0]], [1.6])
    problem = P.LpProblem(loss=loss, lam=1.0, p=0.5)
    config = P.SolverConfig(beta=1.05, mu=0.9, eps0=1.0)
    result = P.run(problem, config, np.zeros(1))
    return problem, config, result


@pytest.fixture(scope="session")
def seed7():
    """The 40x20, 4-sparse, seed-7 golden instance."""
    A, b, x_true = make_instance(40, 20, 4, 0.01, 7)
    loss = P.LeastSquares(A, b)
    problem = P.LpProblem(loss=loss, lam=0.1, p=0.5)
    config = P.default_config(loss, max_iter=5000, tol_step=1e-12)
    result = P.run(problem, config, np.zeros(20))
    return problem, config, result, x_true
