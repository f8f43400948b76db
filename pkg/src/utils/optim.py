"""
Multi-start local optimization with a deterministic merge, and conic solves with solver fallback.
"""

import logging
import os
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import cvxpy as cp
import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize

from src.constants import DEFAULT_WORKERS, SDP_SOLVERS, SDP_TOLERANCE, THREADS_ENV_VAR
from src.errors import ConvergenceError, require

logger = logging.getLogger(__name__)

_SOLVER_OPTIONS = {
    "CLARABEL": {"tol_gap_abs": SDP_TOLERANCE, "tol_gap_rel": SDP_TOLERANCE, "tol_feas": SDP_TOLERANCE},
    "SCS": {"eps": 1e-9, "max_iters": 200_000},
}


@dataclass(frozen=True)
class OptimizerConfig:
    """Runtime settings for every multi-start search."""

    starts: int = 32
    seed: int | None = 0
    method: str = "Nelder-Mead"
    max_iter: int = 4000
    ftol: float = 1e-12
    xtol: float = 1e-10
    workers: int | None = None

    def __post_init__(self) -> None:
        require(self.starts >= 1, "starts >= 1")
        require(self.max_iter >= 1, "max_iter >= 1")


class StartResult(NamedTuple):
    """Outcome of one local search."""

    index: int
    value: float
    x: np.ndarray
    converged: bool


class MultiStartReport(NamedTuple):
    """Best value over all starts plus the spread used as a heuristic gap."""

    best: StartResult
    values: list[float]
    spread: float
    results: list[StartResult]
    converged: bool


def resolve_workers(requested: int | None = None) -> int:
    """Worker count, capped by the ONE_SHOT_QIT_THREADS environment variable."""
    cap_raw = os.environ.get(THREADS_ENV_VAR)
    cap = None
    if cap_raw:
        try:
            cap = max(1, int(cap_raw))
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV_VAR}={cap_raw!r}")
    workers = requested if requested is not None else (cap or DEFAULT_WORKERS)
    if cap is not None:
        workers = min(workers, cap)
    return max(1, workers)


def _options(config: OptimizerConfig) -> dict:
    if config.method == "Nelder-Mead":
        return {"maxiter": config.max_iter, "xatol": config.xtol, "fatol": config.ftol, "adaptive": True}
    if config.method == "L-BFGS-B":
        return {"maxiter": config.max_iter, "ftol": 1e-15, "gtol": 1e-10}
    return {"maxiter": config.max_iter}


def _local_search(objective: Callable[[np.ndarray], float], x0: np.ndarray, index: int, config: OptimizerConfig):
    result = minimize(lambda x: -objective(x), x0, method=config.method, options=_options(config))
    value = float(-result.fun)
    start_value = float(objective(x0))
    if start_value > value:
        return StartResult(index, start_value, np.asarray(x0), bool(result.success))
    return StartResult(index, value, np.asarray(result.x), bool(result.success))


def maximize_multistart(
    objective: Callable[[np.ndarray], float],
    starts: Sequence[np.ndarray],
    config: OptimizerConfig,
) -> MultiStartReport:
    """
    Maximize an objective from several starting points.

    The merge takes the maximum value, ties going to the lowest start index, so the result
    does not depend on the worker count. A start never reports less than its own
    starting value.

    Args:
        objective: Real function of a parameter vector
        starts: Starting points, already drawn from spawned generators
        config: Optimizer configuration

    Returns:
        MultiStartReport with best result and the spread between best and the 75th percentile
    """
    workers = resolve_workers(config.workers)
    logger.debug(f"Multi-start search with {len(starts)} starts on {workers} workers")
    results = Parallel(n_jobs=workers, prefer="threads")(
        delayed(_local_search)(objective, np.asarray(x0, dtype=float), k, config) for k, x0 in enumerate(starts)
    )
    results = sorted(results, key=lambda r: r.index)
    values = [r.value for r in results]
    best = results[int(np.argmax(values))]
    spread = float(best.value - np.percentile(values, 75))
    converged = all(r.converged for r in results)
    if not converged:
        failed = sum(not r.converged for r in results)
        logger.warning(f"{failed} of {len(results)} local searches did not report convergence")
    return MultiStartReport(best, values, spread, results, converged)


def solve_conic(problem: cp.Problem, label: str) -> float:
    """
    Solve a conic program, trying each configured solver in turn.

    Args:
        problem: cvxpy problem
        label: Name used in log messages

    Returns:
        Optimal value

    Raises:
        ConvergenceError: If no solver reaches an optimal status
    """
    installed = set(cp.installed_solvers())
    for solver in SDP_SOLVERS:
        if solver not in installed:
            continue
        options = _SOLVER_OPTIONS.get(solver, {})
        try:
            problem.solve(solver=solver, **options)
        except cp.error.SolverError as e:
            logger.warning(f"{label}: solver {solver} failed ({e})")
            continue
        if problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            if problem.status == cp.OPTIMAL_INACCURATE:
                logger.warning(f"{label}: solver {solver} reports an inaccurate optimum")
            logger.debug(f"{label}: solved with {solver}, value {problem.value}")
            return float(problem.value)
        logger.warning(f"{label}: solver {solver} ended with status {problem.status}")
    msg = f"{label}: no conic solver reached an optimal status"
    logger.error(msg)
    raise ConvergenceError(msg)
