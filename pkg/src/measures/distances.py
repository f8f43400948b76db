"""
Fidelity family, purified distance and the channel purified distance.

Trace distance is reported unnormalized, as the trace norm of the difference. On
normalized pairs this gives ||rho - sigma||_1 / 2 <= P(rho, sigma) <= sqrt(||rho - sigma||_1).
"""

import logging
import math
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from src.constants import CHANNEL_DISTANCE_STARTS, OPTIMIZER_GAP_FLOOR
from src.errors import require
from src.measures.values import BoundInterval, DistanceValue
from src.quantum.qregisters import DensityState, OperatorLike, as_matrix, as_operator, hermitian_eigh, sqrtm_psd
from src.utils.optim import OptimizerConfig, maximize_multistart
from src.utils.sampling import haar_vector, spawn_rngs

if TYPE_CHECKING:
    from src.quantum.qchannels import Channel

logger = logging.getLogger(__name__)


class TriangleCheck(NamedTuple):
    """Tight triangle inequality evaluation; lhs <= rhs is expected when applicable."""

    applicable: bool
    lhs: float
    rhs: float


def _same_dims(rho: OperatorLike, sigma: OperatorLike) -> None:
    a, b = as_operator(rho).shape.dims, as_operator(sigma).shape.dims
    require(a == b, "same shape", f"register dimensions {a} and {b} differ")


def fidelity_matrix(rho: np.ndarray, sigma: np.ndarray) -> float:
    """||sqrt(rho) sqrt(sigma)||_1 as the sum of singular values."""
    product = sqrtm_psd(sigma) @ sqrtm_psd(rho)
    return float(np.linalg.svd(product, compute_uv=False).sum())


def fidelity(rho: OperatorLike, sigma: OperatorLike) -> float:
    """
    Fidelity F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1.

    Raises:
        DomainError: If the register dimensions differ
    """
    _same_dims(rho, sigma)
    return fidelity_matrix(as_matrix(rho), as_matrix(sigma))


def generalized_fidelity(rho: OperatorLike, sigma: OperatorLike) -> float:
    """F + sqrt((1 - Tr rho)(1 - Tr sigma)); equals F when either input is normalized."""
    f = fidelity(rho, sigma)
    deficit = max(0.0, 1 - as_operator(rho).trace) * max(0.0, 1 - as_operator(sigma).trace)
    return min(1.0, f + math.sqrt(deficit))


def purified_distance_from_fidelity(fbar: float) -> float:
    return math.sqrt(max(0.0, 1.0 - min(fbar, 1.0) ** 2))


def purified_distance(rho: OperatorLike, sigma: OperatorLike) -> float:
    return purified_distance_from_fidelity(generalized_fidelity(rho, sigma))


def trace_distance(rho: OperatorLike, sigma: OperatorLike) -> float:
    """Unnormalized trace norm ||rho - sigma||_1."""
    _same_dims(rho, sigma)
    evals = hermitian_eigh(as_matrix(rho) - as_matrix(sigma)).eigenvalues
    return float(np.abs(evals).sum())


def distance_values(rho: OperatorLike, sigma: OperatorLike) -> list[DistanceValue]:
    fbar = generalized_fidelity(rho, sigma)
    return [
        DistanceValue("fidelity", fidelity(rho, sigma)),
        DistanceValue("generalized_fidelity", fbar),
        DistanceValue("purified", purified_distance_from_fidelity(fbar)),
        DistanceValue("trace", trace_distance(rho, sigma)),
    ]


def triangle_bound(eps: float, eps_prime: float) -> float:
    """eps sqrt(1 - eps'^2) + eps' sqrt(1 - eps^2); monotone on eps^2 + eps'^2 <= 1."""
    return eps * math.sqrt(max(0.0, 1 - eps_prime**2)) + eps_prime * math.sqrt(max(0.0, 1 - eps**2))


def tight_triangle_check(rho: DensityState, sigma: DensityState, tau: DensityState) -> TriangleCheck:
    """
    Evaluate P(rho, tau) against P(rho, sigma) F(sigma, tau) + P(sigma, tau) F(rho, sigma).

    Args:
        rho: First state
        sigma: Intermediate state
        tau: Last state

    Returns:
        TriangleCheck; applicable when P(rho, sigma)^2 + P(sigma, tau)^2 <= 1
    """
    p_rs = purified_distance(rho, sigma)
    p_st = purified_distance(sigma, tau)
    applicable = p_rs**2 + p_st**2 <= 1.0
    rhs = p_rs * fidelity(sigma, tau) + p_st * fidelity(rho, sigma)
    return TriangleCheck(applicable, purified_distance(rho, tau), rhs)


def _extended_output(kraus: list[np.ndarray], psi: np.ndarray) -> np.ndarray:
    """(N (x) id)(|psi><psi|) for psi given as a d_in x d_ref matrix."""
    out = 0
    for k in kraus:
        v = (k @ psi).reshape(-1)
        out = out + np.outer(v, v.conj())
    return out


def _vector_from_params(x: np.ndarray, dim: int) -> np.ndarray:
    v = x[:dim] + 1j * x[dim:]
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else np.eye(1, dim, 0).reshape(-1).astype(complex)


def channel_purified_distance(first: "Channel", second: "Channel", opt: OptimizerConfig | None = None) -> BoundInterval:
    """
    Channel purified distance: sup over pure inputs psi_AR with |R| = |A| of the output purified distance.

    The lower end is the best value found, a valid lower bound. The upper end adds the
    multi-start spread (floored) and is a heuristic.

    Args:
        first: Channel E
        second: Channel F with the same input and output dimensions
        opt: Optimizer configuration; start 0 is the maximally entangled input

    Returns:
        BoundInterval
    """
    require(first.in_shape.dims == second.in_shape.dims, "matching input shapes")
    require(first.out_shape.dims == second.out_shape.dims, "matching output shapes")
    opt = opt or OptimizerConfig(starts=CHANNEL_DISTANCE_STARTS)
    if np.allclose(first.choi().matrix, second.choi().matrix, atol=1e-12, rtol=0):
        return BoundInterval(0.0, 0.0, "identical Choi matrices", "identical Choi matrices")

    d = first.in_shape.total
    n_params = d * d

    def objective(x: np.ndarray) -> float:
        psi = _vector_from_params(x, n_params).reshape(d, d)
        f = fidelity_matrix(_extended_output(first.kraus, psi), _extended_output(second.kraus, psi))
        return purified_distance_from_fidelity(f)

    mes = np.eye(d).reshape(-1) / math.sqrt(d)
    starts = [np.concatenate([mes, np.zeros(n_params)])]
    for rng in spawn_rngs(opt.seed, opt.starts - 1):
        v = haar_vector(rng, n_params)
        starts.append(np.concatenate([v.real, v.imag]))
    report = maximize_multistart(objective, starts, opt)
    lower = min(1.0, report.best.value)
    gap = min(1.0 - lower, max(report.spread, OPTIMIZER_GAP_FLOOR))
    logger.info(f"Channel purified distance lower end {lower:.8f} (heuristic gap {gap:.2e})")
    return BoundInterval(
        lower,
        lower + gap,
        f"best of {opt.starts} multi-start local searches",
        "heuristic: lower end plus optimizer spread",
    )
