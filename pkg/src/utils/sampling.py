"""
Seeded random generation of states, unitaries and measurements.

All randomness flows through counter-based Philox generators so that sweeps are
reproducible from a single recorded seed.
"""

import logging
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from src.quantum.qregisters import DensityState, HermitianOperator, PureVector, make_shape

logger = logging.getLogger(__name__)


def make_rng(seed: int | np.random.SeedSequence | None) -> np.random.Generator:
    """Philox-backed generator for a seed or a spawned seed sequence."""
    return np.random.Generator(np.random.Philox(seed))


def spawn_rngs(seed: int | None, count: int) -> list[np.random.Generator]:
    """Independent child generators; start k always gets stream k regardless of worker count."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [make_rng(child) for child in children]


def haar_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    vector = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return vector / np.linalg.norm(vector)


def haar_pure(rng: np.random.Generator, dims: int | Sequence[int], labels=None) -> PureVector:
    shape = make_shape(dims, labels)
    return PureVector(shape, haar_vector(rng, shape.total))


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)


def ginibre_matrix(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """Random density matrix G G^dagger / Tr from a complex Ginibre matrix."""
    g = rng.standard_normal((dim, rank or dim)) + 1j * rng.standard_normal((dim, rank or dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_density(rng: np.random.Generator, dims: int | Sequence[int], labels=None, rank: int | None = None) -> DensityState:
    shape = make_shape(dims, labels)
    return DensityState(HermitianOperator(shape, ginibre_matrix(rng, shape.total, rank)))


def random_probabilities(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.dirichlet(np.ones(size))


def random_diagonal(rng: np.random.Generator, dims: int | Sequence[int], labels=None) -> DensityState:
    shape = make_shape(dims, labels)
    return DensityState(HermitianOperator(shape, np.diag(random_probabilities(rng, shape.total))))


def random_povm(rng: np.random.Generator, dim: int, outcomes: int) -> list[np.ndarray]:
    """
    Random POVM built as S^{-1/2} G_i S^{-1/2} with G_i Wishart and S their sum.

    Args:
        rng: Generator
        dim: Hilbert space dimension
        outcomes: Number of POVM elements

    Returns:
        List of positive matrices summing to the identity
    """
    elements = []
    for _ in range(outcomes):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        elements.append(g @ g.conj().T)
    total = sum(elements)
    evals, vecs = np.linalg.eigh(total)
    inv_sqrt = (vecs / np.sqrt(evals)[None, :]) @ vecs.conj().T
    return [inv_sqrt @ e @ inv_sqrt for e in elements]
