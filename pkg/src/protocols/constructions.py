"""
Executable pieces of the achievability and converse protocols: convex split, the
post-selection (de Finetti) objects, permutation symmetrization, the teleportation
error branch, the coding-then-simulation composition and the strong converse for the
noiseless channel.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from joblib import Parallel, delayed

from src.constants import BOUND_TOL, MAX_DENSE_DIM, MAX_PERMUTATION_REGISTERS
from src.errors import require
from src.measures.distances import channel_purified_distance, fidelity, fidelity_matrix, purified_distance
from src.measures.entropies import dmax
from src.quantum.qchannels import Channel, mix_channels
from src.quantum.qregisters import (
    DensityState,
    HermitianOperator,
    as_matrix,
    as_operator,
    make_shape,
    permutation_operator,
    permute,
    reduce_state,
    relabel,
    tensor,
)
from src.utils.optim import OptimizerConfig, resolve_workers
from src.utils.sampling import haar_vector, random_density, random_povm, spawn_rngs

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Convex split
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConvexSplitInstance:
    """rho_BR split against n copies of sigma_B at slack delta."""

    rho_br: DensityState
    sigma_b: DensityState
    n: int
    delta: float
    r_labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        require(self.n >= 1, "n >= 1")
        require(0.0 < self.delta <= 1.0, "delta in (0, 1]")
        labels = as_operator(self.rho_br).shape.labels
        r = tuple(self.r_labels) if self.r_labels else labels[-1:]
        object.__setattr__(self, "r_labels", r)
        b_dims = as_operator(self.rho_br).shape.without(r).dims
        require(b_dims == as_operator(self.sigma_b).shape.dims, "sigma_B matches B")
        total = math.prod(b_dims) ** self.n * as_operator(self.rho_br).shape.select(r).total
        require(total <= MAX_DENSE_DIM, f"dimension <= {MAX_DENSE_DIM}", f"convex split needs dimension {total}")

    @property
    def b_labels(self) -> list[str]:
        return [label for label in as_operator(self.rho_br).shape.labels if label not in self.r_labels]

    def block_labels(self, i: int) -> list[str]:
        return [f"{label}{i + 1}" for label in self.b_labels]

    def register_order(self) -> list[str]:
        return [label for i in range(self.n) for label in self.block_labels(i)] + list(self.r_labels)

    def sigma_copy(self, i: int) -> DensityState:
        return relabel(self.sigma_b, dict(zip(as_operator(self.sigma_b).shape.labels, self.block_labels(i))))

    def reference(self) -> DensityState:
        return reduce_state(self.rho_br, list(self.r_labels))

    def dmax_bits(self) -> float:
        """D_max(rho_BR || sigma_B (x) rho_R)."""
        product = permute(tensor(self.sigma_b, self.reference()), as_operator(self.rho_br).shape.labels)
        return dmax(self.rho_br, product).bits

    def hypothesis_holds(self) -> bool:
        return math.log2(self.n) >= self.dmax_bits() + math.log2(1 / self.delta) - BOUND_TOL


class ConvexSplitCheck(NamedTuple):
    fidelity: float
    bound: float
    hypothesis_holds: bool
    passed: bool


class ConvexSplitCost(NamedTuple):
    n_blocks: int
    qubits: float


def convex_split_state(inst: ConvexSplitInstance) -> DensityState:
    """(1/n) sum_i rho_{B_i R} (x) sigma on every other block, registers B_1 .. B_n R."""
    order = inst.register_order()
    total = 0
    for i in range(inst.n):
        rho_i = relabel(inst.rho_br, dict(zip(inst.b_labels, inst.block_labels(i))))
        others = [inst.sigma_copy(j) for j in range(inst.n) if j != i]
        total = total + as_matrix(permute(tensor(rho_i, *others), order))
    shape = as_operator(permute(tensor(*[inst.sigma_copy(j) for j in range(inst.n)], inst.reference()), order)).shape
    return DensityState.unchecked(HermitianOperator(shape, total / inst.n))


def convex_split_check(inst: ConvexSplitInstance) -> ConvexSplitCheck:
    """
    Fidelity of the convex-split state with sigma_B^n (x) rho_R against sqrt(1 - delta).

    The bound is guaranteed when log n >= D_max(rho_BR || sigma_B (x) rho_R) + log 1/delta.
    """
    tau = convex_split_state(inst)
    target = tensor(*[inst.sigma_copy(j) for j in range(inst.n)], inst.reference())
    value = fidelity(tau, target)
    bound = math.sqrt(1 - inst.delta)
    holds = inst.hypothesis_holds()
    passed = value >= bound - BOUND_TOL
    if holds and not passed:
        logger.warning(f"Convex split fidelity {value:.10f} below {bound:.10f} with the hypothesis satisfied")
    return ConvexSplitCheck(value, bound, holds, passed)


def convex_split_cost(dmax_bits: float, delta: float) -> ConvexSplitCost:
    """n = ceil(2^{D_max + log 4/delta^2}) blocks; sending the index costs log(n)/2 qubits with super-dense coding."""
    require(0.0 < delta <= 1.0, "delta in (0, 1]")
    n_blocks = math.ceil(2.0 ** (dmax_bits + math.log2(4 / delta**2)))
    return ConvexSplitCost(n_blocks, math.log2(n_blocks) / 2)


# ---------------------------------------------------------------------------
# Post-selection
# ---------------------------------------------------------------------------


class DeFinettiObjects(NamedTuple):
    n: int
    d: int
    g: int
    zeta: DensityState


def symmetric_projector(n: int, d: int) -> np.ndarray:
    """Projector onto the symmetric subspace of (C^d)^n, one uniform vector per type class."""
    total = d**n
    classes: dict[tuple[int, ...], list[int]] = {}
    for index, digits in enumerate(itertools.product(range(d), repeat=n)):
        classes.setdefault(tuple(sorted(digits)), []).append(index)
    projector = np.zeros((total, total))
    for members in classes.values():
        v = np.zeros(total)
        v[members] = 1 / math.sqrt(len(members))
        projector += np.outer(v, v)
    return projector


def de_finetti(n: int, d: int) -> DeFinettiObjects:
    """
    g_{n,d} = binomial(n + d^2 - 1, n) and the de Finetti state zeta on n copies of C^d.

    zeta is the normalized symmetric projector, the Haar average of pure product powers.
    """
    require(n >= 1 and d >= 2, "n >= 1 and d >= 2")
    require(d ** (2 * n) <= MAX_DENSE_DIM, f"d^(2n) <= {MAX_DENSE_DIM}")
    projector = symmetric_projector(n, d)
    zeta = projector / np.trace(projector)
    shape = make_shape([d] * n, "A")
    return DeFinettiObjects(n, d, math.comb(n + d * d - 1, n), DensityState(HermitianOperator(shape, zeta)))


def postselection_constant(n: int, d: int) -> float:
    return math.sqrt(2) * (n + 1) ** ((d * d - 1) / 2)


def de_finetti_bound(n: int, d: int) -> float:
    return float((n + 1) ** (d * d - 1))


def _haar_power_sum(rng: np.random.Generator, n: int, d: int, samples: int) -> np.ndarray:
    total = 0
    for _ in range(samples):
        v = haar_vector(rng, d)
        power = v
        for _ in range(n - 1):
            power = np.kron(power, v)
        total = total + np.outer(power, power.conj())
    return total


def de_finetti_monte_carlo(n: int, d: int, samples: int, seed: int | None, blocks: int = 8) -> float:
    """Trace norm between the empirical Haar average of |phi><phi|^n and zeta."""
    require(samples >= blocks, "samples >= blocks")
    sizes = [samples // blocks + (1 if k < samples % blocks else 0) for k in range(blocks)]
    sums = Parallel(n_jobs=resolve_workers(), prefer="threads")(
        delayed(_haar_power_sum)(rng, n, d, size) for rng, size in zip(spawn_rngs(seed, blocks), sizes)
    )
    average = sum(sums) / samples
    average = (average + average.conj().T) / 2
    zeta = de_finetti(n, d).zeta.matrix
    return float(np.abs(np.linalg.eigvalsh(average - zeta)).sum())


# ---------------------------------------------------------------------------
# Symmetrization
# ---------------------------------------------------------------------------


class SymmetrizeCheck(NamedTuple):
    original_residual: float
    symmetrized_residual: float


def _register_permutations(channel: Channel) -> tuple[list[np.ndarray], list[np.ndarray]]:
    n_in, n_out = len(channel.in_shape.dims), len(channel.out_shape.dims)
    require(n_in == n_out, "register arity consistent")
    require(n_in <= MAX_PERMUTATION_REGISTERS, f"at most {MAX_PERMUTATION_REGISTERS} registers")
    perms = list(itertools.permutations(range(n_in)))
    ins = [permutation_operator(channel.in_shape.dims, p) for p in perms]
    outs = [permutation_operator(channel.out_shape.dims, p) for p in perms]
    return ins, outs


def _conjugated(channel: Channel, p_in: np.ndarray, p_out: np.ndarray) -> list[np.ndarray]:
    """Kraus operators of pi_out^{-1} o T o pi_in."""
    return [p_out.conj().T @ k @ p_in for k in channel.kraus]


def symmetrize(channel: Channel) -> Channel:
    """(1/n!) sum over pi of pi^{-1} o T o pi on the n-fold registers."""
    ins, outs = _register_permutations(channel)
    weight = 1 / math.sqrt(len(ins))
    kraus = tuple(weight * k for p_in, p_out in zip(ins, outs) for k in _conjugated(channel, p_in, p_out))
    return Channel(kraus, channel.in_shape, channel.out_shape, f"sym({channel.name})")


def _choi_matrix(kraus: Sequence[np.ndarray], d_in: int) -> np.ndarray:
    psi = np.eye(d_in) / math.sqrt(d_in)
    out = 0
    for k in kraus:
        v = (k @ psi).reshape(-1)
        out = out + np.outer(v, v.conj())
    return out


def covariance_residual(channel: Channel) -> float:
    """Largest Choi-matrix deviation between T and pi^{-1} o T o pi over all register permutations."""
    ins, outs = _register_permutations(channel)
    reference = _choi_matrix(channel.kraus, channel.in_dim)
    return max(
        float(np.abs(_choi_matrix(_conjugated(channel, p_in, p_out), channel.in_dim) - reference).max())
        for p_in, p_out in zip(ins, outs)
    )


def symmetrize_check(channel: Channel) -> SymmetrizeCheck:
    return SymmetrizeCheck(covariance_residual(channel), covariance_residual(symmetrize(channel)))


def symmetrization_distance_check(channel: Channel, target: Channel, rho: DensityState) -> tuple[float, float]:
    """
    P(target(rho), sym(T)(rho)) and P(target(rho), T(rho)) for a permutation-invariant rho.

    The first is at most the second whenever the target channel is permutation covariant.
    """
    symmetric = symmetrize(channel)
    expected = target.apply(rho)
    return purified_distance(expected, symmetric.apply(rho)), purified_distance(expected, channel.apply(rho))


# ---------------------------------------------------------------------------
# Teleportation error branch and simulation bounds
# ---------------------------------------------------------------------------


def teleport_coding_check(p_succ: float, d: int, samples: int = 16, seed: int | None = 0) -> float:
    """
    Worst purified distance between p|psi><psi| + (1-p)|psi_perp><psi_perp| and psi over sampled psi_AR.

    Each sample is at most sqrt(1 - p_succ).
    """
    require(0.0 <= p_succ <= 1.0, "p_succ in [0, 1]")
    require(d >= 2, "d >= 2")
    worst = 0.0
    for rng in spawn_rngs(seed, samples):
        psi = haar_vector(rng, d * d)
        other = haar_vector(rng, d * d)
        perp = other - np.vdot(psi, other) * psi
        perp /= np.linalg.norm(perp)
        mixed = p_succ * np.outer(psi, psi.conj()) + (1 - p_succ) * np.outer(perp, perp.conj())
        f = fidelity_matrix(mixed, np.outer(psi, psi.conj()))
        worst = max(worst, math.sqrt(max(0.0, 1 - min(f, 1.0) ** 2)))
    if worst > math.sqrt(1 - p_succ) + BOUND_TOL:
        logger.warning(f"Teleportation branch distance {worst:.10f} exceeds sqrt(1 - p)")
    return worst


def identity_simulation_bound(eps: float) -> float:
    """(1 - eps) sqrt(1 - eps) + sqrt(eps) sqrt(1 - (1 - eps)^2)."""
    require(0.0 <= eps <= 1.0, "eps in [0, 1]")
    return (1 - eps) * math.sqrt(1 - eps) + math.sqrt(eps) * math.sqrt(1 - (1 - eps) ** 2)


class IdentitySimulationCheck(NamedTuple):
    eps: float
    coding_distance: float
    composed_distance: float
    bound: float
    passed: bool


def identity_simulation_check(
    eps: float, noise: Channel, simulation_noise: Channel, opt: OptimizerConfig | None = None
) -> IdentitySimulationCheck:
    """
    Compose a coding channel with a simulation of it and compare the result with the identity.

    The coding channel keeps the identity with weight 1 - (1 - eps)^2 and applies noise
    otherwise, so it lies within 1 - eps of the identity. The simulation keeps the coding
    channel with weight 1 - eps and applies simulation_noise otherwise, so it lies within
    sqrt(eps) of the coding channel. The composition must stay within
    identity_simulation_bound(eps) of the identity.

    Args:
        eps: Error in (0, 1)
        noise: Error branch of the coding channel, same dimensions in and out
        simulation_noise: Error branch of the simulation
        opt: Optimizer configuration for the channel purified distances

    Returns:
        IdentitySimulationCheck with the best distances found
    """
    require(0.0 < eps < 1.0, "eps in (0, 1)", f"eps = {eps}")
    require(noise.in_dim == noise.out_dim, "noise maps A to a copy of A")
    identity = Channel((np.eye(noise.in_dim),), noise.in_shape, noise.out_shape, "identity")
    coding = mix_channels(1 - (1 - eps) ** 2, identity, noise)
    composed = mix_channels(1 - eps, coding, simulation_noise)
    coding_distance = channel_purified_distance(coding, identity, opt).lower
    composed_distance = channel_purified_distance(composed, identity, opt).lower
    bound = identity_simulation_bound(eps)
    passed = coding_distance <= 1 - eps + BOUND_TOL and composed_distance <= bound + BOUND_TOL
    if not passed:
        logger.warning(f"Composed channel at distance {composed_distance:.10f} from the identity exceeds {bound:.10f}")
    return IdentitySimulationCheck(eps, coding_distance, composed_distance, bound, passed)


def channel_simulation_fudge(eps: float, alphabet: int, n: int) -> float:
    """
    Additive slack of the n-block channel simulation protocol in qubits.

    With eps' = (eps/sqrt 2)(n+1)^{(1-|A|^2)/2} the terms are the post-selection
    smoothing changes, the de Finetti dimension count, the fixed-marginal conversion and
    the state-splitting slack.
    """
    require(0.0 < eps <= 1.0, "eps in (0, 1]")
    require(alphabet >= 1 and n >= 1, "alphabet >= 1 and n >= 1")
    e = eps / math.sqrt(2) * (n + 1) ** ((1 - alphabet**2) / 2)
    return (
        0.5 * math.log2(2 / (e / 72) ** 2 + 2)
        + 2 * (alphabet**2 - 1) * math.log2(n + 1)
        + 0.5 * math.log2(2 / (e / 24) ** 2 + 2)
        + 0.5 * math.log2((8 + (e / 4) ** 2) / (e / 4) ** 2)
        + math.log2(4 / e)
    )


# ---------------------------------------------------------------------------
# Strong converse for the noiseless channel
# ---------------------------------------------------------------------------


class StrongConverseCheck(NamedTuple):
    p_succ: float
    bound: float
    passed: bool


def strong_converse_check(
    states: Sequence[np.ndarray], povm: Sequence[np.ndarray], r: float, d: int, n: int
) -> StrongConverseCheck:
    """
    Average success probability of a code of rate r over n uses of the identity channel on C^d.

    The success probability never exceeds 2^{-n(r - log d)} since Tr(E_i rho_i) <= Tr E_i.

    Raises:
        DomainError: If the POVM is incomplete or the code size is not 2^{nr}
    """
    size = round(2 ** (n * r))
    require(len(states) == len(povm) == size, "codebook and POVM of size 2^(nr)")
    dim = d**n
    completeness = float(np.abs(sum(povm) - np.eye(dim)).max())
    require(completeness <= 1e-9, "POVM complete", f"sum of POVM elements deviates from I by {completeness:.2e}")
    p_succ = float(np.mean([np.trace(e @ as_matrix(rho)).real for e, rho in zip(povm, states)]))
    bound = 2.0 ** (-n * (r - math.log2(d)))
    return StrongConverseCheck(p_succ, bound, p_succ <= bound + BOUND_TOL)


def random_strong_converse_instance(
    rng: np.random.Generator, d: int, n: int, r: float
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Random mixed codewords and a random POVM with 2^{nr} elements on (C^d)^n."""
    size = round(2 ** (n * r))
    require(size >= 1 and abs(size - 2 ** (n * r)) < 1e-9, "2^(nr) integral")
    dim = d**n
    states = [random_density(rng, dim).matrix for _ in range(size)]
    return states, random_povm(rng, dim, size)
