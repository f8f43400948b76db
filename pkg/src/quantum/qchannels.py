"""
Quantum channels in Kraus form, the capacity-like functionals of entanglement-assisted
communication, and the meta-converse evaluator.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from src.constants import (
    CAPACITY_SET_TOL,
    CHANNEL_FUNCTIONAL_STARTS,
    KERNEL_CUTOFF,
    MAX_CHANNEL_INPUT_DIM,
    META_CONVERSE_SIGMA_SAMPLES,
    OPTIMIZER_GAP_FLOOR,
    TRACE_PRESERVING_TOL,
)
from src.errors import require
from src.measures.entropies import marginal_product, mutual_information_variance
from src.measures.hypotest import dh
from src.measures.smoothing import imax_partially_smoothed_bounds
from src.measures.values import BoundInterval, SmoothingRadius
from src.quantum.qregisters import (
    DensityState,
    HermitianOperator,
    OperatorLike,
    PureVector,
    RegisterShape,
    as_operator,
    make_shape,
    maximally_mixed,
    permute,
    sqrtm_psd,
)
from src.utils.optim import MultiStartReport, OptimizerConfig, maximize_multistart
from src.utils.sampling import ginibre_matrix, haar_unitary, random_density, spawn_rngs

logger = logging.getLogger(__name__)

REFERENCE_SUFFIX = "'"


class Stinespring(NamedTuple):
    """Isometry V from the input into output (x) environment, V = sum_k K_k (x) |k>."""

    isometry: np.ndarray
    env_dim: int


class ChannelFunctionals(NamedTuple):
    """Capacity-like value C(N) = max I(B:R)/2 and V_max over the sampled capacity-achieving inputs."""

    capacity_like: float
    vmax: float
    capacity_inputs: list[PureVector]
    capacity_bounds: BoundInterval
    optimizer_report: MultiStartReport


class MetaConverse(NamedTuple):
    value: float
    heuristic: bool
    provenance: str


@dataclass(frozen=True, eq=False)
class Channel:
    """Completely positive trace-preserving map between labelled registers, in Kraus form."""

    kraus: tuple[np.ndarray, ...]
    in_shape: RegisterShape
    out_shape: RegisterShape
    name: str = ""

    def __post_init__(self) -> None:
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus)
        require(len(ops) >= 1, "at least one Kraus operator")
        expected = (self.out_shape.total, self.in_shape.total)
        for k in ops:
            require(k.shape == expected, "Kraus shape", f"Kraus operator of shape {k.shape}, expected {expected}")
            k.setflags(write=False)
        gram = sum(k.conj().T @ k for k in ops)
        defect = float(np.abs(gram - np.eye(self.in_shape.total)).max())
        require(defect <= TRACE_PRESERVING_TOL, "trace preserving", f"sum K^dagger K deviates from I by {defect:.2e}")
        object.__setattr__(self, "kraus", ops)

    @property
    def in_dim(self) -> int:
        return self.in_shape.total

    @property
    def out_dim(self) -> int:
        return self.out_shape.total

    def apply_matrix(self, matrix: np.ndarray) -> np.ndarray:
        out = sum(k @ matrix @ k.conj().T for k in self.kraus)
        return (out + out.conj().T) / 2

    def apply(self, rho: OperatorLike) -> DensityState:
        """
        Output state N(rho) on the output registers.

        Raises:
            DomainError: If the input dimensions do not match the channel
        """
        op = as_operator(rho)
        require(op.shape.dims == self.in_shape.dims, "input shape", f"{op.shape.dims} vs {self.in_shape.dims}")
        return DensityState.unchecked(HermitianOperator(self.out_shape, self.apply_matrix(op.matrix)))

    def reference_shape(self) -> RegisterShape:
        return RegisterShape(tuple(f"{label}{REFERENCE_SUFFIX}" for label in self.in_shape.labels), self.in_shape.dims)

    def choi(self) -> DensityState:
        """Normalized Choi state (N (x) id)(Phi) on the output registers followed by the primed inputs."""
        d = self.in_dim
        psi = np.eye(d) / math.sqrt(d)
        out = 0
        for k in self.kraus:
            v = (k @ psi).reshape(-1)
            out = out + np.outer(v, v.conj())
        return DensityState.unchecked(HermitianOperator(self.out_shape.concat(self.reference_shape()), out))

    def stinespring(self) -> Stinespring:
        r = len(self.kraus)
        v = sum(np.kron(k, np.eye(r)[:, [j]]) for j, k in enumerate(self.kraus))
        return Stinespring(v, r)


def apply_on(channel: Channel, rho: OperatorLike, labels: Sequence[str]) -> DensityState:
    """
    Apply a channel to selected registers of a larger state.

    The output registers take the place of the inputs at the front; the remaining
    registers follow in their original order.
    """
    op = as_operator(rho)
    labels = list(labels)
    rest = [label for label in op.shape.labels if label not in labels]
    ordered = as_operator(permute(op, labels + rest))
    require(ordered.shape.select(labels).dims == channel.in_shape.dims, "input shape")
    d_rest = ordered.shape.select(rest).total if rest else 1
    out_shape = channel.out_shape.concat(ordered.shape.select(rest)) if rest else channel.out_shape
    matrix = sum(np.kron(k, np.eye(d_rest)) @ ordered.matrix @ np.kron(k, np.eye(d_rest)).conj().T for k in channel.kraus)
    return DensityState.unchecked(HermitianOperator(out_shape, (matrix + matrix.conj().T) / 2))


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def _shapes(d_in: int, d_out: int, in_label: str, out_label: str) -> tuple[RegisterShape, RegisterShape]:
    return make_shape(d_in, in_label), make_shape(d_out, out_label)


def identity_channel(dim: int, in_label: str = "A", out_label: str = "B") -> Channel:
    in_shape, out_shape = _shapes(dim, dim, in_label, out_label)
    return Channel((np.eye(dim),), in_shape, out_shape, "identity")


def weyl_operators(dim: int) -> list[np.ndarray]:
    """X^a Z^b for a, b in 0..d-1, ordered with (0, 0) first."""
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    return [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b) for a in range(dim) for b in range(dim)]


def depolarizing_channel(dim: int, p: float, in_label: str = "A", out_label: str = "B") -> Channel:
    """
    (1 - p) rho + p Tr(rho) I/d, written with Weyl-Heisenberg Kraus operators.

    Args:
        dim: Local dimension
        p: Depolarizing weight in [0, d^2/(d^2 - 1)]; p = 1 is fully depolarizing
    """
    require(0.0 <= p <= dim**2 / (dim**2 - 1) + 1e-12, "p in [0, d^2/(d^2-1)]", f"p = {p}")
    weights = [max(0.0, 1 - p + p / dim**2)] + [p / dim**2] * (dim**2 - 1)
    kraus = tuple(math.sqrt(w) * w_op for w, w_op in zip(weights, weyl_operators(dim)) if w > 0)
    in_shape, out_shape = _shapes(dim, dim, in_label, out_label)
    return Channel(kraus, in_shape, out_shape, f"depolarizing(p={p:g})")


def unitary_channel(unitary: np.ndarray, in_label: str = "A", out_label: str = "B") -> Channel:
    u = np.asarray(unitary, dtype=complex)
    require(u.ndim == 2 and u.shape[0] == u.shape[1], "square unitary")
    in_shape, out_shape = _shapes(u.shape[0], u.shape[0], in_label, out_label)
    return Channel((u,), in_shape, out_shape, "unitary")


def random_channel(
    rng: np.random.Generator, d_in: int, d_out: int, kraus_rank: int = 2, in_label: str = "A", out_label: str = "B"
) -> Channel:
    """Channel from the first d_in columns of a Haar unitary on output (x) environment."""
    require(kraus_rank >= 1, "kraus_rank >= 1")
    require(d_out * kraus_rank >= d_in, "d_out * kraus_rank >= d_in")
    v = haar_unitary(rng, d_out * kraus_rank)[:, :d_in].reshape(d_out, kraus_rank, d_in)
    in_shape, out_shape = _shapes(d_in, d_out, in_label, out_label)
    return Channel(tuple(v[:, j, :] for j in range(kraus_rank)), in_shape, out_shape, "random")


def compose(second: Channel, first: Channel) -> Channel:
    """second o first."""
    require(first.out_shape.dims == second.in_shape.dims, "composable shapes")
    kraus = tuple(b @ a for b in second.kraus for a in first.kraus)
    return Channel(kraus, first.in_shape, second.out_shape, f"{second.name}*{first.name}")


def mix_channels(weight: float, first: Channel, second: Channel) -> Channel:
    """weight * first + (1 - weight) * second, as the union of the rescaled Kraus sets."""
    require(0.0 <= weight <= 1.0, "weight in [0, 1]", f"weight = {weight}")
    require(first.in_shape.dims == second.in_shape.dims, "matching input shapes")
    require(first.out_shape.dims == second.out_shape.dims, "matching output shapes")
    kraus = tuple(math.sqrt(weight) * k for k in first.kraus) + tuple(math.sqrt(1 - weight) * k for k in second.kraus)
    return Channel(kraus, first.in_shape, first.out_shape, f"mix({first.name}, {second.name})")


def tensor_channels(*channels: Channel) -> Channel:
    require(len(channels) >= 1, "at least one channel")
    in_shape = reduce(lambda s, c: s.concat(c.in_shape), channels[1:], channels[0].in_shape)
    out_shape = reduce(lambda s, c: s.concat(c.out_shape), channels[1:], channels[0].out_shape)
    kraus = tuple(reduce(np.kron, combo) for combo in itertools.product(*(c.kraus for c in channels)))
    return Channel(kraus, in_shape, out_shape, "(x)".join(c.name for c in channels))


def relabel_channel(channel: Channel, suffix: str) -> Channel:
    def rename(shape: RegisterShape) -> RegisterShape:
        return RegisterShape(tuple(f"{label}{suffix}" for label in shape.labels), shape.dims)

    return Channel(channel.kraus, rename(channel.in_shape), rename(channel.out_shape), channel.name)


def channel_power(channel: Channel, n: int) -> Channel:
    """n-fold tensor power; copy k has its labels suffixed with k."""
    require(n >= 1, "n >= 1")
    return tensor_channels(*(relabel_channel(channel, str(k + 1)) for k in range(n)))


# ---------------------------------------------------------------------------
# Capacity-like functionals
# ---------------------------------------------------------------------------


def _input_from_params(x: np.ndarray, dim: int) -> np.ndarray:
    g = (x[: dim * dim] + 1j * x[dim * dim :]).reshape(dim, dim)
    rho = g @ g.conj().T
    trace = float(np.trace(rho).real)
    return rho / trace if trace > 0 else np.eye(dim) / dim


def _entropy_bits(matrix: np.ndarray) -> float:
    evals = np.linalg.eigvalsh(matrix)
    evals = evals[evals > KERNEL_CUTOFF * max(evals.max(), 0.0)]
    return float(-(evals * np.log2(evals)).sum())


def _output_state(channel: Channel, rho_in: np.ndarray) -> np.ndarray:
    """(N (x) id)(psi) for the purification psi = sqrt(rho) of the input."""
    psi = sqrtm_psd(rho_in)
    out = 0
    for k in channel.kraus:
        v = (k @ psi).reshape(-1)
        out = out + np.outer(v, v.conj())
    return out


def _mutual_information_bits(channel: Channel, rho_in: np.ndarray) -> float:
    """I(B:R) = S(N(rho)) + S(rho) - S((N (x) id)(psi))."""
    return _entropy_bits(channel.apply_matrix(rho_in)) + _entropy_bits(rho_in) - _entropy_bits(_output_state(channel, rho_in))


def purified_input(channel: Channel, rho_in: np.ndarray) -> PureVector:
    shape = channel.in_shape.concat(channel.reference_shape())
    return PureVector(shape, sqrtm_psd(rho_in).reshape(-1))


def _output_density(channel: Channel, rho_in: np.ndarray) -> DensityState:
    shape = channel.out_shape.concat(channel.reference_shape())
    return DensityState.unchecked(HermitianOperator(shape, _output_state(channel, rho_in)))


def channel_functionals(channel: Channel, opt: OptimizerConfig | None = None) -> ChannelFunctionals:
    """
    C(N) = max over inputs of I(B:R)/2 and V_max over the capacity-achieving inputs.

    The objective is a function of the input marginal, parametrized as G G^dagger / Tr.
    Start 0 is the maximally mixed input; every local optimum within tolerance of the
    best value is kept as a capacity-achieving representative, so V_max is a lower
    bound on the maximum over the full set.

    Args:
        channel: Channel with input dimension at most 8
        opt: Optimizer configuration; L-BFGS-B with 64 starts by default

    Returns:
        ChannelFunctionals
    """
    d = channel.in_dim
    require(d <= MAX_CHANNEL_INPUT_DIM, f"input dimension <= {MAX_CHANNEL_INPUT_DIM}")
    opt = opt or OptimizerConfig(starts=CHANNEL_FUNCTIONAL_STARTS, method="L-BFGS-B")

    def objective(x: np.ndarray) -> float:
        return _mutual_information_bits(channel, _input_from_params(x, d))

    starts = [np.concatenate([np.eye(d).reshape(-1), np.zeros(d * d)])]
    for rng in spawn_rngs(opt.seed, opt.starts - 1):
        g = ginibre_matrix(rng, d)
        starts.append(np.concatenate([g.real.reshape(-1), g.imag.reshape(-1)]))
    report = maximize_multistart(objective, starts, opt)
    best = report.best.value

    inputs, variances = [], []
    for result in report.results:
        if result.value >= best - CAPACITY_SET_TOL:
            rho_in = _input_from_params(result.x, d)
            inputs.append(purified_input(channel, rho_in))
            omega = _output_density(channel, rho_in)
            variances.append(mutual_information_variance(omega, list(channel.out_shape.labels)).bits)
    vmax = max(0.0, max(variances))
    gap = max(report.spread, OPTIMIZER_GAP_FLOOR) / 2
    bounds = BoundInterval(
        best / 2,
        best / 2 + gap,
        f"best of {opt.starts} multi-start local searches",
        "heuristic: lower end plus optimizer spread",
    )
    if not report.converged:
        logger.warning(f"Channel functionals of {channel.name or 'channel'}: some local searches did not converge")
    logger.info(f"C(N) >= {best / 2:.8f}, V_max >= {vmax:.8f} from {len(inputs)} capacity-achieving inputs")
    return ChannelFunctionals(best / 2, vmax, inputs, bounds, report)


# ---------------------------------------------------------------------------
# Converse bounds
# ---------------------------------------------------------------------------


def _meta_converse_at(channel: Channel, rho_in: np.ndarray, sigma_b: np.ndarray, eps: float) -> float:
    omega = _output_state(channel, rho_in)
    # reference marginal of the purification sqrt(rho) is rho transposed
    return dh(omega, np.kron(sigma_b, rho_in.T), eps**2).bits / 2


def meta_converse_bound(
    channel: Channel,
    eps: float,
    mode: str = "covariant_mes",
    n: int = 1,
    opt: OptimizerConfig | None = None,
) -> MetaConverse:
    """
    Meta-converse max_rho min_sigma D_h^{eps^2}((N (x) id)(psi_rho) || sigma_B (x) rho_R)/2.

    covariant_mes evaluates the n-fold maximally entangled input with sigma_B the channel
    output, valid when the caller asserts covariance. general_lowerconf searches inputs
    by multi-start and sigma over the output plus sampled states; it is a heuristic.

    Args:
        channel: Channel N
        eps: Error in (0, 1)
        mode: covariant_mes or general_lowerconf
        n: Block length for covariant_mes
        opt: Optimizer configuration for general_lowerconf

    Returns:
        MetaConverse with value in bits and its provenance
    """
    require(0.0 < eps < 1.0, "eps in (0, 1)", f"eps = {eps}")
    require(mode in ("covariant_mes", "general_lowerconf"), "mode in {covariant_mes, general_lowerconf}")
    if mode == "covariant_mes":
        block = channel_power(channel, n) if n > 1 else channel
        choi = block.choi()
        sigma = marginal_product(choi, list(block.out_shape.labels))
        value = dh(choi, sigma, eps**2).bits / 2
        return MetaConverse(value, False, f"maximally entangled input, n={n}")

    d = channel.in_dim
    require(d <= MAX_CHANNEL_INPUT_DIM, f"input dimension <= {MAX_CHANNEL_INPUT_DIM}")
    opt = opt or OptimizerConfig(starts=8)
    sigma_rngs = spawn_rngs(opt.seed, META_CONVERSE_SIGMA_SAMPLES)
    samples = [random_density(rng, channel.out_dim).matrix for rng in sigma_rngs]
    samples.append(maximally_mixed(channel.out_dim).matrix)

    def objective(x: np.ndarray) -> float:
        rho_in = _input_from_params(x, d)
        candidates = [channel.apply_matrix(rho_in)] + samples
        return min(_meta_converse_at(channel, rho_in, s, eps) for s in candidates)

    starts = [np.concatenate([np.eye(d).reshape(-1), np.zeros(d * d)])]
    for rng in spawn_rngs(None if opt.seed is None else opt.seed + 1, opt.starts - 1):
        g = ginibre_matrix(rng, d)
        starts.append(np.concatenate([g.real.reshape(-1), g.imag.reshape(-1)]))
    report = maximize_multistart(objective, starts, opt)
    return MetaConverse(report.best.value, True, f"heuristic: {opt.starts} input starts, {len(samples) + 1} sigma candidates")


def channel_simulation_converse(channel: Channel, phi: PureVector, n: int, eps: float) -> float:
    """
    Half the lower end of the partially smoothed max-information of ((N (x) id)(phi))^n.

    Any input gives a valid lower bound on the simulation cost of N^n at error eps.

    Args:
        channel: Channel N from A
        phi: Pure input on the channel input registers followed by a reference
        n: Block length
        eps: Error in (0, 1]
    """
    require(SmoothingRadius(eps).within(1.0, open_lower=True), "eps in (0, 1]", f"eps = {eps}")
    inputs = list(channel.in_shape.labels)
    reference = [label for label in phi.shape.labels if label not in inputs]
    require(bool(reference), "reference register present")
    omega = apply_on(channel, phi.state(), inputs)
    return imax_partially_smoothed_bounds(omega, n, eps, r_labels=reference).scaled(0.5).lower
