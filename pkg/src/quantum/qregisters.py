"""
Dense linear algebra over labelled multipartite registers.

Every operator carries a RegisterShape; register order is the order of construction
and partial traces never reorder the surviving labels.
"""

import logging
import math
import string
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from src.constants import (
    HERMITIAN_RTOL,
    KERNEL_CUTOFF,
    MAX_DENSE_DIM,
    PSD_TOL,
    PURE_NORM_TOL,
    SUPPORT_LEAK_TOL,
    TRACE_TOL,
)
from src.errors import DomainError, require

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class RegisterShape:
    """Ordered register labels with their local dimensions."""

    labels: tuple[str, ...]
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        require(len(self.labels) == len(self.dims), "labels and dims align")
        require(len(set(self.labels)) == len(self.labels), "labels unique", f"duplicate labels in {self.labels}")
        require(all(d >= 1 for d in self.dims), "dims positive", f"non-positive dimension in {self.dims}")

    @classmethod
    def single(cls, label: str, dim: int) -> "RegisterShape":
        return cls((label,), (dim,))

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def index(self, label: str) -> int:
        require(label in self.labels, "known label", f"unknown register label {label!r}, have {self.labels}")
        return self.labels.index(label)

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]

    def select(self, labels: Sequence[str]) -> "RegisterShape":
        """Sub-shape holding the given labels, in the given order."""
        return RegisterShape(tuple(labels), tuple(self.dim_of(label) for label in labels))

    def without(self, labels: Iterable[str]) -> "RegisterShape":
        dropped = set(labels)
        for label in dropped:
            self.index(label)
        keep = tuple(label for label in self.labels if label not in dropped)
        return self.select(keep)

    def concat(self, other: "RegisterShape") -> "RegisterShape":
        clash = set(self.labels) & set(other.labels)
        require(not clash, "disjoint label sets", f"label collision on {sorted(clash)}")
        return RegisterShape(self.labels + other.labels, self.dims + other.dims)


def make_shape(dims: int | Sequence[int], labels: str | Sequence[str] | None = None) -> RegisterShape:
    """
    Build a RegisterShape from loose arguments.

    Args:
        dims: One dimension or a sequence of dimensions
        labels: One label, a sequence of labels, or None for A, B, C, ...

    Returns:
        RegisterShape
    """
    dim_list = [int(dims)] if isinstance(dims, (int, np.integer)) else [int(d) for d in dims]
    if labels is None:
        label_list = list(string.ascii_uppercase[: len(dim_list)])
    elif isinstance(labels, str):
        label_list = [labels] if len(dim_list) == 1 else [f"{labels}{i + 1}" for i in range(len(dim_list))]
    else:
        label_list = list(labels)
    return RegisterShape(tuple(label_list), tuple(dim_list))


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Hermitian matrix on a labelled register; stored symmetrized and read-only."""

    shape: RegisterShape
    entries: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.array(self.entries, dtype=complex)
        dim = self.shape.total
        require(
            matrix.shape == (dim, dim),
            "entries match register dimension",
            f"matrix of shape {matrix.shape} on registers of total dimension {dim}",
        )
        require(dim <= MAX_DENSE_DIM, f"dimension <= {MAX_DENSE_DIM}", f"dense dimension {dim} exceeds limit")
        scale = max(np.linalg.norm(matrix), _TINY)
        defect = np.linalg.norm(matrix - matrix.conj().T)
        require(defect <= HERMITIAN_RTOL * scale, "Hermitian input", f"relative Hermiticity defect {defect / scale:.3e}")
        matrix = (matrix + matrix.conj().T) / 2
        matrix.setflags(write=False)
        object.__setattr__(self, "entries", matrix)

    @property
    def matrix(self) -> np.ndarray:
        return self.entries

    @property
    def dim(self) -> int:
        return self.shape.total

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def allclose(self, other: "OperatorLike", atol: float = 1e-10) -> bool:
        other_op = as_operator(other)
        return self.shape == other_op.shape and bool(np.allclose(self.entries, other_op.entries, atol=atol, rtol=0))


@dataclass(frozen=True, eq=False)
class SubnormalizedState:
    """Positive semidefinite operator with trace in (0, 1]."""

    op: HermitianOperator

    def __post_init__(self) -> None:
        evals = np.linalg.eigvalsh(self.op.matrix)
        norm = max(float(np.abs(evals).max()), _TINY)
        require(
            evals.min() >= -PSD_TOL * norm,
            "positive semidefinite",
            f"minimum eigenvalue {evals.min():.3e} below tolerance",
        )
        trace = self.op.trace
        require(0 < trace <= 1 + TRACE_TOL, "0 < trace <= 1", f"trace {trace!r} outside (0, 1]")

    @classmethod
    def unchecked(cls, op: HermitianOperator):
        """Wrap an operator already known to satisfy the state invariants."""
        state = object.__new__(cls)
        object.__setattr__(state, "op", op)
        return state

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, shape: RegisterShape):
        return cls(HermitianOperator(shape, matrix))

    @property
    def shape(self) -> RegisterShape:
        return self.op.shape

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def trace(self) -> float:
        return self.op.trace


@dataclass(frozen=True, eq=False)
class DensityState(SubnormalizedState):
    """Normalized quantum state."""

    def __post_init__(self) -> None:
        super().__post_init__()
        trace = self.op.trace
        require(abs(trace - 1) <= TRACE_TOL, "unit trace", f"trace {trace!r} is not 1")


OperatorLike = HermitianOperator | SubnormalizedState


@dataclass(frozen=True, eq=False)
class PureVector:
    """State vector on a labelled register."""

    shape: RegisterShape
    amplitudes: np.ndarray
    subnormalized: bool = False

    def __post_init__(self) -> None:
        vector = np.array(self.amplitudes, dtype=complex).reshape(-1)
        require(vector.size == self.shape.total, "amplitudes match register dimension")
        norm_sq = float(np.vdot(vector, vector).real)
        if self.subnormalized:
            require(0 < norm_sq <= 1 + PURE_NORM_TOL, "0 < squared norm <= 1")
        else:
            require(abs(norm_sq - 1) <= PURE_NORM_TOL, "unit norm", f"squared norm {norm_sq!r}")
        vector.setflags(write=False)
        object.__setattr__(self, "amplitudes", vector)

    def operator(self) -> HermitianOperator:
        return HermitianOperator(self.shape, np.outer(self.amplitudes, self.amplitudes.conj()))

    def state(self) -> SubnormalizedState:
        op = self.operator()
        if self.subnormalized:
            return SubnormalizedState.unchecked(op)
        return DensityState.unchecked(op)


class EigenDecomposition(NamedTuple):
    """Ascending eigenvalues with the unitary of eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_operator(x: OperatorLike) -> HermitianOperator:
    if isinstance(x, SubnormalizedState):
        return x.op
    return x


def as_matrix(x: "OperatorLike | np.ndarray") -> np.ndarray:
    if isinstance(x, np.ndarray):
        return x
    return as_operator(x).matrix


def _rewrap(template: Sequence[OperatorLike], op: HermitianOperator) -> OperatorLike:
    """Carry the weakest state type of the inputs over to a derived operator."""
    if all(isinstance(t, DensityState) for t in template):
        return DensityState.unchecked(op)
    if all(isinstance(t, SubnormalizedState) for t in template):
        return SubnormalizedState.unchecked(op)
    return op


# ---------------------------------------------------------------------------
# Register algebra
# ---------------------------------------------------------------------------


def tensor(*factors: OperatorLike) -> OperatorLike:
    """
    Kronecker product of operators on disjoint registers.

    Args:
        factors: One or more operators or states

    Returns:
        Product on the concatenated shape; a state if every factor is one

    Raises:
        DomainError: On a label collision
    """
    require(len(factors) >= 1, "at least one factor")
    ops = [as_operator(f) for f in factors]
    shape = reduce(lambda s, o: s.concat(o.shape), ops[1:], ops[0].shape)
    require(shape.total <= MAX_DENSE_DIM, f"dimension <= {MAX_DENSE_DIM}")
    matrix = reduce(np.kron, (o.matrix for o in ops[1:]), ops[0].matrix)
    return _rewrap(factors, HermitianOperator(shape, matrix))


def tensor_power(x: OperatorLike, n: int, suffix: str = "") -> OperatorLike:
    """n-fold tensor power; copy k of label L is relabelled L{k}{suffix}."""
    require(n >= 1, "n >= 1")
    copies = [relabel(x, {label: f"{label}{k + 1}{suffix}" for label in as_operator(x).shape.labels}) for k in range(n)]
    return tensor(*copies)


def _trace_out(matrix: np.ndarray, dims: Sequence[int], drop_idx: Sequence[int]) -> np.ndarray:
    n = len(dims)
    t = matrix.reshape(tuple(dims) + tuple(dims))
    for i in sorted(drop_idx, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + n)
        n -= 1
    keep = [d for j, d in enumerate(dims) if j not in set(drop_idx)]
    d_keep = math.prod(keep)
    return t.reshape(d_keep, d_keep)


def partial_trace(x: OperatorLike, drop: Iterable[str]) -> OperatorLike:
    """
    Trace out the given registers.

    Args:
        x: Operator or state
        drop: Labels to trace out

    Returns:
        Marginal on the remaining labels, original order kept

    Raises:
        DomainError: If a label is unknown
    """
    op = as_operator(x)
    drop = list(drop)
    idx = [op.shape.index(label) for label in drop]
    shape = op.shape.without(drop)
    matrix = _trace_out(op.matrix, op.shape.dims, idx)
    return _rewrap([x], HermitianOperator(shape, matrix))


def permute(x: OperatorLike, order: Sequence[str]) -> OperatorLike:
    """Reorder registers so that they appear in the given label order."""
    op = as_operator(x)
    order = list(order)
    require(sorted(order) == sorted(op.shape.labels), "order is a permutation of labels")
    perm = [op.shape.index(label) for label in order]
    n = len(perm)
    t = op.matrix.reshape(op.shape.dims + op.shape.dims)
    t = t.transpose(perm + [p + n for p in perm])
    shape = op.shape.select(order)
    return _rewrap([x], HermitianOperator(shape, t.reshape(shape.total, shape.total)))


def reduce_state(x: OperatorLike, keep: Sequence[str]) -> OperatorLike:
    """Marginal on the kept labels, in the order given."""
    op = as_operator(x)
    keep = list(keep)
    for label in keep:
        op.shape.index(label)
    marginal = partial_trace(x, [label for label in op.shape.labels if label not in keep])
    if list(as_operator(marginal).shape.labels) != keep:
        marginal = permute(marginal, keep)
    return marginal


def relabel(x: OperatorLike, mapping: dict[str, str]) -> OperatorLike:
    op = as_operator(x)
    labels = tuple(mapping.get(label, label) for label in op.shape.labels)
    shape = RegisterShape(labels, op.shape.dims)
    return _rewrap([x], HermitianOperator(shape, op.matrix))


def permutation_operator(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """
    Unitary moving input register perm[k] to output position k.

    Args:
        dims: Local dimensions of the input registers
        perm: Permutation of range(len(dims))

    Returns:
        Dense permutation matrix
    """
    n = len(dims)
    require(sorted(perm) == list(range(n)), "valid permutation")
    total = math.prod(dims)
    basis = np.eye(total).reshape(tuple(dims) + (total,))
    return basis.transpose(list(perm) + [n]).reshape(total, total)


def purify(rho: SubnormalizedState, new_label: str) -> PureVector:
    """
    Canonical purification of a state.

    Eigenvalues are sorted descending (stable for ties) and each eigenvector is fixed by
    making its first non-negligible component real positive. The purifying register has
    the same total dimension as the input.

    Args:
        rho: State to purify
        new_label: Label of the purifying register

    Returns:
        PureVector on the input registers followed by new_label
    """
    shape = rho.shape.concat(RegisterShape.single(new_label, rho.dim))
    evals, vecs = np.linalg.eigh(rho.matrix)
    order = np.argsort(-evals, kind="stable")
    evals = np.clip(evals[order], 0.0, None)
    vecs = vecs[:, order]
    for k in range(vecs.shape[1]):
        column = vecs[:, k]
        threshold = KERNEL_CUTOFF * np.abs(column).max()
        first = int(np.argmax(np.abs(column) > threshold))
        phase = column[first] / abs(column[first])
        vecs[:, k] = column / phase
    psi = vecs * np.sqrt(evals)[None, :]
    return PureVector(shape, psi.reshape(-1), subnormalized=not isinstance(rho, DensityState))


# ---------------------------------------------------------------------------
# Spectral calculus
# ---------------------------------------------------------------------------


def hermitian_eigh(matrix: np.ndarray) -> EigenDecomposition:
    evals, vecs = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    return EigenDecomposition(evals, vecs)


def eig_hermitian(x: "OperatorLike | np.ndarray") -> EigenDecomposition:
    """
    Eigendecomposition of a Hermitian operator, eigenvalues ascending.

    Raises:
        DomainError: If a raw matrix is not Hermitian
    """
    if isinstance(x, np.ndarray):
        scale = max(np.linalg.norm(x), _TINY)
        require(np.linalg.norm(x - x.conj().T) <= HERMITIAN_RTOL * scale, "Hermitian input")
    return hermitian_eigh(as_matrix(x))


def kernel_cutoff(evals: np.ndarray) -> float:
    return KERNEL_CUTOFF * float(np.abs(evals).max(initial=0.0))


def spectral_apply(matrix: np.ndarray, f: Callable[[np.ndarray], np.ndarray], support_only: bool = False) -> np.ndarray:
    """
    Apply a vectorized scalar map to the spectrum of a Hermitian matrix.

    With support_only, eigenvalues at or below the kernel cutoff map to zero.

    Raises:
        DomainError: If f is undefined on an eigenvalue it is applied to
    """
    evals, vecs = hermitian_eigh(matrix)
    mask = evals > kernel_cutoff(evals) if support_only else np.ones_like(evals, dtype=bool)
    with np.errstate(all="ignore"):
        values = np.asarray(f(evals[mask]), dtype=float)
    if not np.all(np.isfinite(values)):
        bad = evals[mask][~np.isfinite(values)]
        error = DomainError("f defined on spectrum", f"map undefined at eigenvalues {bad[:3]}")
        logger.error(str(error))
        raise error
    kept = vecs[:, mask]
    return (kept * values[None, :]) @ kept.conj().T


def matrix_function(x: OperatorLike, f: Callable[[np.ndarray], np.ndarray], support_only: bool = False) -> HermitianOperator:
    """
    f(x) computed in the eigenbasis of x.

    Args:
        x: Hermitian operator or state
        f: Vectorized scalar map
        support_only: Apply f only above the kernel cutoff, zero on the kernel

    Returns:
        HermitianOperator on the same shape
    """
    op = as_operator(x)
    return HermitianOperator(op.shape, spectral_apply(op.matrix, f, support_only))


def sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    return spectral_apply(matrix, lambda v: np.sqrt(np.clip(v, 0.0, None)))


def log2m(matrix: np.ndarray) -> np.ndarray:
    """log2 on the support, zero on the kernel."""
    return spectral_apply(matrix, np.log2, support_only=True)


def power_psd(matrix: np.ndarray, exponent: float) -> np.ndarray:
    """Matrix power on the support, zero on the kernel."""
    return spectral_apply(matrix, lambda v: np.power(v, exponent), support_only=True)


def geninv_matrix(matrix: np.ndarray) -> np.ndarray:
    return spectral_apply(matrix, np.reciprocal, support_only=True)


def support_projector(matrix: np.ndarray) -> np.ndarray:
    return spectral_apply(matrix, np.ones_like, support_only=True)


def positive_projector(matrix: np.ndarray) -> np.ndarray:
    """Projector onto the strictly positive eigenspace, {x}_+."""
    evals, vecs = hermitian_eigh(matrix)
    kept = vecs[:, evals > kernel_cutoff(evals)]
    return kept @ kept.conj().T


def geninv(x: OperatorLike) -> HermitianOperator:
    """Generalized inverse: the inverse on the support, zero on the kernel."""
    op = as_operator(x)
    return HermitianOperator(op.shape, geninv_matrix(op.matrix))


def positive_part(x: OperatorLike) -> HermitianOperator:
    op = as_operator(x)
    return HermitianOperator(op.shape, positive_projector(op.matrix))


def support_contains(rho: "OperatorLike | np.ndarray", sigma: "OperatorLike | np.ndarray") -> bool:
    """True when supp rho lies in supp sigma, up to a leak relative to Tr rho."""
    rho_m, sigma_m = as_matrix(rho), as_matrix(sigma)
    kernel = np.eye(sigma_m.shape[0]) - support_projector(sigma_m)
    leak = float(np.trace(kernel @ rho_m).real)
    return leak <= SUPPORT_LEAK_TOL * max(float(np.trace(rho_m).real), _TINY)


def expectation(x: "OperatorLike | np.ndarray", rho: "OperatorLike | np.ndarray") -> float:
    return float(np.trace(as_matrix(x) @ as_matrix(rho)).real)


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def identity_operator(dims: int | Sequence[int], labels: str | Sequence[str] | None = None) -> HermitianOperator:
    shape = make_shape(dims, labels)
    return HermitianOperator(shape, np.eye(shape.total))


def maximally_mixed(dims: int | Sequence[int], labels: str | Sequence[str] | None = None) -> DensityState:
    shape = make_shape(dims, labels)
    return DensityState.unchecked(HermitianOperator(shape, np.eye(shape.total) / shape.total))


def basis_state(dim: int, index: int, label: str = "A") -> DensityState:
    require(0 <= index < dim, "basis index in range")
    matrix = np.zeros((dim, dim))
    matrix[index, index] = 1.0
    return DensityState.unchecked(HermitianOperator(RegisterShape.single(label, dim), matrix))


def diagonal_state(
    probs: Sequence[float], dims: int | Sequence[int] | None = None, labels: str | Sequence[str] | None = None
) -> SubnormalizedState:
    """Diagonal state; a DensityState when the weights sum to one."""
    p = np.asarray(probs, dtype=float)
    shape = make_shape(p.size if dims is None else dims, labels)
    op = HermitianOperator(shape, np.diag(p))
    if abs(p.sum() - 1) <= TRACE_TOL:
        return DensityState(op)
    return SubnormalizedState(op)


def pure_state(amplitudes: Sequence[complex], dims: int | Sequence[int], labels: str | Sequence[str] | None = None) -> PureVector:
    vector = np.asarray(amplitudes, dtype=complex)
    return PureVector(make_shape(dims, labels), vector / np.linalg.norm(vector))


def maximally_entangled(dim: int, labels: tuple[str, str] = ("A", "R")) -> PureVector:
    vector = np.eye(dim).reshape(-1) / np.sqrt(dim)
    return PureVector(make_shape([dim, dim], list(labels)), vector)


def density_state(matrix: np.ndarray, dims: int | Sequence[int], labels: str | Sequence[str] | None = None) -> DensityState:
    return DensityState(HermitianOperator(make_shape(dims, labels), matrix))
