"""
Two-sided bounds on smoothed entropic quantities, and an exact oracle for classical instances.

Smoothing over a purified-distance ball is not computed directly for general states.
Each smoothed quantity is bracketed by conversions to the hypothesis-testing relative
entropy, and every end of an interval records the chain it comes from. Diagonal
instances can be smoothed exactly by small convex programs, which the tests use as an
independent check on the brackets.
"""

import logging
import math
from functools import reduce
from typing import NamedTuple, Sequence

import cvxpy as cp
import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize_scalar

from src.constants import DEFAULT_DMIN_K, DH_DIM_CUTOFF, ORACLE_MARGINAL_GRID, ORACLE_PRECISION
from src.errors import ConvergenceError, require
from src.measures.distances import triangle_bound
from src.measures.entropies import dmax, dmin, imax, marginal_product
from src.measures.hypotest import ClassicalIIDSpec, dh, dh_classical_iid, info_spectrum_entropy
from src.measures.values import BoundInterval, SmoothingRadius
from src.quantum.qregisters import (
    DensityState,
    OperatorLike,
    PureVector,
    as_matrix,
    as_operator,
    geninv,
    identity_operator,
    permute,
    purify,
    reduce_state,
    tensor,
    tensor_power,
)
from src.utils.optim import resolve_workers, solve_conic

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny
_PURIFYING_LABEL = "Rp"
ORACLE_KINDS = ("dmin", "dmax", "imax_partial", "imax")


class SourceCodingBound(NamedTuple):
    """Both steps of the source-compression cost bound; best is the smaller one."""

    info_spectrum: float
    hypothesis_testing: float
    best: float


def _hypothesis_offset(eps: float) -> float:
    """log 1/(1 - eps^2), the slack of the D_max to D_h conversion."""
    return -math.log2(1.0 - eps**2)


def _dh_bits(rho: OperatorLike, sigma, eps: float) -> float:
    return dh(rho, sigma, eps).bits


# ---------------------------------------------------------------------------
# Max- and min-relative entropy
# ---------------------------------------------------------------------------


def dmax_smoothed_bounds(
    rho: OperatorLike, sigma: "OperatorLike | np.ndarray", eps: float, delta: float | None = None
) -> BoundInterval:
    """
    Bracket D_max^eps(rho||sigma) by hypothesis-testing relative entropies.

    upper = min(D_h^{1-eps^2} + log 1/(1-eps^2), D_max) and
    lower = D_h^{1-eps^2-delta} - log 4/delta^2.

    Args:
        rho: State
        sigma: Positive operator
        eps: Smoothing radius in [0, 1)
        delta: Slack in (0, 1 - eps^2]; defaults to (1 - eps^2)/2

    Returns:
        BoundInterval; collapses to D_max at eps = 0

    Raises:
        DomainError: If eps or delta lie outside their domains
    """
    require(0.0 <= eps < 1.0, "eps in [0, 1)", f"eps = {eps}")
    unsmoothed = dmax(rho, sigma).bits
    if eps == 0:
        return BoundInterval(unsmoothed, unsmoothed, "unsmoothed D_max", "unsmoothed D_max")
    success = eps**2
    delta = (1.0 - success) / 2 if delta is None else delta
    require(0.0 < delta <= 1.0 - success, "delta in (0, 1 - eps^2]", f"delta = {delta}")

    upper = _dh_bits(rho, sigma, 1.0 - success) + _hypothesis_offset(eps)
    upper_note = "D_h^{1-eps^2} + log 1/(1-eps^2)"
    if unsmoothed <= upper:
        upper, upper_note = unsmoothed, "unsmoothed D_max"
    lower = _dh_bits(rho, sigma, 1.0 - success - delta) - math.log2(4.0 / delta**2)
    return BoundInterval.ordered(lower, upper, f"D_h^{{1-eps^2-delta}} - log 4/delta^2, delta={delta:g}", upper_note)


def dmin_smoothed_lower(rho: OperatorLike, sigma: "OperatorLike | np.ndarray", eps: float) -> float:
    """D_min evaluated at rho itself, a feasible point of every smoothing ball."""
    require(0.0 <= eps <= 1.0, "eps in [0, 1]", f"eps = {eps}")
    return dmin(rho, sigma).bits


def dmin_smoothed_upper(
    rho: OperatorLike,
    sigma: "OperatorLike | np.ndarray",
    eps: float,
    k: float = DEFAULT_DMIN_K,
    eps_prime: float | None = None,
) -> float:
    """
    Upper bound on D_min^eps(rho||sigma).

    The hypothesis-testing route gives D_h^{k eps^2} - log(1 - c^2) with
    c = eps^2 sqrt(k) + sqrt(1 - k eps^2) sqrt(1 - eps^2). When eps_prime is given the
    max-relative-entropy route D_max^{eps'} - log(1 - triangle(eps, eps')^2) is also
    evaluated, with D_max^{eps'} replaced by its certified upper end, and the minimum is
    returned.

    Args:
        rho: State
        sigma: Positive operator
        eps: Smoothing radius in (0, k^{-1/2}]
        k: Constant strictly above one
        eps_prime: Optional second radius with eps^2 + eps'^2 <= 1

    Returns:
        Bound in bits, +inf at k eps^2 = 1

    Raises:
        DomainError: If (eps, k, eps_prime) lie outside the domain
    """
    require(k > 1.0, "k > 1", f"k = {k}")
    require(0.0 < eps <= k**-0.5 + 1e-12, "eps in (0, k^{-1/2}]", f"eps = {eps}, k = {k}")
    best = math.inf
    weight = k * eps**2
    if weight < 1.0:
        c = eps**2 * math.sqrt(k) + math.sqrt(1.0 - weight) * math.sqrt(1.0 - eps**2)
        if c < 1.0:
            best = _dh_bits(rho, sigma, weight) - math.log2(1.0 - c**2)
    if eps_prime is not None:
        require(0.0 <= eps_prime < 1.0, "eps' in [0, 1)", f"eps' = {eps_prime}")
        require(eps**2 + eps_prime**2 <= 1.0, "eps^2 + eps'^2 <= 1")
        c = triangle_bound(eps, eps_prime)
        if c < 1.0:
            route = dmax_smoothed_bounds(rho, sigma, eps_prime).upper - math.log2(1.0 - c**2)
            best = min(best, route)
    return best


def dmin_smoothed_bounds(
    rho: OperatorLike,
    sigma: "OperatorLike | np.ndarray",
    eps: float,
    k: float = DEFAULT_DMIN_K,
    eps_prime: float | None = None,
) -> BoundInterval:
    """D_min^eps bracketed by its value at rho and the best upper route."""
    lower = dmin_smoothed_lower(rho, sigma, eps)
    if eps == 0:
        return BoundInterval(lower, lower, "unsmoothed D_min", "unsmoothed D_min")
    upper = dmin_smoothed_upper(rho, sigma, eps, k, eps_prime)
    return BoundInterval.ordered(lower, upper, "D_min at rho", f"hypothesis-testing conversion, k={k:g}")


# ---------------------------------------------------------------------------
# Partially smoothed max-information
# ---------------------------------------------------------------------------


def _is_diagonal(matrix: np.ndarray) -> bool:
    off = matrix - np.diag(np.diag(matrix))
    return bool(np.abs(off).max(initial=0.0) <= 1e-12 * max(1.0, np.abs(matrix).max()))


def _dual_k(eps: float) -> float:
    """Largest admissible default k for the min-entropy conversion at radius eps."""
    if eps <= DEFAULT_DMIN_K**-0.5:
        return DEFAULT_DMIN_K
    return (1.0 + 1.0 / eps**2) / 2


def _labels_of(rho_br: OperatorLike, r_labels: Sequence[str] | None) -> tuple[list[str], list[str]]:
    labels = list(as_operator(rho_br).shape.labels)
    r = list(r_labels) if r_labels else labels[-1:]
    for label in r:
        as_operator(rho_br).shape.index(label)
    b = [label for label in labels if label not in r]
    require(bool(b), "bipartite input", "at least one register must remain on the B side")
    return b, r


def _kron_power(matrix: np.ndarray, n: int) -> np.ndarray:
    return reduce(np.kron, [matrix] * n)


def _reference_operator(rho_br: OperatorLike, r: list[str]) -> np.ndarray:
    """rho_R (x) I_B in the register order of rho_br."""
    labels = as_operator(rho_br).shape.labels
    b = [label for label in labels if label not in r]
    identity_b = identity_operator(as_operator(rho_br).shape.select(b).dims, b)
    return as_matrix(permute(tensor(reduce_state(rho_br, r), identity_b), labels))


def _diagonal_spectra(rho_br: OperatorLike, sigma_m: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Normalized diagonals of rho and sigma, plus the normalization of sigma."""
    p = np.clip(np.diag(as_matrix(rho_br)).real, 0.0, None)
    q = np.clip(np.diag(sigma_m).real, 0.0, None)
    return p / p.sum(), q / q.sum(), float(q.sum())


def _upper_explicit(rho_br: OperatorLike, r: list[str], n: int, eps: float) -> tuple[float, str]:
    sigma_n = _kron_power(marginal_product(rho_br, r), n)
    bounds = dmax_smoothed_bounds(tensor_power(rho_br, n), sigma_n, eps / 4)
    return bounds.upper, bounds.upper_provenance


def _upper_type_class(rho_br: OperatorLike, r: list[str], n: int, eps: float) -> tuple[float, str]:
    p, q, _ = _diagonal_spectra(rho_br, marginal_product(rho_br, r))
    radius = eps / 4
    support = p > 0
    unsmoothed = n * float(np.max(np.log2(p[support]) - np.log2(q[support])))
    route = dh_classical_iid(ClassicalIIDSpec(p, q, n), 1.0 - radius**2).bits + _hypothesis_offset(radius)
    if unsmoothed <= route:
        return unsmoothed, "unsmoothed D_max (type classes)"
    return route, "D_h^{1-eps^2} + log 1/(1-eps^2) at radius eps/4 (type classes)"


def _lower_direct(rho_br: OperatorLike, r: list[str], n: int, eps: float, explicit: bool) -> float:
    """D_h^{1-eps^2-delta}(rho^n || (rho_R (x) I_B)^n) - log 4/delta^2 with delta = (1-eps^2)/2."""
    delta = (1.0 - eps**2) / 2
    error = 1.0 - eps**2 - delta
    sigma_m = _reference_operator(rho_br, r)
    if explicit:
        bits = _dh_bits(tensor_power(rho_br, n), _kron_power(sigma_m, n), error)
    else:
        p, q, scale = _diagonal_spectra(rho_br, sigma_m)
        bits = dh_classical_iid(ClassicalIIDSpec(p, q, n), error).bits - n * math.log2(scale)
    return bits - math.log2(4.0 / delta**2)


def _lower_dual(
    rho_br: OperatorLike, r: list[str], n: int, eps: float, purification: PureVector | None
) -> tuple[float, float]:
    """Minus the min-entropy upper bound of the dual instance (rho_RR'^n || (rho_R^-1 (x) rho_R')^n)."""
    psi = purification or purify(rho_br, _PURIFYING_LABEL)
    reference = [label for label in psi.shape.labels if label not in as_operator(rho_br).shape.labels]
    joint = psi.state()
    rho_rr = reduce_state(joint, r + reference)
    sigma_single = as_matrix(tensor(geninv(reduce_state(rho_br, r)), reduce_state(joint, reference)))
    k = _dual_k(eps)
    return -dmin_smoothed_upper(tensor_power(rho_rr, n), _kron_power(sigma_single, n), eps, k), k


def imax_partially_smoothed_bounds(
    rho_br: DensityState,
    n: int = 1,
    eps: float = 0.0,
    r_labels: Sequence[str] | None = None,
    purification: PureVector | None = None,
) -> BoundInterval:
    """
    Bracket the partially smoothed max-information of n copies, with the R marginal held fixed.

    The upper end converts the fixed-marginal quantity to the freely smoothed one at
    radius eps/4 (slack log((8 + (eps/2)^2)/(eps/2)^2)), bounds that by D_max^{eps/4}
    against rho_B (x) rho_R and converts to D_h. The lower end is the larger of two
    routes: duality with the purifying register R', bounded through the min-entropy
    conversion, and D_max^eps against rho_R (x) I_B converted to D_h.

    Explicit tensor powers are used while they fit the dense limit; diagonal inputs
    beyond it go through type classes, where only the direct lower route is available.

    Args:
        rho_br: Bipartite state on B and R
        n: Number of copies
        eps: Smoothing radius in [0, 1]
        r_labels: Registers forming R; defaults to the last register
        purification: Purification of rho_br to use for the dual route; canonical by default

    Returns:
        BoundInterval in bits

    Raises:
        DomainError: If the instance is neither within the explicit cutoff nor diagonal
    """
    require(n >= 1, "n >= 1")
    require(0.0 <= eps <= 1.0, "eps in [0, 1]", f"eps = {eps}")
    _, r = _labels_of(rho_br, r_labels)
    if eps == 0:
        value = n * imax(rho_br, a_labels=r).bits
        return BoundInterval(value, value, "exact conic max-information", "exact conic max-information")

    dim = as_operator(rho_br).shape.total
    d_r = as_operator(rho_br).shape.select(r).total
    explicit = dim**n <= DH_DIM_CUTOFF
    diagonal = _is_diagonal(as_matrix(rho_br))
    require(explicit or diagonal, "n within explicit-tensor cutoff or diagonal input", f"dimension {dim}^{n}")

    if explicit:
        upper, upper_note = _upper_explicit(rho_br, r, n, eps)
    else:
        upper, upper_note = _upper_type_class(rho_br, r, n, eps)
    fixed_marginal = math.log2((8 + (eps / 2) ** 2) / (eps / 2) ** 2)
    upper += fixed_marginal

    candidates = [(-math.inf, "trivial")]
    if eps < 1.0:
        direct = _lower_direct(rho_br, r, n, eps, explicit)
        candidates.append((direct, "D_h against rho_R (x) I_B"))
        if (d_r * dim) ** n <= DH_DIM_CUTOFF:
            dual, k = _lower_dual(rho_br, r, n, eps, purification)
            candidates.append((dual, f"dual instance via D_min conversion, k={k:g}"))
        else:
            logger.info(f"Dual instance of dimension {(d_r * dim)}^{n} exceeds the explicit cutoff; skipped")
    lower, lower_note = max(candidates, key=lambda c: c[0])
    logger.debug(f"Partially smoothed I_max bounds n={n}, eps={eps}: [{lower:.6f}, {upper:.6f}]")
    return BoundInterval.ordered(lower, upper, lower_note, f"{upper_note} + fixed-marginal slack")


# ---------------------------------------------------------------------------
# One-shot operational costs
# ---------------------------------------------------------------------------


def state_splitting_cost_bounds(
    rho_br: DensityState,
    eps: float,
    delta: float | None = None,
    n: int = 1,
    r_labels: Sequence[str] | None = None,
) -> BoundInterval:
    """
    Bracket the optimal quantum communication cost of state splitting at error eps.

    lower = I^eps_max(R;B)/2 from below, upper = I^{eps-delta}_max(R;B)/2 from above plus log 2/delta.

    Args:
        rho_br: State on the receiver register B and reference R
        eps: Error in (0, 1]
        delta: Slack in (0, eps]; defaults to eps/2
        n: Number of copies
        r_labels: Registers forming R

    Returns:
        BoundInterval in qubits
    """
    require(SmoothingRadius(eps).within(1.0, open_lower=True), "eps in (0, 1]", f"eps = {eps}")
    delta = eps / 2 if delta is None else delta
    require(0.0 < delta <= eps, "delta in (0, eps]", f"delta = {delta}")
    low = imax_partially_smoothed_bounds(rho_br, n, eps, r_labels).scaled(0.5)
    high = imax_partially_smoothed_bounds(rho_br, n, max(0.0, eps - delta), r_labels).scaled(0.5)
    high = high.shifted(math.log2(2.0 / delta), upper_note=" + log 2/delta")
    return BoundInterval.ordered(
        low.lower, high.upper, f"half of {low.lower_provenance}", f"half of {high.upper_provenance}"
    )


def source_coding_cost_upper(rho_b: DensityState, eps: float) -> SourceCodingBound:
    """
    Upper bounds on the cost of compressing rho_B at purified-distance error eps.

    Args:
        rho_b: Source state
        eps: Error in (0, 1]

    Returns:
        SourceCodingBound with the information-spectrum and hypothesis-testing steps
    """
    require(SmoothingRadius(eps).within(1.0, open_lower=True), "eps in (0, 1]", f"eps = {eps}")
    spectrum = info_spectrum_entropy(rho_b, eps**2 / 2).bits
    identity = np.eye(as_operator(rho_b).dim)
    testing = -_dh_bits(rho_b, identity, eps**2 / 4) - math.log2(eps**2 / 4)
    return SourceCodingBound(spectrum, testing, min(spectrum, testing))


# ---------------------------------------------------------------------------
# Exact smoothing for diagonal instances
# ---------------------------------------------------------------------------


def _diagonal_of(x: "OperatorLike | np.ndarray", name: str) -> np.ndarray:
    matrix = as_matrix(x)
    require(_is_diagonal(matrix), "diagonal input", f"{name} has off-diagonal entries")
    return np.clip(np.diag(matrix).real, 0.0, None)


def _fidelity_floor(pbar, p: np.ndarray, eps: float):
    """Generalized fidelity with a normalized p at least sqrt(1 - eps^2)."""
    return cp.sum(cp.multiply(np.sqrt(p), cp.sqrt(pbar))) >= math.sqrt(1.0 - eps**2)


def _oracle_dmax(p: np.ndarray, q: np.ndarray, eps: float) -> float:
    pbar = cp.Variable(p.size, nonneg=True)
    t = cp.Variable(nonneg=True)
    problem = cp.Problem(cp.Minimize(t), [pbar <= t * q, cp.sum(pbar) <= 1, _fidelity_floor(pbar, p, eps)])
    value = solve_conic(problem, "smoothed D_max oracle")
    return math.log2(value) if value > _TINY else -math.inf


def _oracle_dmin(p: np.ndarray, q: np.ndarray, eps: float) -> float:
    # x = sqrt(pbar) turns the fidelity objective linear; restricted to diagonal pbar
    x = cp.Variable(p.size, nonneg=True)
    problem = cp.Problem(
        cp.Minimize(np.sqrt(q) @ x),
        [np.sqrt(p) @ x >= math.sqrt(1.0 - eps**2), cp.sum_squares(x) <= 1],
    )
    value = solve_conic(problem, "smoothed D_min oracle")
    return -2 * math.log2(value) if value > _TINY else math.inf


def _table(rho_br: OperatorLike, r: list[str], b: list[str]) -> np.ndarray:
    """Joint distribution as an |R| x |B| array."""
    ordered = permute(rho_br, r + b)
    shape = as_operator(ordered).shape
    p = _diagonal_of(ordered, "rho_BR")
    return (p / p.sum()).reshape(shape.select(r).total, shape.select(b).total)


def _imax_closed_form(table: np.ndarray, marginal: np.ndarray) -> float:
    rows = marginal > 0
    ratios = table[rows] / marginal[rows][:, None]
    return math.log2(ratios.max(axis=0).sum())


def _oracle_fixed_marginal(table: np.ndarray, marginal: np.ndarray, eps: float) -> float:
    """min log sum_b max_r pbar(r,b)/u_r over pbar in the ball with row sums u."""
    d_r, d_b = table.shape
    pbar = cp.Variable((d_r, d_b), nonneg=True)
    m = cp.Variable(d_b, nonneg=True)
    constraints = [_fidelity_floor(pbar, table, eps)]
    for row in range(d_r):
        if marginal[row] > 0:
            constraints += [pbar[row, :] <= marginal[row] * m, cp.sum(pbar[row, :]) == marginal[row]]
        else:
            constraints.append(pbar[row, :] == 0)
    problem = cp.Problem(cp.Minimize(cp.sum(m)), constraints)
    try:
        value = solve_conic(problem, "partially smoothed max-information oracle")
    except ConvergenceError:
        return math.inf
    return math.log2(value)


def _oracle_free_marginal(table: np.ndarray, eps: float) -> float:
    """Scan the two-outcome marginal, then refine the best grid point with a bounded scalar search."""
    def inner(s: float) -> float:
        return _oracle_fixed_marginal(table, np.array([s, 1.0 - s]), eps)

    grid = np.unique(np.concatenate([np.linspace(0.0, 1.0, ORACLE_MARGINAL_GRID), [table.sum(axis=1)[0]]]))
    workers = resolve_workers()
    values = Parallel(n_jobs=workers, prefer="threads")(delayed(inner)(float(s)) for s in grid)
    best = int(np.argmin(values))
    step = 1.0 / (ORACLE_MARGINAL_GRID - 1)
    lo, hi = max(0.0, grid[best] - step), min(1.0, grid[best] + step)
    refined = minimize_scalar(inner, bounds=(lo, hi), method="bounded", options={"xatol": ORACLE_PRECISION})
    return float(min(values[best], refined.fun))


def exact_smoothing_oracle(
    kind: str,
    rho: "OperatorLike | np.ndarray",
    sigma: "OperatorLike | np.ndarray | None" = None,
    eps: float = 0.0,
    r_labels: Sequence[str] | None = None,
) -> float:
    """
    Smoothed quantity of a diagonal instance, solved as a convex program over diagonal rho_bar.

    Dephasing in the common eigenbasis keeps rho_bar in the ball and does not increase
    D_max, so the dmax, imax_partial and imax kinds are exact. For dmin the program is
    the optimum over diagonal rho_bar, a lower bound on the smoothed value that still lies
    above D_min(rho||sigma). The imax kind (marginal free) scans the marginal of a
    two-outcome R register.

    Args:
        kind: One of dmin, dmax, imax_partial, imax
        rho: Diagonal state; bipartite on B and R for the max-information kinds
        sigma: Diagonal positive operator for dmin and dmax
        eps: Smoothing radius in [0, 1)
        r_labels: Registers forming R; defaults to the last register

    Returns:
        Value in bits

    Raises:
        DomainError: On a non-diagonal input, an unknown kind or more than 9 outcomes
    """
    require(kind in ORACLE_KINDS, f"kind in {ORACLE_KINDS}", f"unknown oracle kind {kind!r}")
    require(0.0 <= eps < 1.0, "eps in [0, 1)", f"eps = {eps}")
    p = _diagonal_of(rho, "rho")
    require(p.size <= 9, "at most 9 outcomes")
    p = p / p.sum()

    if kind in ("dmax", "dmin"):
        require(sigma is not None, "sigma given")
        q = _diagonal_of(sigma, "sigma")
        require(q.size == p.size, "same shape")
        if eps == 0:
            return (dmax if kind == "dmax" else dmin)(rho, sigma).bits
        return _oracle_dmax(p, q, eps) if kind == "dmax" else _oracle_dmin(p, q, eps)

    b, r = _labels_of(rho, r_labels)
    table = _table(rho, r, b)
    marginal = table.sum(axis=1)
    if eps == 0:
        return _imax_closed_form(table, marginal)
    if kind == "imax_partial":
        return _oracle_fixed_marginal(table, marginal, eps)
    require(table.shape[0] == 2, "two-outcome R register")
    return _oracle_free_marginal(table, eps)
