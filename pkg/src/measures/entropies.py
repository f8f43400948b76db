"""
Unsmoothed entropic functionals in bits, and the max-information conic programs.
"""

import logging
import math
from typing import NamedTuple, Sequence

import cvxpy as cp
import numpy as np

from src.constants import (
    FIXED_POINT_MAX_ITER,
    FIXED_POINT_RESTARTS,
    FIXED_POINT_TOL,
    IMAX_FEASIBILITY_TOL,
    IMAX_GAP_TOL,
)
from src.errors import ConvergenceError, DomainError, require
from src.measures.distances import fidelity_matrix
from src.measures.values import EntropyValue
from src.quantum.qregisters import (
    OperatorLike,
    as_matrix,
    as_operator,
    hermitian_eigh,
    kernel_cutoff,
    log2m,
    permute,
    power_psd,
    reduce_state,
    sqrtm_psd,
    support_contains,
    tensor,
)
from src.utils.optim import solve_conic
from src.utils.sampling import ginibre_matrix, spawn_rngs

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


class ImaxCertificate(NamedTuple):
    """Primal/dual pair for the max-information program, values before taking the log."""

    value: EntropyValue
    primal: float
    dual: float
    relative_gap: float
    feasibility_residual: float
    x_b: np.ndarray


def _spectrum(rho: OperatorLike) -> np.ndarray:
    evals = np.linalg.eigvalsh(as_matrix(rho))
    return evals[evals > kernel_cutoff(evals)]


def von_neumann(rho: OperatorLike) -> EntropyValue:
    """S(rho) = -Tr rho log rho over the support."""
    p = _spectrum(rho)
    return EntropyValue.of(float(-(p * np.log2(p)).sum()) + 0.0)


def varentropy(rho: OperatorLike) -> EntropyValue:
    """Tr rho (log rho)^2 - S(rho)^2, clipped at zero."""
    p = _spectrum(rho)
    logs = np.log2(p)
    s = -(p * logs).sum()
    return EntropyValue.of(max(0.0, float((p * logs**2).sum() - s**2)))


def _log_difference(rho_m: np.ndarray, sigma_m: np.ndarray) -> np.ndarray:
    return log2m(rho_m) - log2m(sigma_m)


def relative_entropy(rho: OperatorLike, sigma: "OperatorLike | np.ndarray") -> EntropyValue:
    """
    D(rho||sigma) = Tr rho (log rho - log sigma).

    Returns:
        EntropyValue, infinite when supp rho is not contained in supp sigma
    """
    rho_m, sigma_m = as_matrix(rho), as_matrix(sigma)
    if not support_contains(rho_m, sigma_m):
        return EntropyValue.infinite()
    return EntropyValue.of(float(np.trace(rho_m @ _log_difference(rho_m, sigma_m)).real))


def relative_entropy_variance(rho: OperatorLike, sigma: "OperatorLike | np.ndarray") -> EntropyValue:
    """V(rho||sigma) = Tr rho (log rho - log sigma)^2 - D(rho||sigma)^2."""
    rho_m, sigma_m = as_matrix(rho), as_matrix(sigma)
    if not support_contains(rho_m, sigma_m):
        return EntropyValue.infinite()
    diff = _log_difference(rho_m, sigma_m)
    d = float(np.trace(rho_m @ diff).real)
    second = float(np.trace(rho_m @ diff @ diff).real)
    return EntropyValue.of(max(0.0, second - d**2))


def dmax(rho: OperatorLike, sigma: "OperatorLike | np.ndarray") -> EntropyValue:
    """Log of the largest eigenvalue of sigma^{-1/2} rho sigma^{-1/2} on supp sigma."""
    rho_m, sigma_m = as_matrix(rho), as_matrix(sigma)
    if not support_contains(rho_m, sigma_m):
        return EntropyValue.infinite()
    w = power_psd(sigma_m, -0.5)
    top = float(np.linalg.eigvalsh(w @ rho_m @ w).max())
    return EntropyValue.of(math.log2(top))


def dmin(rho: OperatorLike, sigma: "OperatorLike | np.ndarray") -> EntropyValue:
    """-log F(rho, sigma)^2; infinite for orthogonal supports."""
    f = fidelity_matrix(as_matrix(rho), as_matrix(sigma))
    if f <= _TINY:
        return EntropyValue.infinite()
    return EntropyValue.of(-2 * math.log2(f))


def _sandwiched_quasi(rho_m: np.ndarray, sigma_m: np.ndarray, alpha: float) -> float:
    s = power_psd(sigma_m, (1 - alpha) / (2 * alpha))
    evals = np.clip(np.linalg.eigvalsh(s @ rho_m @ s), 0.0, None)
    return float(np.power(evals, alpha).sum())


def sandwiched_renyi(
    rho: OperatorLike, sigma: "OperatorLike | np.ndarray", alpha: float, exact_endpoints: bool = True
) -> EntropyValue:
    """
    Sandwiched Renyi divergence of order alpha.

    alpha = 1 gives the relative entropy; with exact_endpoints, alpha = 1/2 and
    alpha = inf route to D_min and D_max.

    Args:
        rho: State
        sigma: Positive operator
        alpha: Order in (0, inf]
        exact_endpoints: Route 1/2 and inf to their closed forms

    Returns:
        EntropyValue; infinite when the support condition for the order fails
    """
    require(alpha > 0, "alpha > 0", f"order {alpha}")
    if alpha == 1:
        return relative_entropy(rho, sigma)
    if math.isinf(alpha):
        return dmax(rho, sigma)
    if alpha == 0.5 and exact_endpoints:
        return dmin(rho, sigma)
    rho_m, sigma_m = as_matrix(rho), as_matrix(sigma)
    if alpha > 1 and not support_contains(rho_m, sigma_m):
        return EntropyValue.infinite()
    q = _sandwiched_quasi(rho_m, sigma_m, alpha)
    if q <= _TINY:
        return EntropyValue.infinite()
    return EntropyValue.of(math.log2(q) / (alpha - 1))


def petz_renyi(rho: OperatorLike, sigma: "OperatorLike | np.ndarray", alpha: float) -> EntropyValue:
    """Petz divergence log Tr(rho^alpha sigma^(1-alpha)) / (alpha - 1) for alpha in [0, 2]."""
    require(0 <= alpha <= 2, "alpha in [0, 2]", f"order {alpha}")
    if alpha == 1:
        return relative_entropy(rho, sigma)
    rho_m, sigma_m = as_matrix(rho), as_matrix(sigma)
    if alpha > 1 and not support_contains(rho_m, sigma_m):
        return EntropyValue.infinite()
    rho_pow = power_psd(rho_m, alpha)
    q = float(np.trace(rho_pow @ power_psd(sigma_m, 1 - alpha)).real)
    if q <= _TINY:
        return EntropyValue.infinite()
    return EntropyValue.of(math.log2(q) / (alpha - 1))


# ---------------------------------------------------------------------------
# Mutual information
# ---------------------------------------------------------------------------


def _split(rho_ab: OperatorLike, a_labels: Sequence[str] | None) -> tuple[list[str], list[str]]:
    labels = list(as_operator(rho_ab).shape.labels)
    a = list(a_labels) if a_labels else labels[:1]
    for label in a:
        as_operator(rho_ab).shape.index(label)
    b = [label for label in labels if label not in a]
    require(bool(b), "bipartite input", "at least one register must remain on the B side")
    return a, b


def marginal_product(rho_ab: OperatorLike, a_labels: Sequence[str] | None = None) -> np.ndarray:
    """rho_A (x) rho_B, arranged in the register order of rho_ab."""
    a, b = _split(rho_ab, a_labels)
    product = tensor(reduce_state(rho_ab, a), reduce_state(rho_ab, b))
    return as_matrix(permute(product, as_operator(rho_ab).shape.labels))


def mutual_information(rho_ab: OperatorLike, a_labels: Sequence[str] | None = None) -> EntropyValue:
    """I(A:B) = D(rho_AB || rho_A (x) rho_B); A defaults to the first register."""
    return relative_entropy(rho_ab, marginal_product(rho_ab, a_labels))


def mutual_information_variance(rho_ab: OperatorLike, a_labels: Sequence[str] | None = None) -> EntropyValue:
    return relative_entropy_variance(rho_ab, marginal_product(rho_ab, a_labels))


def _ordered(rho_ab: OperatorLike, tau_a: "OperatorLike | np.ndarray | None", a_labels):
    """rho with A registers first, plus tau_A (default rho_A) and the dimensions."""
    a, b = _split(rho_ab, a_labels)
    rho = permute(rho_ab, a + b)
    shape = as_operator(rho).shape
    d_a = shape.select(a).total
    d_b = shape.select(b).total
    tau_m = as_matrix(reduce_state(rho_ab, a)) if tau_a is None else as_matrix(tau_a)
    require(tau_m.shape == (d_a, d_a), "tau_A matches A", f"tau_A of shape {tau_m.shape}, A of dimension {d_a}")
    return as_matrix(rho), tau_m, d_a, d_b


def _conjugated_by_inverse_sqrt(rho_m: np.ndarray, tau_m: np.ndarray, d_b: int) -> np.ndarray:
    """(W^dagger (x) I) rho (W (x) I) with W = tau^{-1/2} restricted to supp tau."""
    evals, vecs = hermitian_eigh(tau_m)
    mask = evals > kernel_cutoff(evals)
    w = vecs[:, mask] / np.sqrt(evals[mask])[None, :]
    big_w = np.kron(w, np.eye(d_b))
    m = big_w.conj().T @ rho_m @ big_w
    return (m + m.conj().T) / 2


def _hermitian_part(expr):
    return (expr + expr.H) / 2


def imax_certified(
    rho_ab: OperatorLike, tau_a: "OperatorLike | np.ndarray | None" = None, a_labels: Sequence[str] | None = None
) -> ImaxCertificate:
    """
    Max-information min_X {log Tr X : tau_A (x) X >= rho_AB} with a dual certificate.

    The primal and its dual are solved separately. The primal is repaired to exact
    feasibility by a shift of X, the dual by PSD projection and rescaling, so both
    reported values are valid bounds on the optimum.

    Args:
        rho_ab: Bipartite state
        tau_a: Positive operator on A with supp tau_A containing supp rho_A; defaults to rho_A
        a_labels: Registers forming A; defaults to the first register

    Returns:
        ImaxCertificate; value is infinite when the support condition fails

    Raises:
        ConvergenceError: If the relative duality gap exceeds tolerance
    """
    rho_m, tau_m, d_a, d_b = _ordered(rho_ab, tau_a, a_labels)
    rho_a = as_matrix(reduce_state(rho_ab, _split(rho_ab, a_labels)[0]))
    if not support_contains(rho_a, tau_m):
        logger.info("Max-information infeasible: supp rho_A not inside supp tau_A")
        return ImaxCertificate(EntropyValue.infinite(), math.inf, math.inf, 0.0, 0.0, np.zeros((d_b, d_b)))

    m = _conjugated_by_inverse_sqrt(rho_m, tau_m, d_b)
    r = m.shape[0] // d_b

    x = cp.Variable((d_b, d_b), hermitian=True)
    primal = cp.Problem(
        cp.Minimize(cp.real(cp.trace(x))),
        [_hermitian_part(cp.kron(np.eye(r), x) - m) >> 0],
    )
    solve_conic(primal, "max-information primal")
    x_val = (x.value + x.value.conj().T) / 2
    residual = float(np.linalg.eigvalsh(np.kron(np.eye(r), x_val) - m).min())
    if residual < 0:
        x_val = x_val - residual * np.eye(d_b)
    primal_value = float(np.trace(x_val).real)

    y = cp.Variable((r * d_b, r * d_b), hermitian=True)
    dual = cp.Problem(
        cp.Maximize(cp.real(cp.trace(m @ y))),
        [y >> 0, cp.partial_trace(y, (r, d_b), axis=0) == np.eye(d_b)],
    )
    solve_conic(dual, "max-information dual")
    y_val = (y.value + y.value.conj().T) / 2
    evals, vecs = np.linalg.eigh(y_val)
    y_val = (vecs * np.clip(evals, 0.0, None)[None, :]) @ vecs.conj().T
    marginal = np.trace(y_val.reshape(r, d_b, r, d_b), axis1=0, axis2=2)
    scale = float(np.linalg.eigvalsh((marginal + marginal.conj().T) / 2).max())
    if scale > 1:
        y_val = y_val / scale
    dual_value = float(np.trace(m @ y_val).real)

    gap = (primal_value - dual_value) / max(abs(primal_value), _TINY)
    logger.debug(f"Max-information primal {primal_value:.12f}, dual {dual_value:.12f}, gap {gap:.2e}")
    if gap > IMAX_GAP_TOL:
        msg = f"max-information certificate gap {gap:.3e} exceeds {IMAX_GAP_TOL}"
        logger.error(msg)
        raise ConvergenceError(msg)
    if residual < -IMAX_FEASIBILITY_TOL:
        logger.debug(f"Primal feasibility repaired from residual {residual:.2e}")
    return ImaxCertificate(EntropyValue.of(math.log2(primal_value)), primal_value, dual_value, gap, residual, x_val)


def imax(
    rho_ab: OperatorLike, tau_a: "OperatorLike | np.ndarray | None" = None, a_labels: Sequence[str] | None = None
) -> EntropyValue:
    """Max-information I_max(A;B) (or its tau_A-generalization) from the certified conic program."""
    return imax_certified(rho_ab, tau_a, a_labels).value


def _half_renyi_conic(rho_m: np.ndarray, tau_m: np.ndarray, d_b: int) -> float:
    """max over sigma_B of F(rho, tau (x) sigma_B) as a semidefinite program."""
    dim = rho_m.shape[0]
    sigma = cp.Variable((d_b, d_b), hermitian=True)
    z = cp.Variable((dim, dim), complex=True)
    block = cp.bmat([[rho_m, z], [z.H, cp.kron(tau_m, sigma)]])
    problem = cp.Problem(
        cp.Maximize(cp.real(cp.trace(z))),
        [_hermitian_part(block) >> 0, sigma >> 0, cp.real(cp.trace(sigma)) == 1],
    )
    return solve_conic(problem, "order-1/2 mutual information")


def _half_renyi_fixed_point(rho_m: np.ndarray, tau_m: np.ndarray, d_b: int, seed: int | None) -> float:
    """
    Best F(rho, tau (x) sigma) over restarts of sigma <- (2/F) sigma^{1/2} G sigma^{1/2}.

    G is the gradient of the fidelity in sigma; a step that lowers F is halved toward the
    previous iterate, so F never decreases along a run.
    """
    d_a = tau_m.shape[0]
    sqrt_rho = sqrtm_psd(rho_m)

    def value_and_gradient(sigma: np.ndarray) -> tuple[float, np.ndarray]:
        inner = sqrt_rho @ np.kron(tau_m, sigma) @ sqrt_rho
        f = float(np.sqrt(np.clip(np.linalg.eigvalsh((inner + inner.conj().T) / 2), 0.0, None)).sum())
        middle = sqrt_rho @ power_psd(inner, -0.5) @ sqrt_rho
        weighted = np.kron(tau_m, np.eye(d_b)) @ middle
        grad = 0.5 * np.trace(weighted.reshape(d_a, d_b, d_a, d_b), axis1=0, axis2=2)
        return f, (grad + grad.conj().T) / 2

    starts = [np.eye(d_b) / d_b] + [ginibre_matrix(rng, d_b) for rng in spawn_rngs(seed, FIXED_POINT_RESTARTS - 1)]
    best = 0.0
    for sigma in starts:
        f, grad = value_and_gradient(sigma)
        for _ in range(FIXED_POINT_MAX_ITER):
            if f <= _TINY:
                break
            root = sqrtm_psd(sigma)
            candidate = (2 / f) * root @ grad @ root
            candidate = (candidate + candidate.conj().T) / 2
            candidate = candidate / np.trace(candidate).real
            f_new, grad_new = value_and_gradient(candidate)
            for _ in range(30):
                if f_new >= f:
                    break
                candidate = (sigma + candidate) / 2
                f_new, grad_new = value_and_gradient(candidate)
            converged = abs(f_new - f) <= FIXED_POINT_TOL
            sigma, f, grad = candidate, max(f, f_new), grad_new
            if converged:
                break
        best = max(best, f)
    return best


def renyi_mutual_information(
    rho_ab: OperatorLike,
    tau_a: "OperatorLike | np.ndarray | None",
    alpha: float,
    a_labels: Sequence[str] | None = None,
    method: str = "conic",
    grid_samples: int | None = None,
    seed: int | None = 0,
) -> EntropyValue:
    """
    Sandwiched Renyi mutual information min over sigma_B of D_alpha(rho_AB || tau_A (x) sigma_B).

    Orders inf and 1/2 are exact (conic programs). method="fixed_point" computes order 1/2
    by the fixed-point iteration, an upper bound. Other orders need grid_samples and give
    an upper bound from random sigma_B.

    Args:
        rho_ab: Bipartite state
        tau_a: Positive operator on A; defaults to rho_A
        alpha: Order
        a_labels: Registers forming A
        method: "conic" or "fixed_point" for order 1/2
        grid_samples: Number of random sigma_B for other orders
        seed: Seed for restarts and grid samples

    Returns:
        EntropyValue

    Raises:
        DomainError: For an unsupported order without grid_samples
    """
    if math.isinf(alpha):
        return imax(rho_ab, tau_a, a_labels)
    rho_m, tau_m, d_a, d_b = _ordered(rho_ab, tau_a, a_labels)
    if alpha == 0.5:
        if method == "fixed_point":
            f = _half_renyi_fixed_point(rho_m, tau_m, d_b, seed)
        else:
            require(method == "conic", "method in {conic, fixed_point}")
            f = _half_renyi_conic(rho_m, tau_m, d_b)
        if f <= _TINY:
            return EntropyValue.infinite()
        return EntropyValue.of(-2 * math.log2(f))
    if not grid_samples:
        error = DomainError("alpha in {1/2, inf} or grid_samples given", f"order {alpha} has no exact method")
        logger.error(str(error))
        raise error
    candidates = [as_matrix(reduce_state(rho_ab, _split(rho_ab, a_labels)[1])), np.eye(d_b) / d_b]
    candidates += [ginibre_matrix(rng, d_b) for rng in spawn_rngs(seed, grid_samples)]
    best = min(sandwiched_renyi(rho_m, np.kron(tau_m, s), alpha).bits for s in candidates)
    logger.warning(f"Order-{alpha} mutual information from {len(candidates)} samples is an upper bound only")
    return EntropyValue.of(best)
