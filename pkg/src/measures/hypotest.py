"""
Hypothesis-testing relative entropy through the quantum Neyman-Pearson structure.

Commuting pairs are solved exactly as a fractional knapsack over the joint eigenbasis;
non-commuting pairs bisect the threshold of rho - t sigma. A type-class path handles
i.i.d. classical pairs at large block length.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from src.constants import (
    COMMUTE_TOL,
    DH_BISECTION_STEPS,
    DH_DIM_CUTOFF,
    DH_TYPE_CLASS_MAX_ALPHABET,
    DH_TYPE_CLASS_MAX_COMPOSITIONS,
    DH_TYPE_CLASS_MAX_N,
    TRACE_TOL,
)
from src.errors import NumericalError, require
from src.measures.values import EntropyValue
from src.quantum.qregisters import OperatorLike, as_matrix, hermitian_eigh, kernel_cutoff, support_projector

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


class NPCurvePoint(NamedTuple):
    """Projective test {rho - t sigma > 0} evaluated on both hypotheses."""

    t: float
    alpha: float
    beta: float
    boundary_dim: int


class HypothesisTest(NamedTuple):
    """Optimal test operator with its type-I success alpha and type-II error beta."""

    test: np.ndarray
    alpha: float
    beta: float
    threshold: float


@dataclass(frozen=True, eq=False)
class ClassicalIIDSpec:
    """Single-copy spectra p, q of commuting states, repeated n times."""

    p: np.ndarray
    q: np.ndarray
    n: int

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        require(p.shape == q.shape and p.ndim == 1, "p and q of equal length")
        require(bool(np.all(p >= 0) and np.all(q >= 0)), "non-negative probabilities")
        require(abs(p.sum() - 1) <= 1e-12 and abs(q.sum() - 1) <= 1e-12, "probabilities sum to one")
        require(self.n >= 1, "n >= 1")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)


def _check_eps(eps: float) -> None:
    require(0.0 <= eps < 1.0, "eps in [0, 1)", f"eps = {eps}")


def commute(rho_m: np.ndarray, sigma_m: np.ndarray) -> bool:
    scale = max(np.linalg.norm(rho_m) * np.linalg.norm(sigma_m), _TINY)
    return bool(np.linalg.norm(rho_m @ sigma_m - sigma_m @ rho_m) <= COMMUTE_TOL * scale)


def joint_eigenbasis(rho_m: np.ndarray, sigma_m: np.ndarray) -> np.ndarray:
    """Unitary diagonalizing a commuting pair: sigma eigenbasis refined blockwise by rho."""
    if np.count_nonzero(rho_m - np.diag(np.diag(rho_m))) == 0 and np.count_nonzero(
        sigma_m - np.diag(np.diag(sigma_m))
    ) == 0:
        return np.eye(rho_m.shape[0])
    s, v = hermitian_eigh(sigma_m)
    tol = 1e-12 * max(float(np.abs(s).max()), _TINY)
    breaks = np.flatnonzero(np.diff(s) > tol) + 1
    basis = np.empty_like(v)
    for block in np.split(np.arange(len(s)), breaks):
        vb = v[:, block]
        _, w = hermitian_eigh(vb.conj().T @ rho_m @ vb)
        basis[:, block] = vb @ w
    return basis


def _fill(order: np.ndarray, weight: np.ndarray, target: float) -> np.ndarray:
    """
    Take items in order until their rho weight reaches target; the crossing item is taken fractionally.

    Items with negligible rho weight are skipped. The running sum is compensated.
    """
    floor = 1e-14 * max(float(weight.max(initial=0.0)), _TINY)
    target = min(target, math.fsum(weight[weight > floor]))
    x = np.zeros(len(weight))
    filled, compensation = 0.0, 0.0
    for i in order:
        need = target - filled
        if need <= 1e-15 * target:
            break
        if weight[i] <= floor:
            continue
        if weight[i] > need:
            x[i] = need / weight[i]
            break
        x[i] = 1.0
        y = weight[i] - compensation
        total = filled + y
        compensation = (total - filled) - y
        filled = total
    return x


def _knapsack(p: np.ndarray, q: np.ndarray, target: float) -> tuple[np.ndarray, float, float]:
    """
    Fractional Neyman-Pearson fill: minimize q.x subject to p.x >= target, 0 <= x <= 1.

    Returns:
        Test weights, beta and the likelihood-ratio threshold at the crossing
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q > 0, p / np.where(q > 0, q, 1.0), np.where(p > 0, np.inf, 0.0))
    order = np.argsort(-ratio, kind="stable")
    x = _fill(order, p, target)
    taken = np.flatnonzero(x)
    threshold = float(ratio[taken].min()) if taken.size else 0.0
    return x, math.fsum(x * q), threshold


def _classical_test(rho_m: np.ndarray, sigma_m: np.ndarray, eps: float) -> HypothesisTest:
    u = joint_eigenbasis(rho_m, sigma_m)
    p = np.clip(np.real(np.einsum("ij,jk,ki->i", u.conj().T, rho_m, u)), 0.0, None)
    q = np.clip(np.real(np.einsum("ij,jk,ki->i", u.conj().T, sigma_m, u)), 0.0, None)
    x, beta, threshold = _knapsack(p, q, 1.0 - eps)
    test = (u * x[None, :]) @ u.conj().T
    return HypothesisTest(test, float(p @ x), beta, threshold)


def _positive_weight(rho_m: np.ndarray, sigma_m: np.ndarray, t: float) -> float:
    evals, vecs = hermitian_eigh(rho_m - t * sigma_m)
    kept = vecs[:, evals > kernel_cutoff(evals)]
    return float(np.real(np.einsum("ij,jk,ki->", kept.conj().T, rho_m, kept)))


def _quantum_test(rho_m: np.ndarray, sigma_m: np.ndarray, eps: float) -> HypothesisTest:
    target = 1.0 - eps
    lo, hi = 0.0, 1.0
    while _positive_weight(rho_m, sigma_m, hi) >= target:
        lo, hi = hi, 2 * hi
        require(hi < 1e300, "finite Neyman-Pearson threshold")
    for _ in range(DH_BISECTION_STEPS):
        mid = (lo + hi) / 2
        if mid in (lo, hi):
            break
        if _positive_weight(rho_m, sigma_m, mid) >= target:
            lo = mid
        else:
            hi = mid

    evals, vecs = hermitian_eigh(rho_m - lo * sigma_m)
    rho_w = np.real(np.einsum("ji,jk,ki->i", vecs.conj(), rho_m, vecs))
    sigma_w = np.real(np.einsum("ji,jk,ki->i", vecs.conj(), sigma_m, vecs))
    tol = kernel_cutoff(evals)
    # descending eigenvalue; near-zero eigenvalues share one key and fill by ascending sigma weight
    key = np.where(np.abs(evals) <= tol, 0.0, evals)
    order = np.lexsort((sigma_w, -key))
    weights = _fill(order, rho_w, target)
    test = (vecs * weights[None, :]) @ vecs.conj().T
    alpha = float(np.trace(test @ rho_m).real)
    beta = float(np.trace(test @ sigma_m).real)
    return HypothesisTest(test, alpha, beta, lo)


def dh_test(rho: OperatorLike, sigma: "OperatorLike | np.ndarray", eps: float) -> HypothesisTest:
    """
    Optimal test for D_h^eps: minimize Tr(test sigma) subject to Tr(test rho) >= 1 - eps.

    Args:
        rho: State (normalized or with trace at least 1 - eps)
        sigma: Positive operator
        eps: Type-I error in [0, 1)

    Returns:
        HypothesisTest with Tr(test rho) = 1 - eps

    Raises:
        DomainError: If eps is outside [0, 1) or the dimension exceeds the cutoff
    """
    _check_eps(eps)
    rho_m, sigma_m = as_matrix(rho), as_matrix(sigma)
    require(rho_m.shape == sigma_m.shape, "same shape")
    require(rho_m.shape[0] <= DH_DIM_CUTOFF, f"dimension <= {DH_DIM_CUTOFF}")
    require(np.trace(rho_m).real >= 1 - eps - TRACE_TOL, "Tr rho >= 1 - eps")
    if commute(rho_m, sigma_m):
        return _classical_test(rho_m, sigma_m, eps)
    kernel = np.eye(sigma_m.shape[0]) - support_projector(sigma_m)
    free = float(np.trace(kernel @ rho_m).real)
    if free >= 1 - eps:
        test = kernel * min(1.0, (1 - eps) / max(free, _TINY))
        return HypothesisTest(test, 1 - eps, 0.0, math.inf)
    return _quantum_test(rho_m, sigma_m, eps)


def dh(rho: OperatorLike, sigma: "OperatorLike | np.ndarray", eps: float) -> EntropyValue:
    """D_h^eps(rho||sigma) = -log of the optimal type-II error."""
    beta = dh_test(rho, sigma, eps).beta
    if beta <= _TINY:
        return EntropyValue.infinite()
    return EntropyValue.of(-math.log2(beta))


def np_curve(rho: OperatorLike, sigma: "OperatorLike | np.ndarray", thresholds: Sequence[float]) -> list[NPCurvePoint]:
    """Sample the trade-off traced by the projective tests {rho - t sigma > 0}."""
    rho_m, sigma_m = as_matrix(rho), as_matrix(sigma)
    points = []
    for t in sorted(float(t) for t in thresholds):
        require(t >= 0, "t >= 0")
        evals, vecs = hermitian_eigh(rho_m - t * sigma_m)
        tol = kernel_cutoff(evals)
        kept = vecs[:, evals > tol]
        projector = kept @ kept.conj().T
        points.append(
            NPCurvePoint(
                t,
                float(np.trace(projector @ rho_m).real),
                float(np.trace(projector @ sigma_m).real),
                int(np.count_nonzero(np.abs(evals) <= tol)),
            )
        )
    return points


# ---------------------------------------------------------------------------
# Type classes
# ---------------------------------------------------------------------------


def compositions(n: int, k: int) -> np.ndarray:
    """All k-part compositions of n as rows, in lexicographic order."""
    if k == 1:
        return np.array([[n]], dtype=np.int64)
    blocks = []
    for first in range(n + 1):
        rest = compositions(n - first, k - 1)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def _class_logs(counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Natural-log probability of one sequence of each type; -inf where a zero symbol occurs."""
    with np.errstate(divide="ignore"):
        logp = np.log(probs)
    terms = np.where(counts > 0, counts * np.where(np.isfinite(logp), logp, 0.0), 0.0)
    impossible = np.any((counts > 0) & ~np.isfinite(logp)[None, :], axis=1)
    return np.where(impossible, -np.inf, terms.sum(axis=1))


def dh_classical_iid(spec: ClassicalIIDSpec, eps: float) -> EntropyValue:
    """
    D_h^eps(p^n || q^n) aggregated over type classes.

    Classes are sorted by log-likelihood ratio (ties by lexicographic composition); the
    type-I mass is accumulated with exact float summation and the type-II mass in logs.

    Args:
        spec: Single-copy spectra and block length
        eps: Type-I error in [0, 1)

    Returns:
        EntropyValue identical to dh on the explicit tensor power

    Raises:
        DomainError: If n, alphabet or composition count exceed their limits
        NumericalError: If the accumulated type-I mass drifts from one
    """
    _check_eps(eps)
    n, k = spec.n, spec.p.size
    require(n <= DH_TYPE_CLASS_MAX_N, f"n <= {DH_TYPE_CLASS_MAX_N}")
    require(k <= DH_TYPE_CLASS_MAX_ALPHABET, f"alphabet <= {DH_TYPE_CLASS_MAX_ALPHABET}")
    count = math.comb(n + k - 1, k - 1)
    require(count <= DH_TYPE_CLASS_MAX_COMPOSITIONS, f"compositions <= {DH_TYPE_CLASS_MAX_COMPOSITIONS}")

    comps = compositions(n, k)
    log_mult = gammaln(n + 1) - gammaln(comps + 1).sum(axis=1)
    log_p = _class_logs(comps, spec.p)
    log_q = _class_logs(comps, spec.q)
    with np.errstate(invalid="ignore"):
        llr = np.where(np.isneginf(log_p), -np.inf, log_p - log_q)
    keys = [comps[:, j] for j in range(k - 1, -1, -1)] + [-llr]
    order = np.lexsort(keys)

    mass_p = np.exp(log_mult + log_p)[order]
    log_mass_q = (log_mult + log_q)[order]
    if not np.all(np.isfinite(mass_p)):
        msg = "type-class accumulation overflowed"
        logger.error(msg)
        raise NumericalError(msg)
    total = math.fsum(mass_p)
    if abs(total - 1.0) > 1e-9:
        msg = f"type-class probabilities sum to {total!r}, not one"
        logger.error(msg)
        raise NumericalError(msg)

    target = min(1.0 - eps, total)
    cumulative = np.cumsum(mass_p)
    idx = int(min(np.searchsorted(cumulative, target, side="left"), len(mass_p) - 1))
    before = math.fsum(mass_p[:idx])
    while idx > 0 and before >= target:
        idx -= 1
        before = math.fsum(mass_p[:idx])
    while idx < len(mass_p) - 1 and before + mass_p[idx] < target:
        before = math.fsum(mass_p[: idx + 1])
        idx += 1
    fraction = min(1.0, (target - before) / mass_p[idx]) if mass_p[idx] > 0 else 0.0

    head = log_mass_q[:idx]
    log_beta = logsumexp(head) if idx > 0 else -np.inf
    if fraction > 0:
        log_beta = np.logaddexp(log_beta, math.log(fraction) + log_mass_q[idx])
    if not np.isfinite(log_beta):
        return EntropyValue.infinite()
    return EntropyValue.of(float(-log_beta / math.log(2)))


# ---------------------------------------------------------------------------
# Information spectrum
# ---------------------------------------------------------------------------


def _positive_part_trace(rho_m: np.ndarray, sigma_m: np.ndarray, t: float) -> float:
    evals = np.linalg.eigvalsh(rho_m - t * sigma_m)
    return float(evals[evals > 0].sum())


def info_spectrum(rho: OperatorLike, sigma: "OperatorLike | np.ndarray", eps: float) -> EntropyValue:
    """
    Information-spectrum divergence sup{gamma : Tr(rho - 2^gamma sigma)_+ >= 1 - eps}.

    Commuting pairs use the exact piecewise-linear solution
    max_k (P_k - (1 - eps)) / Q_k over likelihood-ratio prefixes.

    Raises:
        DomainError: If eps is outside (0, 1)
        NumericalError: If the positive-part trace is found increasing in the threshold
    """
    require(0.0 < eps < 1.0, "eps in (0, 1)", f"eps = {eps}")
    rho_m, sigma_m = as_matrix(rho), as_matrix(sigma)
    target = 1.0 - eps
    kernel = np.eye(sigma_m.shape[0]) - support_projector(sigma_m)
    if float(np.trace(kernel @ rho_m).real) >= target:
        return EntropyValue.infinite()

    if commute(rho_m, sigma_m):
        u = joint_eigenbasis(rho_m, sigma_m)
        p = np.clip(np.real(np.einsum("ij,jk,ki->i", u.conj().T, rho_m, u)), 0.0, None)
        q = np.clip(np.real(np.einsum("ij,jk,ki->i", u.conj().T, sigma_m, u)), 0.0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(q > 0, p / np.where(q > 0, q, 1.0), np.inf)
        order = np.argsort(-ratio, kind="stable")
        prefix_p = np.cumsum(p[order])
        prefix_q = np.cumsum(q[order])
        valid = prefix_q > 0
        t_star = float(((prefix_p[valid] - target) / prefix_q[valid]).max())
    else:
        lo = max(0.0, (np.trace(rho_m).real - target) / np.trace(sigma_m).real)
        hi = max(2 * lo, 1.0)
        while _positive_part_trace(rho_m, sigma_m, hi) >= target:
            lo, hi = hi, 2 * hi
        for _ in range(DH_BISECTION_STEPS):
            mid = (lo + hi) / 2
            if mid in (lo, hi):
                break
            if _positive_part_trace(rho_m, sigma_m, mid) >= target:
                lo = mid
            else:
                hi = mid
        if _positive_part_trace(rho_m, sigma_m, hi) > _positive_part_trace(rho_m, sigma_m, lo) + 1e-9:
            msg = "positive-part trace increased with the threshold"
            logger.error(msg)
            raise NumericalError(msg)
        t_star = lo
    if t_star <= 0:
        return EntropyValue.infinite(-1)
    return EntropyValue.of(math.log2(t_star))


def info_spectrum_entropy(rho: OperatorLike, eps: float) -> EntropyValue:
    """Information-spectrum entropy -D_s^eps(rho || I)."""
    rho_m = as_matrix(rho)
    value = info_spectrum(rho_m, np.eye(rho_m.shape[0]), eps)
    return EntropyValue(-value.bits, value.finite)
