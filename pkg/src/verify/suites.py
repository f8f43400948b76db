"""
Property suites: seeded random sweeps that check the inequalities and identities the
library relies on against independently computed values.

Each suite is registered under the property it checks, optionally with result labels
such as "lemma3" that select it from the command line, and returns a SuiteResult.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
import pandas as pd
from scipy.linalg import block_diag
from scipy.optimize import linprog

from src.constants import (
    DE_FINETTI_MC_SAMPLES,
    DE_FINETTI_MC_TOL,
    EA_CODING_BLOCK,
    IMAX_GAP_TOL,
    NP_RANDOM_TESTS,
    ORACLE_PRECISION,
    REPORT_COLUMNS,
    SDP_SUITE_TOL,
    SUITE_TOL,
    TREND_MAX_EXPONENT,
    TREND_N_STAR_LIMIT,
    VARIANCE_IDENTITY_TOL,
)
from src.errors import require
from src.expansions.moddev import (
    ExpansionInputs,
    ModerateSequence,
    ea_coding_lower_bound,
    ea_coding_parameters,
    ea_coding_terms,
    expansion_term,
    residual_curve,
)
from src.measures.distances import (
    channel_purified_distance,
    fidelity,
    purified_distance,
    tight_triangle_check,
    triangle_bound,
)
from src.measures.entropies import (
    dmax,
    dmin,
    imax,
    imax_certified,
    mutual_information,
    mutual_information_variance,
    petz_renyi,
    relative_entropy,
    relative_entropy_variance,
    renyi_mutual_information,
    varentropy,
)
from src.measures.hypotest import ClassicalIIDSpec, dh, dh_classical_iid, info_spectrum
from src.measures.smoothing import (
    dmax_smoothed_bounds,
    dmin_smoothed_bounds,
    exact_smoothing_oracle,
    imax_partially_smoothed_bounds,
)
from src.protocols.constructions import (
    ConvexSplitInstance,
    convex_split_check,
    de_finetti,
    de_finetti_bound,
    de_finetti_monte_carlo,
    identity_simulation_bound,
    identity_simulation_check,
    random_strong_converse_instance,
    strong_converse_check,
    symmetric_projector,
    symmetrization_distance_check,
    symmetrize_check,
    teleport_coding_check,
)
from src.quantum.qchannels import (
    Channel,
    apply_on,
    channel_functionals,
    depolarizing_channel,
    identity_channel,
    random_channel,
)
from src.quantum.qregisters import (
    DensityState,
    HermitianOperator,
    SubnormalizedState,
    as_matrix,
    density_state,
    make_shape,
    maximally_entangled,
    purify,
    reduce_state,
)
from src.utils.optim import OptimizerConfig
from src.utils.sampling import (
    haar_pure,
    haar_unitary,
    random_density,
    random_diagonal,
    random_probabilities,
    spawn_rngs,
)

logger = logging.getLogger(__name__)


class SuiteResult(NamedTuple):
    """Outcome of one property suite; max_violation is the largest amount by which a check failed its bound."""

    name: str
    passed: bool
    trials: int
    failures: int
    max_violation: float
    detail: str


SuiteFn = Callable[[int, int], SuiteResult]
SUITES: dict[str, SuiteFn] = {}
SUITE_LABELS: dict[str, tuple[str, ...]] = {}


def register(name: str, *labels: str) -> Callable[[SuiteFn], SuiteFn]:
    def decorator(fn: SuiteFn) -> SuiteFn:
        SUITES[name] = fn
        SUITE_LABELS[name] = labels
        return fn

    return decorator


@dataclass
class _Tally:
    """Accumulates checks of the form value <= bound within a tolerance."""

    name: str
    tol: float = SUITE_TOL
    trials: int = 0
    failures: int = 0
    max_violation: float = 0.0

    def leq(self, value: float, bound: float, tol: float | None = None) -> None:
        excess = value - bound
        if math.isnan(excess):
            excess = math.inf
        self.max_violation = max(self.max_violation, excess)
        if excess > (self.tol if tol is None else tol):
            self.failures += 1

    def close(self, value: float, expected: float, tol: float | None = None) -> None:
        self.leq(abs(value - expected), 0.0, tol)

    def holds(self, condition: bool) -> None:
        if not condition:
            self.failures += 1

    def result(self, detail: str = "") -> SuiteResult:
        return SuiteResult(self.name, self.failures == 0, self.trials, self.failures, self.max_violation, detail)


def _rng_stream(seed: int, trials: int) -> list[np.random.Generator]:
    require(trials >= 1, "trials >= 1")
    return spawn_rngs(seed, trials)


def _mixed_towards(rng: np.random.Generator, rho: DensityState, weight: float) -> DensityState:
    """(1 - weight) rho + weight omega for a random omega of the same shape."""
    omega = random_density(rng, rho.shape.dims, list(rho.shape.labels))
    return DensityState.unchecked(HermitianOperator(rho.shape, (1 - weight) * rho.matrix + weight * omega.matrix))


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------


@register("tight-triangle", "lemma3")
def tight_triangle_suite(trials: int, seed: int) -> SuiteResult:
    """P(rho, tau) <= P(rho, sigma) F(sigma, tau) + P(sigma, tau) F(rho, sigma) whenever P^2 + P^2 <= 1."""
    tally = _Tally("tight-triangle")
    applicable = 0
    for rng in _rng_stream(seed, trials):
        d = int(rng.integers(2, 4))
        rho = random_density(rng, d)
        sigma = _mixed_towards(rng, rho, rng.uniform(0.0, 0.5))
        tau = _mixed_towards(rng, sigma, rng.uniform(0.0, 0.5))
        check = tight_triangle_check(rho, sigma, tau)
        tally.trials += 1
        if check.applicable:
            applicable += 1
            tally.leq(check.lhs, check.rhs)
    return tally.result(f"{applicable} applicable triples")


@register("bound-monotonicity", "lemma15")
def bound_monotonicity_suite(trials: int, seed: int) -> SuiteResult:
    """triangle_bound is nondecreasing in each argument on eps^2 + eps'^2 <= 1."""
    tally = _Tally("bound-monotonicity")
    for rng in _rng_stream(seed, trials):
        a, b = np.sort(rng.uniform(0.0, 1.0, size=2))
        other = rng.uniform(0.0, math.sqrt(max(0.0, 1 - b**2)))
        tally.trials += 1
        tally.leq(triangle_bound(a, other), triangle_bound(b, other))
        tally.leq(triangle_bound(other, a), triangle_bound(other, b))
    return tally.result()


@register("purified-scaling", "lemma17")
def purified_scaling_suite(trials: int, seed: int) -> SuiteResult:
    """P(rho, sigma) <= P(l rho, l sigma) <= sqrt(2 l) P(rho, sigma) for Tr(l rho) = Tr(l sigma) = 1."""
    tally = _Tally("purified-scaling")
    for rng in _rng_stream(seed, trials):
        d = int(rng.integers(2, 4))
        trace = rng.uniform(0.2, 1.0)
        rho1, sigma1 = random_density(rng, d), random_density(rng, d)
        rho = SubnormalizedState.from_matrix(trace * rho1.matrix, rho1.shape)
        sigma = SubnormalizedState.from_matrix(trace * sigma1.matrix, sigma1.shape)
        scale = 1.0 / trace
        base = purified_distance(rho, sigma)
        scaled = purified_distance(rho1, sigma1)
        tally.trials += 1
        tally.leq(base, scaled)
        tally.leq(scaled, math.sqrt(2 * scale) * base)
    return tally.result()


@register("cq-fidelity", "lemma18")
def cq_fidelity_suite(trials: int, seed: int) -> SuiteResult:
    """F of uniform classical-quantum states is the average of the conditional fidelities."""
    tally = _Tally("cq-fidelity")
    for rng in _rng_stream(seed, trials):
        d, k = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        rhos = [random_density(rng, k).matrix for _ in range(d)]
        sigmas = [random_density(rng, k).matrix for _ in range(d)]
        shape = make_shape([d, k], ["X", "B"])
        rho = DensityState.unchecked(HermitianOperator(shape, block_diag(*rhos) / d))
        sigma = DensityState.unchecked(HermitianOperator(shape, block_diag(*sigmas) / d))
        expected = np.mean([fidelity(density_state(r, k), density_state(s, k)) for r, s in zip(rhos, sigmas)])
        tally.trials += 1
        tally.close(fidelity(rho, sigma), float(expected))
    return tally.result()


@register("quasi-convexity", "lemma23")
def quasi_convexity_suite(trials: int, seed: int) -> SuiteResult:
    """P of mixtures is at most the largest P of the mixed pairs."""
    tally = _Tally("quasi-convexity")
    for rng in _rng_stream(seed, trials):
        d = int(rng.integers(2, 4))
        weight = rng.uniform()
        pairs = [(random_density(rng, d), random_density(rng, d)) for _ in range(2)]
        mix_rho = weight * pairs[0][0].matrix + (1 - weight) * pairs[1][0].matrix
        mix_tau = weight * pairs[0][1].matrix + (1 - weight) * pairs[1][1].matrix
        tally.trials += 1
        tally.leq(
            purified_distance(density_state(mix_rho, d), density_state(mix_tau, d)),
            max(purified_distance(r, t) for r, t in pairs),
        )
    return tally.result()


@register("data-processing")
def data_processing_suite(trials: int, seed: int) -> SuiteResult:
    """P, D, D_max, D_min and D_h do not increase under random channels."""
    tally = _Tally("data-processing", tol=1e-7)
    for rng in _rng_stream(seed, trials):
        d_in, d_out = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        channel = random_channel(rng, d_in, d_out, kraus_rank=int(rng.integers(1, 4)) if d_out >= d_in else 3)
        rho, sigma = random_density(rng, d_in), random_density(rng, d_in)
        out_rho, out_sigma = channel.apply(rho), channel.apply(sigma)
        tally.trials += 1
        tally.leq(purified_distance(out_rho, out_sigma), purified_distance(rho, sigma))
        for measure in (relative_entropy, dmax, dmin):
            tally.leq(measure(out_rho, out_sigma).bits, measure(rho, sigma).bits)
        tally.leq(dh(out_rho, out_sigma, 0.2).bits, dh(rho, sigma, 0.2).bits)
    return tally.result()


# ---------------------------------------------------------------------------
# Entropies
# ---------------------------------------------------------------------------


@register("pure-state-variance", "lemma7")
def pure_state_variance_suite(trials: int, seed: int) -> SuiteResult:
    """For pure rho_AB, V(A:B) = 4 V(A) and V(rho_AB || I_A (x) rho_B) = V(A)."""
    tally = _Tally("pure-state-variance", tol=VARIANCE_IDENTITY_TOL)
    for rng in _rng_stream(seed, trials):
        d_a, d_b = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        rho = haar_pure(rng, [d_a, d_b], ["A", "B"]).state()
        v_a = varentropy(reduce_state(rho, ["A"])).bits
        rho_b = as_matrix(reduce_state(rho, ["B"]))
        tally.trials += 1
        tally.close(mutual_information_variance(rho, ["A"]).bits, 4 * v_a)
        tally.close(relative_entropy_variance(rho, np.kron(np.eye(d_a), rho_b)).bits, v_a)
    return tally.result()


@register("variance-bound", "lemma20")
def variance_bound_suite(trials: int, seed: int) -> SuiteResult:
    """V(rho_AB || rho_A (x) rho_B) <= 4 log^2(2 d_A + 1)."""
    tally = _Tally("variance-bound")
    for rng in _rng_stream(seed, trials):
        d_a, d_b = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        rho = random_density(rng, [d_a, d_b], ["A", "B"], rank=int(rng.integers(1, d_a * d_b + 1)))
        tally.trials += 1
        tally.leq(mutual_information_variance(rho, ["A"]).bits, 4 * math.log2(2 * d_a + 1) ** 2)
    return tally.result()


def _random_tripartite(rng: np.random.Generator) -> tuple[DensityState, DensityState, np.ndarray, np.ndarray]:
    psi = haar_pure(rng, [2, 2, 2], ["A", "B", "C"]).state()
    rho_ab, rho_ac = reduce_state(psi, ["A", "B"]), reduce_state(psi, ["A", "C"])
    return rho_ab, rho_ac, as_matrix(reduce_state(psi, ["B"])), as_matrix(reduce_state(psi, ["C"]))


@register("duality", "lemma14")
def duality_suite(trials: int, seed: int) -> SuiteResult:
    """
    Dualities on pure rho_ABC with a full-rank tau_A.

    I_inf(rho_AB || tau) = -I_1/2(rho_AC || tau^-1), the Petz pair
    D_a(rho_AB || tau (x) rho_B) = -D_{2-a}(rho_AC || tau^-1 (x) rho_C), and equality of
    the corresponding relative entropy variances.
    """
    tally = _Tally("duality", tol=SDP_SUITE_TOL)
    for rng in _rng_stream(seed, trials):
        rho_ab, rho_ac, rho_b, rho_c = _random_tripartite(rng)
        tau = random_density(rng, 2).matrix
        tau_inv = np.linalg.inv(tau)
        tally.trials += 1
        sandwiched = imax(rho_ab, tau, ["A"]).bits
        dual = renyi_mutual_information(rho_ac, tau_inv, 0.5, ["A"]).bits
        tally.close(sandwiched, -dual)
        petz = petz_renyi(rho_ab, np.kron(tau, rho_b), 1.5).bits
        petz_dual = petz_renyi(rho_ac, np.kron(tau_inv, rho_c), 0.5).bits
        tally.close(petz, -petz_dual)
        variance = relative_entropy_variance(rho_ab, np.kron(tau, rho_b)).bits
        variance_dual = relative_entropy_variance(rho_ac, np.kron(tau_inv, rho_c)).bits
        tally.close(variance, variance_dual)
    return tally.result()


@register("non-lockability", "lemma22")
def non_lockability_suite(trials: int, seed: int) -> SuiteResult:
    """I_max(A;B) <= I_max(A;BC) <= I_max(A;B) + 2 log|C|."""
    tally = _Tally("non-lockability", tol=SDP_SUITE_TOL)
    for rng in _rng_stream(seed, trials):
        d_c = int(rng.integers(2, 4))
        rho = random_density(rng, [2, 2, d_c], ["A", "B", "C"], rank=int(rng.integers(1, 5)))
        i_ab = imax(reduce_state(rho, ["A", "B"]), a_labels=["A"]).bits
        i_abc = imax(rho, a_labels=["A"]).bits
        tally.trials += 1
        tally.leq(i_ab, i_abc)
        tally.leq(i_abc, i_ab + 2 * math.log2(d_c))
    return tally.result()


# ---------------------------------------------------------------------------
# Hypothesis testing
# ---------------------------------------------------------------------------


def _lp_beta(p: np.ndarray, q: np.ndarray, eps: float) -> float:
    """min q.x subject to p.x >= 1 - eps and 0 <= x <= 1."""
    result = linprog(q, A_ub=-p[None, :], b_ub=[-(1 - eps)], bounds=(0.0, 1.0), method="highs")
    require(result.status == 0, "linear program solved", result.message)
    return float(result.fun)


def _random_feasible_test(rng: np.random.Generator, rho_m: np.ndarray, eps: float) -> np.ndarray:
    """Random 0 <= test <= I, mixed towards I until Tr(test rho) >= 1 - eps."""
    d = rho_m.shape[0]
    u = haar_unitary(rng, d)
    test = u @ np.diag(rng.uniform(size=d)) @ u.conj().T
    alpha = float(np.trace(test @ rho_m).real)
    if alpha < 1 - eps:
        s = (1 - eps - alpha) / (1 - alpha)
        test = (1 - s) * test + s * np.eye(d)
    return test


@register("neyman-pearson")
def neyman_pearson_suite(trials: int, seed: int) -> SuiteResult:
    """
    D_h agrees with the linear-programming optimum on diagonal pairs, no random feasible
    test beats it on quantum pairs, and the type-class path agrees with explicit tensors.
    """
    tally = _Tally("neyman-pearson")
    for rng in _rng_stream(seed, trials):
        tally.trials += 1
        eps = rng.uniform(0.0, 0.95)
        d = int(rng.integers(2, 17))
        p, q = random_probabilities(rng, d), random_probabilities(rng, d)
        beta = 2.0 ** -dh(np.diag(p), np.diag(q), eps).bits
        tally.close(beta, _lp_beta(p, q, eps))

        dq = int(rng.integers(2, 5))
        rho, sigma = random_density(rng, dq).matrix, random_density(rng, dq).matrix
        optimum = 2.0 ** -dh(rho, sigma, eps).bits
        best_random = min(
            float(np.trace(_random_feasible_test(rng, rho, eps) @ sigma).real) for _ in range(NP_RANDOM_TESTS)
        )
        tally.leq(optimum, best_random)

        n = int(rng.integers(1, 9))
        p2, q2 = random_probabilities(rng, 2), random_probabilities(rng, 2)
        p_n, q_n = p2, q2
        for _ in range(n - 1):
            p_n, q_n = np.kron(p_n, p2), np.kron(q_n, q2)
        explicit = dh(np.diag(p_n), np.diag(q_n), eps).bits
        fast = dh_classical_iid(ClassicalIIDSpec(p2, q2, n), eps).bits
        tally.close(fast, explicit, 1e-8)
    return tally.result()


@register("info-spectrum", "lemma21")
def info_spectrum_suite(trials: int, seed: int) -> SuiteResult:
    """D_h^{eps/2} + log(eps/2) <= D_s^eps, and D_s^eps(rho || rho) = log eps."""
    tally = _Tally("info-spectrum", tol=1e-8)
    for rng in _rng_stream(seed, trials):
        d = int(rng.integers(2, 5))
        eps = rng.uniform(0.05, 0.95)
        rho, sigma = random_density(rng, d), random_density(rng, d)
        tally.trials += 1
        tally.leq(dh(rho, sigma, eps / 2).bits + math.log2(eps / 2), info_spectrum(rho, sigma, eps).bits)
        tally.close(info_spectrum(rho, rho, eps).bits, math.log2(eps))
    return tally.result()


# ---------------------------------------------------------------------------
# Smoothing
# ---------------------------------------------------------------------------


@register("smoothing-sandwich", "lemma4", "lemma5", "lemma19")
def smoothing_sandwich_suite(trials: int, seed: int) -> SuiteResult:
    """
    Exact diagonal smoothing against the certified intervals, plus the D_min/D_max
    conversion and the fixed-marginal conversion at oracle values.
    """
    tally = _Tally("smoothing-sandwich", tol=ORACLE_PRECISION)
    for rng in _rng_stream(seed, trials):
        d = int(rng.integers(2, 4))
        rho, sigma = random_diagonal(rng, d), random_diagonal(rng, d)
        eps = rng.uniform(0.05, 0.6)
        tally.trials += 1

        oracle_max = exact_smoothing_oracle("dmax", rho, sigma, eps)
        interval = dmax_smoothed_bounds(rho, sigma, eps)
        tally.holds(not interval.clamped)
        tally.leq(interval.lower, oracle_max)
        tally.leq(oracle_max, interval.upper)

        oracle_min = exact_smoothing_oracle("dmin", rho, sigma, eps)
        interval = dmin_smoothed_bounds(rho, sigma, eps)
        tally.holds(not interval.clamped)
        tally.leq(interval.lower, oracle_min)
        tally.leq(oracle_min, interval.upper)

        eps_prime = rng.uniform(0.05, math.sqrt(1 - eps**2) * 0.95)
        c = triangle_bound(eps, eps_prime)
        tally.leq(oracle_min, exact_smoothing_oracle("dmax", rho, sigma, eps_prime) - math.log2(1 - c**2))

        joint = random_diagonal(rng, [2, 2], ["A", "B"])
        radius, slack = 0.1, 0.05
        partial = exact_smoothing_oracle("imax_partial", joint, eps=2 * radius + slack, r_labels=["A"])
        free = exact_smoothing_oracle("imax", joint, eps=radius, r_labels=["A"])
        tally.leq(partial, free + math.log2((8 + slack**2) / slack**2))
    return tally.result()


@register("max-information-anchor", "prop6")
def max_information_anchor_suite(trials: int, seed: int) -> SuiteResult:
    """Near-zero smoothing brackets the exact max-information; the Bell state carries 2 bits."""
    tally = _Tally("max-information-anchor", tol=SDP_SUITE_TOL)
    bell = imax(maximally_entangled(2).state(), a_labels=["A"]).bits
    tally.close(bell, 2.0)
    for rng in _rng_stream(seed, trials):
        rho = random_density(rng, [2, 2], ["B", "R"])
        certificate = imax_certified(rho, a_labels=["R"])
        interval = imax_partially_smoothed_bounds(rho, 1, 1e-3, r_labels=["R"])
        tally.trials += 1
        tally.holds(not interval.clamped)
        tally.leq(certificate.relative_gap, IMAX_GAP_TOL, 0.0)
        tally.leq(interval.lower, certificate.value.bits)
        tally.leq(certificate.value.bits, interval.upper)
    return tally.result(f"Bell state I_max = {bell:.8f}")


# ---------------------------------------------------------------------------
# Expansions
# ---------------------------------------------------------------------------


@register("moderate-deviation-trend")
def moderate_deviation_trend_suite(trials: int, seed: int) -> SuiteResult:
    """
    Low-error D_h of (3/4, 1/4) against the uniform bit settles within the slack by 2^10
    and its residual per a_n shrinks over the last five dyadic points.

    The sweep is deterministic; trials and seed are not used.
    """
    tally = _Tally("moderate-deviation-trend")
    n_values = [2**k for k in range(4, TREND_MAX_EXPONENT + 1)]
    curve = residual_curve("dh_low", (np.array([0.75, 0.25]), np.array([0.5, 0.5])), ModerateSequence(1 / 3), n_values)
    tally.trials = 1
    tally.holds(curve.n_star is not None and curve.n_star <= TREND_N_STAR_LIMIT)
    tail = np.abs(curve.frame["residual_over_an"].to_numpy()[-5:])
    tally.holds(bool(np.all(np.diff(tail) < 0)))
    return tally.result(f"n_star = {curve.n_star}, slack = {curve.slack:.6f}")


@register("channel-functionals")
def channel_functionals_suite(trials: int, seed: int) -> SuiteResult:
    """Capacity-like values of the identity, the fully depolarizing and the half-depolarizing qubit channels."""
    tally = _Tally("channel-functionals", tol=SDP_SUITE_TOL)
    opt = OptimizerConfig(starts=max(2, min(trials, 16)), seed=seed, method="L-BFGS-B")
    tally.trials = 1

    identity = channel_functionals(identity_channel(2), opt)
    tally.close(identity.capacity_like, 1.0)
    tally.leq(identity.vmax, 0.0, 1e-8)

    full = depolarizing_channel(2, 4 / 3)
    tally.leq(channel_functionals(full, opt).capacity_like, 0.0, 1e-8)

    half = depolarizing_channel(2, 0.5)
    closed_form = mutual_information(half.choi(), list(half.out_shape.labels)).bits / 2
    tally.close(channel_functionals(half, opt).capacity_like, closed_form)

    distance = channel_purified_distance(identity_channel(2), depolarizing_channel(2, 1.0), opt)
    tally.leq(math.sqrt(3) / 2, distance.lower)
    return tally.result(f"C(id) = {identity.capacity_like:.8f}, P(id, depolarizing) >= {distance.lower:.8f}")


@register("expansion-identities", "thm6", "thm9", "prop11")
def expansion_identities_suite(trials: int, seed: int) -> SuiteResult:
    """
    Coding coefficient is the simulation coefficient over sqrt 2; for pure rho_BR the
    state-splitting term equals the low-error source term of rho_B. The one-shot
    entanglement-assisted coding bound at n = 3 matches its closed form on the identity
    channel and stays below (n I(B:R) + 1)/(1 - error) - f - log gamma on random channels.
    """
    tally = _Tally("expansion-identities", tol=VARIANCE_IDENTITY_TOL)
    q34 = density_state(np.diag([0.75, 0.25]), 2, "B")
    pure_states = [purify(q34, "R").state()]
    rngs = _rng_stream(seed, trials)
    pure_states += [haar_pure(rng, [int(rng.integers(2, 4)), 2], ["B", "R"]).state() for rng in rngs]
    for rng, rho_br in zip([None] + rngs, pure_states):
        tally.trials += 1
        splitting = expansion_term("state_splitting", ExpansionInputs.from_state(rho_br, ["R"]))
        source = expansion_term("source_low", ExpansionInputs.from_state(reduce_state(rho_br, ["B"])))
        tally.close(splitting.leading, source.leading)
        tally.close(splitting.second_coeff, source.second_coeff)
        if rng is not None:
            inputs = ExpansionInputs(capacity=rng.uniform(0, 2), vmax=rng.uniform(0.01, 4))
            coding = expansion_term("channel_coding", inputs).second_coeff
            ratio = coding / expansion_term("channel_sim", inputs).second_coeff
            tally.close(ratio, 1 / math.sqrt(2), 1e-12)

    n, phi = EA_CODING_BLOCK, maximally_entangled(2)
    params = ea_coding_parameters(ModerateSequence(1 / 3), n, 2)
    terms = ea_coding_terms(n, params.mu, 2, params.eps, params.delta)
    error = params.eps - 2 * params.delta - terms.g
    offset = terms.f + terms.log_gamma
    tally.close(terms.g, params.delta, 1e-12)
    exact = 2 * n - math.log2(1 - error) - offset
    value = ea_coding_lower_bound(identity_channel(2), phi, n, params.eps, params.delta, params.mu)
    tally.close(value, exact, SDP_SUITE_TOL)
    for rng in rngs:
        channel = random_channel(rng, 2, 2)
        info = mutual_information(apply_on(channel, phi.state(), ["A"]), ["B"]).bits
        value = ea_coding_lower_bound(channel, phi, n, params.eps, params.delta, params.mu)
        tally.leq(value, (n * info + 1) / (1 - error) - offset)
    return tally.result(f"coding error {error:.4f} at n = {n}")


# ---------------------------------------------------------------------------
# Protocols
# ---------------------------------------------------------------------------


@register("convex-split", "lemma13")
def convex_split_suite(trials: int, seed: int) -> SuiteResult:
    """Convex-split fidelity >= sqrt(1 - delta) whenever log n >= D_max + log 1/delta."""
    tally = _Tally("convex-split")
    satisfied = 0
    for rng in _rng_stream(seed, trials):
        omega = random_density(rng, [2, 2], ["B", "R"])
        product = np.kron(as_matrix(reduce_state(omega, ["B"])), as_matrix(reduce_state(omega, ["R"])))
        weight = rng.uniform(0.0, 0.3)
        rho = density_state((1 - weight) * product + weight * omega.matrix, [2, 2], ["B", "R"])
        n = int(rng.choice([2, 4, 8]))
        instance = ConvexSplitInstance(rho, reduce_state(rho, ["B"]), n, float(rng.uniform(0.3, 1.0)))
        check = convex_split_check(instance)
        tally.trials += 1
        if check.hypothesis_holds:
            satisfied += 1
            tally.leq(check.bound, check.fidelity)
    return tally.result(f"{satisfied} instances met the block-count hypothesis")


@register("de-finetti", "prop19")
def de_finetti_suite(trials: int, seed: int) -> SuiteResult:
    """g_{2,2} = 10, zeta_{2,2} = P_sym/3 and the Haar average of pure powers reproduces zeta."""
    tally = _Tally("de-finetti")
    objects = de_finetti(2, 2)
    tally.trials = 1
    tally.holds(objects.g == 10 and objects.g <= de_finetti_bound(2, 2))
    tally.close(float(np.abs(objects.zeta.matrix - symmetric_projector(2, 2) / 3).max()), 0.0)
    distance = de_finetti_monte_carlo(2, 2, DE_FINETTI_MC_SAMPLES, seed)
    tally.leq(distance, DE_FINETTI_MC_TOL, 0.0)
    return tally.result(f"Monte-Carlo trace distance {distance:.4f}")


def _two_register_channel(rng: np.random.Generator) -> Channel:
    base = random_channel(rng, 4, 4, kraus_rank=2)
    return Channel(base.kraus, make_shape([2, 2], "A"), make_shape([2, 2], "B"), "random two-register")


@register("symmetrization", "lemma2")
def symmetrization_suite(trials: int, seed: int) -> SuiteResult:
    """Twirled channels are permutation covariant and never move further from a covariant target."""
    tally = _Tally("symmetrization", tol=1e-9)
    identity = Channel((np.eye(4),), make_shape([2, 2], "A"), make_shape([2, 2], "B"), "identity")
    for rng in _rng_stream(seed, trials):
        channel = _two_register_channel(rng)
        check = symmetrize_check(channel)
        single = random_density(rng, 2).matrix
        rho = density_state(np.kron(single, single), [2, 2], "A")
        symmetric, original = symmetrization_distance_check(channel, identity, rho)
        tally.trials += 1
        tally.leq(check.symmetrized_residual, 0.0)
        tally.leq(symmetric, original)
    return tally.result()


@register("teleportation", "lemma10", "lemma11")
def teleportation_suite(trials: int, seed: int) -> SuiteResult:
    """
    Error branch within sqrt(1 - p); a coding channel composed with its simulation stays within
    the identity-simulation bound of the identity; that bound is below one with its first-order slope.
    """
    tally = _Tally("teleportation")
    opt = OptimizerConfig(starts=4, seed=seed, method="L-BFGS-B")
    for rng in _rng_stream(seed, trials):
        p = rng.uniform(0.5, 1.0)
        d = int(rng.integers(2, 4))
        worst = teleport_coding_check(p, d, samples=4, seed=int(rng.integers(2**31)))
        eps = rng.uniform(1e-4, 0.2)
        bound = identity_simulation_bound(eps)
        tally.trials += 1
        tally.leq(worst, math.sqrt(1 - p))
        tally.leq(bound, 1.0 - 1e-15)
        tally.leq(bound, 1 - (1.5 - math.sqrt(2)) * eps + eps**2)

        noise, simulation_noise = random_channel(rng, 2, 2), random_channel(rng, 2, 2)
        composed = identity_simulation_check(rng.uniform(0.05, 0.9), noise, simulation_noise, opt)
        tally.leq(composed.coding_distance, 1 - composed.eps, SDP_SUITE_TOL)
        tally.leq(composed.composed_distance, composed.bound, SDP_SUITE_TOL)
    return tally.result()


@register("strong-converse", "lemma24")
def strong_converse_suite(trials: int, seed: int) -> SuiteResult:
    """Codes above log d on the noiseless channel succeed with probability at most 2^{-n(r - log d)}."""
    tally = _Tally("strong-converse")
    for rng in _rng_stream(seed, trials):
        n = int(rng.integers(1, 3))
        r = float(rng.choice([1.5, 2.0])) if n == 2 else 2.0
        states, povm = random_strong_converse_instance(rng, 2, n, r)
        check = strong_converse_check(states, povm, r, 2, n)
        tally.trials += 1
        tally.leq(check.p_succ, check.bound)
    return tally.result()


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def suite_names() -> list[str]:
    return list(SUITES)


def label_names() -> list[str]:
    return [label for labels in SUITE_LABELS.values() for label in labels]


def resolve_suites(names: Sequence[str] | str) -> list[str]:
    """
    Map suite names, result labels and "all" onto registered suites in registry order.

    Raises:
        DomainError: If a name is neither a suite nor a label
    """
    selected = [names] if isinstance(names, str) else list(names)
    if "all" in selected:
        return suite_names()
    unknown = [name for name in selected if name not in SUITES and name not in label_names()]
    require(not unknown, "known suite", f"unknown suites {unknown}; choose from {suite_names() + label_names()}")
    wanted = {name for name in SUITES if name in selected or set(SUITE_LABELS[name]) & set(selected)}
    return [name for name in suite_names() if name in wanted]


def run_suite(name: str, trials: int, seed: int) -> SuiteResult:
    """
    Run one registered suite.

    Raises:
        DomainError: If the suite name is unknown
    """
    require(name in SUITES, f"suite in {suite_names()}", f"unknown suite {name!r}")
    logger.info(f"Running suite {name} with {trials} trials, seed {seed}")
    result = SUITES[name](trials, seed)
    level = logging.INFO if result.passed else logging.WARNING
    logger.log(level, f"Suite {name}: {'passed' if result.passed else 'FAILED'} ({result.failures} failures)")
    return result


def run_suites(names: Sequence[str] | str, trials: int, seed: int) -> list[SuiteResult]:
    """Run the named suites or labelled suites in registry order; "all" selects every suite."""
    return [run_suite(name, trials, seed) for name in resolve_suites(names)]


def report_frame(results: Sequence[SuiteResult]) -> pd.DataFrame:
    """One report row per suite, with the result labels it covers."""
    rows = [{**r._asdict(), "labels": ",".join(SUITE_LABELS.get(r.name, ()))} for r in results]
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)
