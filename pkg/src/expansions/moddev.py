"""
Moderate sequences and moderate-deviation expansions of one-shot rates and costs.

Errors follow eps_n = exp(-n a_n^2) with the natural exponential; rates stay in bits.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import norm

from src.constants import RESIDUAL_CSV_COLUMNS, RESIDUAL_SLACK_FRACTION
from src.errors import require
from src.measures.entropies import (
    marginal_product,
    mutual_information,
    mutual_information_variance,
    relative_entropy,
    relative_entropy_variance,
    varentropy,
    von_neumann,
)
from src.measures.hypotest import ClassicalIIDSpec, dh, dh_classical_iid
from src.measures.smoothing import imax_partially_smoothed_bounds
from src.quantum.qchannels import Channel, ChannelFunctionals, apply_on
from src.quantum.qregisters import DensityState, OperatorLike, PureVector, as_operator, tensor_power
from src.utils.optim import resolve_workers

logger = logging.getLogger(__name__)

TASKS = (
    "state_splitting",
    "source_low",
    "source_high",
    "channel_sim",
    "channel_coding",
    "dh_low",
    "dh_high",
    "imax_partial",
)
RESIDUAL_TASKS = ("dh_low", "dh_high", "imax_partial")


@dataclass(frozen=True)
class ModerateSequence:
    """
    a_n = scale * n^{-alpha} * (ln n)^beta, or a tabulated sequence.

    Args:
        alpha: Polynomial decay exponent
        beta: Exponent of the logarithmic factor
        scale: Positive prefactor
        table: Optional (n, a_n) pairs; when given the power family is ignored
    """

    alpha: float = 1 / 3
    beta: float = 0.0
    scale: float = 1.0
    table: tuple[tuple[int, float], ...] | None = field(default=None)

    def __post_init__(self) -> None:
        require(self.scale > 0, "scale > 0")
        if self.table is not None:
            require(len(self.table) >= 4, "at least four tabulated points")
            object.__setattr__(self, "table", tuple(sorted((int(n), float(a)) for n, a in self.table)))

    @property
    def family(self) -> str:
        return "table" if self.table is not None else "power"

    def a(self, n: int) -> float:
        require(n >= 1, "n >= 1")
        if self.table is not None:
            values = dict(self.table)
            require(n in values, "n tabulated", f"n = {n} is not in the table")
            return values[n]
        return self.scale * n ** (-self.alpha) * math.log(n) ** self.beta if self.beta else self.scale * n ** (-self.alpha)

    def eps(self, n: int) -> float:
        """eps_n = exp(-n a_n^2)."""
        return math.exp(-n * self.a(n) ** 2)


class Classification(NamedTuple):
    moderate: bool
    strict: bool
    heuristic: bool


def _tail_increasing(values: np.ndarray) -> bool:
    tail = values[len(values) // 2 :]
    return bool(np.all(np.diff(tail) > 0))


def classify(seq: ModerateSequence) -> Classification:
    """
    Decide whether a_n -> 0 and n a_n^2 -> infinity, and the strict variant n a_n^2 / ln n -> infinity.

    The power family is classified exactly from its exponents. Tables use a tail test
    on the second half of the points and are flagged as heuristic.
    """
    if seq.table is None:
        growth = 1 - 2 * seq.alpha
        vanishing = seq.alpha > 0 or (seq.alpha == 0 and seq.beta < 0)
        diverging = growth > 0 or (growth == 0 and seq.beta > 0)
        strict_diverging = growth > 0 or (growth == 0 and 2 * seq.beta > 1)
        moderate = vanishing and diverging
        return Classification(moderate, moderate and strict_diverging, False)

    n = np.array([p[0] for p in seq.table], dtype=float)
    a = np.array([p[1] for p in seq.table])
    vanishing = _tail_increasing(-a) and a[-1] < a[0]
    diverging = _tail_increasing(n * a**2)
    moderate = vanishing and diverging
    strict = moderate and _tail_increasing(n * a**2 / np.log(np.maximum(n, 2.0)))
    logger.info(f"Tabulated sequence classified heuristically: moderate={moderate}, strict={strict}")
    return Classification(moderate, strict, True)


def error_rescale(seq: ModerateSequence, n: int, eta: float, k: float | None = None, degree: float | None = None) -> bool:
    """
    Whether k eps_n (or n^degree eps_n) = exp(-n b_n^2) has b_n <= (1 + eta) a_n at this n.

    b_n = sqrt(a_n^2 - ln(factor)/n); False when b_n is not yet defined.

    Raises:
        DomainError: On a missing or non-positive factor, or a polynomial factor with a non-strict sequence
    """
    require((k is None) != (degree is None), "exactly one of k or degree")
    require(eta > 0, "eta > 0")
    if k is not None:
        require(k > 0, "k > 0")
        log_factor = math.log(k)
    else:
        require(degree >= 0, "degree >= 0")
        require(classify(seq).strict, "strictly moderate sequence for polynomial factors")
        log_factor = degree * math.log(n)
    a_n = seq.a(n)
    radicand = a_n**2 - log_factor / n
    if radicand < 0:
        return False
    return math.sqrt(radicand) <= (1 + eta) * a_n


# ---------------------------------------------------------------------------
# Expansion table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpansionInputs:
    """Information quantities in bits (variances in bits^2) that the expansion table consumes."""

    mutual_information: float | None = None
    mutual_information_variance: float | None = None
    entropy: float | None = None
    entropy_variance: float | None = None
    relative_entropy: float | None = None
    relative_entropy_variance: float | None = None
    capacity: float | None = None
    vmax: float | None = None

    @classmethod
    def from_state(cls, rho: DensityState, a_labels: Sequence[str] | None = None) -> "ExpansionInputs":
        """Entropy of the whole state, plus mutual information when it has two or more registers."""
        values = {"entropy": von_neumann(rho).bits, "entropy_variance": varentropy(rho).bits}
        if len(as_operator(rho).shape.labels) >= 2:
            values["mutual_information"] = mutual_information(rho, a_labels).bits
            values["mutual_information_variance"] = mutual_information_variance(rho, a_labels).bits
        return cls(**values)

    @classmethod
    def from_pair(cls, rho: OperatorLike, sigma: OperatorLike) -> "ExpansionInputs":
        return cls(
            relative_entropy=relative_entropy(rho, sigma).bits,
            relative_entropy_variance=relative_entropy_variance(rho, sigma).bits,
        )

    @classmethod
    def from_functionals(cls, functionals: ChannelFunctionals) -> "ExpansionInputs":
        return cls(capacity=functionals.capacity_like, vmax=functionals.vmax)


class ExpansionTerm(NamedTuple):
    """leading + second_coeff * a_n, per copy."""

    task: str
    leading: float
    second_coeff: float

    def value(self, a_n: float) -> float:
        return self.leading + self.second_coeff * a_n


def _needed(inputs: ExpansionInputs, *names: str) -> list[float]:
    values = []
    for name in names:
        value = getattr(inputs, name)
        require(value is not None, f"{name} available", f"expansion input {name} is missing")
        values.append(value)
    return values


def expansion_term(task: str, inputs: ExpansionInputs) -> ExpansionTerm:
    """
    Leading and second-order coefficients of a task.

    state_splitting: I(R:B)/2 + a_n sqrt(V(R:B)); source_low: S(B) + 2 a_n sqrt(V(B));
    source_high: S(B) - a_n sqrt(V(B)); channel_sim: C + a_n sqrt(V_max);
    channel_coding: C + a_n sqrt(V_max / 2); dh_low and dh_high: D -/+ a_n sqrt(2V);
    imax_partial: I(B:R) + a_n sqrt(4 V(B:R)).
    """
    require(task in TASKS, f"task in {TASKS}", f"unknown task {task!r}")
    if task == "state_splitting":
        info, var = _needed(inputs, "mutual_information", "mutual_information_variance")
        return ExpansionTerm(task, info / 2, math.sqrt(max(var, 0.0)))
    if task == "imax_partial":
        info, var = _needed(inputs, "mutual_information", "mutual_information_variance")
        return ExpansionTerm(task, info, math.sqrt(4 * max(var, 0.0)))
    if task in ("source_low", "source_high"):
        entropy, var = _needed(inputs, "entropy", "entropy_variance")
        coeff = 2 * math.sqrt(max(var, 0.0)) if task == "source_low" else -math.sqrt(max(var, 0.0))
        return ExpansionTerm(task, entropy, coeff)
    if task in ("channel_sim", "channel_coding"):
        capacity, vmax = _needed(inputs, "capacity", "vmax")
        coeff = math.sqrt(max(vmax, 0.0))
        return ExpansionTerm(task, capacity, coeff if task == "channel_sim" else coeff / math.sqrt(2))
    divergence, var = _needed(inputs, "relative_entropy", "relative_entropy_variance")
    coeff = math.sqrt(2 * max(var, 0.0))
    return ExpansionTerm(task, divergence, -coeff if task == "dh_low" else coeff)


def expansion(task: str, inputs: ExpansionInputs, seq: ModerateSequence, n: int) -> float:
    """Predicted per-copy rate or cost at block length n."""
    return expansion_term(task, inputs).value(seq.a(n))


def expansion_frame(task: str, inputs: ExpansionInputs, seq: ModerateSequence, n_values: Sequence[int]) -> pd.DataFrame:
    term = expansion_term(task, inputs)
    rows = [{"n": n, "a_n": seq.a(n), "eps_n": seq.eps(n), "predicted": term.value(seq.a(n))} for n in n_values]
    return pd.DataFrame(rows, columns=["n", "a_n", "eps_n", "predicted"])


def second_order_source_rate(entropy: float, variance: float, n: int, eps: float) -> float:
    """Gaussian approximation S + sqrt(V/n) Phi^{-1}(sqrt(1 - eps^2)) at constant error."""
    require(0.0 < eps < 1.0, "eps in (0, 1)")
    return entropy + math.sqrt(max(variance, 0.0) / n) * float(norm.ppf(math.sqrt(1 - eps**2)))


# ---------------------------------------------------------------------------
# Residual curves
# ---------------------------------------------------------------------------


class ResidualCurve(NamedTuple):
    """Computed versus predicted per-copy values; n_star is the first n after which all residuals are within slack."""

    frame: pd.DataFrame
    n_star: int | None
    slack: float


def _computed_dh(instance: tuple[np.ndarray, np.ndarray], n: int, eps: float) -> float:
    p, q = instance
    return dh_classical_iid(ClassicalIIDSpec(p, q, n), eps).bits / n


def _computed_imax(instance: DensityState, n: int, eps: float) -> float:
    return imax_partially_smoothed_bounds(instance, n, eps).upper / n


def _residual_row(task: str, instance, term: ExpansionTerm, seq: ModerateSequence, n: int) -> dict:
    a_n, eps_n = seq.a(n), seq.eps(n)
    if task == "imax_partial":
        computed = _computed_imax(instance, n, eps_n)
    else:
        computed = _computed_dh(instance, n, 1 - eps_n if task == "dh_high" else eps_n)
    predicted = term.value(a_n)
    return {
        "n": n,
        "a_n": a_n,
        "eps_n": eps_n,
        "computed": computed,
        "predicted": predicted,
        "residual_over_an": (computed - predicted) / a_n,
    }


def first_index_within(residuals: Sequence[float], n_values: Sequence[int], slack: float) -> int | None:
    """First n from which every later residual/a_n is at most the slack."""
    n_star = None
    for n, residual in zip(reversed(list(n_values)), reversed(list(residuals))):
        if residual > slack:
            break
        n_star = n
    return n_star


def residual_curve(
    task: str,
    instance: "tuple[np.ndarray, np.ndarray] | DensityState",
    seq: ModerateSequence,
    n_values: Sequence[int],
    slack_fraction: float = RESIDUAL_SLACK_FRACTION,
) -> ResidualCurve:
    """
    Per-copy one-shot quantity against its expansion over a sweep of block lengths.

    dh_low uses D_h at error eps_n, dh_high at 1 - eps_n, both on the classical pair
    (p, q) through type classes. imax_partial uses the upper end of the partially
    smoothed max-information at radius eps_n. The slack is slack_fraction times the
    second-order coefficient, or slack_fraction itself when that coefficient vanishes.

    Args:
        task: dh_low, dh_high or imax_partial
        instance: (p, q) spectra, or rho_BR for imax_partial
        seq: Moderate sequence
        n_values: Block lengths, increasing
        slack_fraction: Relative slack on the second-order coefficient

    Returns:
        ResidualCurve with the frame in the fixed residual CSV column order
    """
    require(task in RESIDUAL_TASKS, f"task in {RESIDUAL_TASKS}", f"unknown residual task {task!r}")
    n_values = [int(n) for n in n_values]
    require(n_values == sorted(set(n_values)), "n values increasing")
    if task == "imax_partial":
        inputs = ExpansionInputs.from_state(instance, a_labels=list(as_operator(instance).shape.labels[:-1]))
    else:
        p, q = (np.asarray(x, dtype=float) for x in instance)
        instance = (p, q)
        inputs = ExpansionInputs.from_pair(np.diag(p).astype(complex), np.diag(q).astype(complex))
    term = expansion_term(task, inputs)
    coeff = abs(term.second_coeff)
    slack = slack_fraction * coeff if coeff > 0 else slack_fraction

    rows = Parallel(n_jobs=resolve_workers(), prefer="threads")(
        delayed(_residual_row)(task, instance, term, seq, n) for n in n_values
    )
    frame = pd.DataFrame(rows, columns=RESIDUAL_CSV_COLUMNS)
    n_star = first_index_within(frame["residual_over_an"].tolist(), n_values, slack)
    if n_star is None:
        logger.warning(f"{task}: residual exceeds slack {slack:.4f} at the largest n = {n_values[-1]}")
    return ResidualCurve(frame, n_star, slack)


# ---------------------------------------------------------------------------
# Entanglement-assisted coding arithmetic
# ---------------------------------------------------------------------------


class EACodingParameters(NamedTuple):
    mu: float
    delta: float
    eps: float


class EACodingTerms(NamedTuple):
    g: float
    log_gamma: float
    f: float


def ea_coding_parameters(seq: ModerateSequence, n: int, alphabet: int) -> EACodingParameters:
    """mu = (2/ln 2) a_n^2 + |A| log(n+1)/n, delta = exp(-n a_n^2), eps = sqrt(1 - exp(-n a_n^2))."""
    require(alphabet >= 1, "alphabet >= 1")
    a_n = seq.a(n)
    tail = math.exp(-n * a_n**2)
    mu = 2 / math.log(2) * a_n**2 + alphabet * math.log2(n + 1) / n
    return EACodingParameters(mu, tail, math.sqrt(1 - tail))


def ea_coding_terms(n: int, mu: float, alphabet: int, eps: float, delta: float) -> EACodingTerms:
    """g(n, mu), log gamma and f = log((1 - eps)/delta^2) of the one-shot coding bound."""
    require(0.0 < delta and 0.0 <= eps < 1.0, "0 < delta, eps in [0, 1)")
    type_term = alphabet * math.log2(n + 1)
    g = 2.0 ** (-(n / 2) * (mu - type_term / n))
    return EACodingTerms(g, type_term + n * mu, math.log2((1 - eps) / delta**2))


def ea_coding_lower_bound(channel: Channel, psi: PureVector, n: int, eps: float, delta: float, mu: float) -> float:
    """
    D_h^{eps - 2 delta - g}((N (x) id)(psi)^n || N(rho_A)^n (x) rho_R^n) - f - log gamma.

    Args:
        channel: Channel N
        psi: Pure input on the channel input registers followed by a reference
        n: Block length
        eps: Target error
        delta: Slack parameter
        mu: Rate offset

    Raises:
        DomainError: If eps - 2 delta - g falls outside [0, 1)
    """
    alphabet = channel.in_dim
    terms = ea_coding_terms(n, mu, alphabet, eps, delta)
    error = eps - 2 * delta - terms.g
    require(0.0 <= error < 1.0, "eps - 2 delta - g in [0, 1)", f"error {error:.3e}")
    omega = apply_on(channel, psi.state(), list(channel.in_shape.labels))
    sigma = marginal_product(omega, list(channel.out_shape.labels))
    sigma_n = sigma
    for _ in range(n - 1):
        sigma_n = np.kron(sigma_n, sigma)
    return dh(tensor_power(omega, n), sigma_n, error).bits - terms.f - terms.log_gamma
