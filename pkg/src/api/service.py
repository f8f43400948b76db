"""
Business logic service layer for the one-shot QIT API and command line.

Turns parsed operators and parameters into quantities, keeping the request models out
of the numerical modules.
"""

import logging
import math
import sys
from typing import Callable, Sequence

import pandas as pd

from src.constants import RENYI_GRID_SAMPLES
from src.errors import require
from src.expansions.moddev import ExpansionInputs, ModerateSequence, expansion_frame, expansion_term
from src.measures import entropies, hypotest
from src.measures.distances import distance_values
from src.measures.values import EntropyValue
from src.quantum.qregisters import OperatorLike, as_operator

logger = logging.getLogger(__name__)

_DIVERGENCES: dict[str, Callable[[OperatorLike, OperatorLike], EntropyValue]] = {
    "relative_entropy": entropies.relative_entropy,
    "relative_entropy_variance": entropies.relative_entropy_variance,
    "dmax": entropies.dmax,
    "dmin": entropies.dmin,
}
_SINGLE: dict[str, Callable[[OperatorLike], EntropyValue]] = {
    "von_neumann": entropies.von_neumann,
    "varentropy": entropies.varentropy,
}


class QuantityService:
    """Evaluates entropic quantities, distances, hypothesis tests and expansions."""

    def __init__(self, seed: int | None = 0) -> None:
        """
        Initialize the service.

        Args:
            seed: Seed for the sampled order-alpha mutual information
        """
        self.seed = seed

    def entropy(
        self,
        quantity: str,
        rho: OperatorLike,
        sigma: OperatorLike | None = None,
        alpha: float | None = None,
        eps: float | None = None,
        a_labels: Sequence[str] | None = None,
    ) -> EntropyValue:
        """
        Evaluate one entropic quantity.

        Args:
            quantity: Name of the quantity
            rho: First argument
            sigma: Second argument for divergences; tau_A for the mutual-information family
            alpha: Order for the Renyi quantities
            eps: Error for the information-spectrum quantities
            a_labels: Registers forming A

        Returns:
            EntropyValue

        Raises:
            DomainError: If a required argument is missing or outside its domain
        """
        if quantity in _SINGLE:
            return _SINGLE[quantity](rho)
        if quantity in _DIVERGENCES or quantity in ("sandwiched_renyi", "petz_renyi", "info_spectrum"):
            require(sigma is not None, "sigma given", f"{quantity} needs a second operator")
            if quantity in _DIVERGENCES:
                return _DIVERGENCES[quantity](rho, sigma)
            if quantity == "info_spectrum":
                require(eps is not None, "eps given")
                return hypotest.info_spectrum(rho, sigma, eps)
            require(alpha is not None, "alpha given", f"{quantity} needs an order")
            fn = entropies.sandwiched_renyi if quantity == "sandwiched_renyi" else entropies.petz_renyi
            return fn(rho, sigma, alpha)
        if quantity == "info_spectrum_entropy":
            require(eps is not None, "eps given")
            return hypotest.info_spectrum_entropy(rho, eps)
        if quantity == "mutual_information":
            return entropies.mutual_information(rho, a_labels)
        if quantity == "mutual_information_variance":
            return entropies.mutual_information_variance(rho, a_labels)
        if quantity == "imax":
            return entropies.imax(rho, sigma, a_labels)
        require(quantity == "renyi_mutual_information", "known quantity", f"unknown quantity {quantity!r}")
        require(alpha is not None, "alpha given", "renyi_mutual_information needs an order")
        samples = None if alpha in (0.5, math.inf) else RENYI_GRID_SAMPLES
        return entropies.renyi_mutual_information(rho, sigma, alpha, a_labels, grid_samples=samples, seed=self.seed)

    def distances(self, rho: OperatorLike, sigma: OperatorLike) -> dict[str, float]:
        return {d.kind: d.value for d in distance_values(rho, sigma)}

    def hypothesis_test(self, rho: OperatorLike, sigma: OperatorLike, eps: float) -> tuple[EntropyValue, float, float]:
        """D_h^eps with the type-I and type-II weights of the optimal test."""
        test = hypotest.dh_test(rho, sigma, eps)
        value = EntropyValue.infinite() if test.beta <= sys.float_info.min else EntropyValue.of(-math.log2(test.beta))
        logger.debug(f"D_h^{eps} = {value.bits} on dimension {as_operator(rho).dim}")
        return value, test.alpha, test.beta

    def expand(
        self,
        task: str,
        inputs: ExpansionInputs,
        seq: ModerateSequence,
        n_values: Sequence[int],
    ) -> tuple[float, float, pd.DataFrame]:
        """Leading term, second-order coefficient and the predicted curve."""
        term = expansion_term(task, inputs)
        return term.leading, term.second_coeff, expansion_frame(task, inputs, seq, n_values)

    @staticmethod
    def inputs_from_state(task: str, rho: OperatorLike) -> ExpansionInputs:
        """Expansion inputs of a state; divergence tasks need an explicit pair and are rejected."""
        require(task not in ("dh_low", "dh_high"), "state-based task", f"task {task} needs a pair of states")
        return ExpansionInputs.from_state(rho)
