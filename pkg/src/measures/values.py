"""
Result containers shared by the measure modules.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

from src.constants import BOUND_TOL
from src.errors import require

logger = logging.getLogger(__name__)


class EntropyValue(NamedTuple):
    """Quantity in bits; finite is False when the defining support condition fails."""

    bits: float
    finite: bool

    @classmethod
    def of(cls, bits: float) -> "EntropyValue":
        return cls(float(bits), math.isfinite(bits))

    @classmethod
    def infinite(cls, sign: int = 1) -> "EntropyValue":
        return cls(math.copysign(math.inf, sign), False)


class DistanceValue(NamedTuple):
    """One member of the fidelity family for a pair of states."""

    kind: str  # fidelity, generalized_fidelity, purified or trace
    value: float


@dataclass(frozen=True)
class BoundInterval:
    """
    Certified [lower, upper] pair in bits, each end tagged with where it comes from.

    clamped marks an interval whose independently computed ends came out inverted and were
    collapsed onto the upper end.
    """

    lower: float
    upper: float
    lower_provenance: str
    upper_provenance: str
    clamped: bool = False

    def __post_init__(self) -> None:
        require(
            self.lower <= self.upper + BOUND_TOL or math.isnan(self.lower),
            "lower <= upper",
            f"interval [{self.lower}, {self.upper}] is inverted",
        )

    @classmethod
    def ordered(cls, lower: float, upper: float, lower_provenance: str, upper_provenance: str) -> "BoundInterval":
        if lower <= upper + BOUND_TOL or math.isnan(lower):
            return cls(lower, upper, lower_provenance, upper_provenance)
        logger.warning(
            f"Inverted bounds: lower {lower:.9f} ({lower_provenance}) exceeds upper {upper:.9f} ({upper_provenance})"
        )
        return cls(upper, upper, lower_provenance, upper_provenance, clamped=True)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = BOUND_TOL) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def shifted(self, offset: float, lower_note: str = "", upper_note: str = "") -> "BoundInterval":
        return BoundInterval(
            self.lower + offset,
            self.upper + offset,
            f"{self.lower_provenance}{lower_note}",
            f"{self.upper_provenance}{upper_note}",
            self.clamped,
        )

    def scaled(self, factor: float) -> "BoundInterval":
        require(factor >= 0, "non-negative scale")
        return BoundInterval(
            self.lower * factor, self.upper * factor, self.lower_provenance, self.upper_provenance, self.clamped
        )


@dataclass(frozen=True)
class SmoothingRadius:
    """Smoothing parameter in [0, 1]; tighter domains are checked by the callers."""

    eps: float

    def __post_init__(self) -> None:
        require(0.0 <= self.eps <= 1.0, "eps in [0, 1]", f"smoothing radius {self.eps}")

    def within(self, upper: float, open_lower: bool = False) -> bool:
        lower_ok = self.eps > 0 if open_lower else self.eps >= 0
        return lower_ok and self.eps <= upper
