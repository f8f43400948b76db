"""
Data Transfer Objects (DTOs) for the one-shot QIT service and command line.

Defines request and response models for all API endpoints and the CLI job spec.
"""

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from src.expansions.moddev import TASKS

EntropyQuantity = Literal[
    "von_neumann",
    "varentropy",
    "relative_entropy",
    "relative_entropy_variance",
    "dmax",
    "dmin",
    "sandwiched_renyi",
    "petz_renyi",
    "mutual_information",
    "mutual_information_variance",
    "imax",
    "renyi_mutual_information",
    "info_spectrum",
    "info_spectrum_entropy",
]


class MatrixPayload(BaseModel):
    """Matrix JSON: register labels and dimensions plus row-major [re, im] entries."""

    labels: list[str] | None = Field(default=None, description="Register labels, one per dimension")
    dims: list[int] = Field(min_length=1, description="Register dimensions")
    entries: list[list[float]] = Field(description="Row-major [re, im] pairs")


class EntropyRequest(BaseModel):
    """Request model for entropy endpoint."""

    quantity: EntropyQuantity = Field(description="Entropic quantity to evaluate")
    rho: MatrixPayload
    sigma: MatrixPayload | None = Field(default=None, description="Second argument for divergences")
    alpha: float | None = Field(default=None, ge=0, description="Renyi order")
    eps: float | None = Field(default=None, gt=0, lt=1, description="Error for information-spectrum quantities")
    a_labels: list[str] | None = Field(default=None, description="Registers forming A for mutual informations")


class EntropyResponse(BaseModel):
    """Response model for entropy endpoint."""

    quantity: str
    bits: float | None = Field(description="Value in bits; null when infinite")
    finite: bool


class DistanceRequest(BaseModel):
    """Request model for distance endpoint."""

    rho: MatrixPayload
    sigma: MatrixPayload


class DistanceResponse(BaseModel):
    """Response model for distance endpoint."""

    values: dict[str, float]


class HypothesisTestRequest(BaseModel):
    """Request model for dh endpoint."""

    rho: MatrixPayload
    sigma: MatrixPayload
    eps: float = Field(ge=0, lt=1, description="Type-I error in [0, 1)")


class HypothesisTestResponse(BaseModel):
    """Response model for dh endpoint."""

    bits: float | None
    finite: bool
    alpha: float = Field(description="Tr(test rho)")
    beta: float = Field(description="Tr(test sigma)")


class ExpansionInputsPayload(BaseModel):
    mutual_information: float | None = None
    mutual_information_variance: float | None = Field(default=None, ge=0)
    entropy: float | None = None
    entropy_variance: float | None = Field(default=None, ge=0)
    relative_entropy: float | None = None
    relative_entropy_variance: float | None = Field(default=None, ge=0)
    capacity: float | None = None
    vmax: float | None = Field(default=None, ge=0)


class ExpandRequest(BaseModel):
    """Request model for expand endpoint; inputs come either from a state or as numbers."""

    task: str = Field(description=f"One of {', '.join(TASKS)}")
    alpha: float = Field(default=1 / 3, gt=0, le=0.5, description="Decay exponent of a_n = scale n^-alpha (ln n)^beta")
    beta: float = Field(default=0.0, description="Exponent of the logarithmic factor")
    scale: float = Field(default=1.0, gt=0)
    n_values: list[int] = Field(min_length=1, max_length=4096, description="Block lengths")
    state: MatrixPayload | None = None
    inputs: ExpansionInputsPayload | None = None

    @model_validator(mode="after")
    def _one_source(self) -> "ExpandRequest":
        if (self.state is None) == (self.inputs is None):
            raise ValueError("give exactly one of 'state' and 'inputs'")
        if any(n < 1 for n in self.n_values):
            raise ValueError("block lengths must be positive")
        return self


class ExpandResponse(BaseModel):
    """Response model for expand endpoint."""

    task: str
    leading: float
    second_coeff: float
    rows: list[dict[str, float]]


class JobSpec(BaseModel):
    """One CLI job: command, input files, parameters and output."""

    command: Literal["entropy", "dist", "dh", "smooth-bounds", "channel", "expand", "residual", "verify", "protocol"]
    inputs: dict[str, str] = Field(default_factory=dict, description="Named input files (state or channel JSON)")
    eps: float | None = Field(default=None, ge=0, le=1)
    alpha: float | None = Field(default=None, ge=0)
    n_values: list[int] = Field(default_factory=list)
    seed: int | None = Field(default=None, ge=0)
    output: str | None = None
    format: Literal["json", "csv"] = "csv"

    @model_validator(mode="after")
    def _seeded(self) -> "JobSpec":
        if self.command in ("verify", "channel", "protocol") and self.seed is None:
            raise ValueError(f"command {self.command!r} is stochastic and needs a seed")
        return self
