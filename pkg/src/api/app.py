"""
FastAPI server for one-shot quantum information quantities:
- POST /entropy: entropic quantities of a state or a pair
- POST /distance: fidelity family and trace distance
- POST /dh: hypothesis-testing relative entropy with the optimal test weights
- POST /expand: moderate-deviation expansion curves
"""

import logging
import math
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from typing import Annotated, AsyncGenerator

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from src.api.dtos import (
    DistanceRequest,
    DistanceResponse,
    EntropyRequest,
    EntropyResponse,
    ExpandRequest,
    ExpandResponse,
    HypothesisTestRequest,
    HypothesisTestResponse,
    MatrixPayload,
)
from src.api.service import QuantityService
from src.errors import ConvergenceError, DomainError, InputFormatError
from src.expansions.moddev import ExpansionInputs, ModerateSequence
from src.quantum.qregisters import OperatorLike
from src.utils.file_ops import operator_from_payload, state_from_operator

UTC = timezone.utc

logger = logging.getLogger(__name__)

quantity_service: Annotated[QuantityService | None, "Quantity service instance"] = None


@asynccontextmanager
async def lifespan(app: FastAPI) -> AsyncGenerator[None, None]:
    """Create the quantity service on startup."""
    global quantity_service

    logger.info("Starting quantity service...")
    quantity_service = QuantityService()

    yield

    logger.info("Shutting down application...")


app = FastAPI(
    title="One-Shot QIT API",
    description="One-shot quantum information quantities and moderate-deviation expansions",
    version="0.1.0",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _service() -> QuantityService:
    if not quantity_service:
        raise HTTPException(status_code=503, detail="Quantity service not initialized.")
    return quantity_service


def _operator(payload: MatrixPayload) -> OperatorLike:
    return state_from_operator(operator_from_payload(payload.model_dump()))


def _http_error(e: Exception) -> HTTPException:
    if isinstance(e, DomainError):
        return HTTPException(status_code=422, detail=f"precondition violated: {e.precondition}")
    if isinstance(e, InputFormatError):
        return HTTPException(status_code=400, detail=str(e))
    if isinstance(e, ConvergenceError):
        return HTTPException(status_code=503, detail=str(e))
    logger.error(f"Unexpected error: {e}")
    return HTTPException(status_code=500, detail=f"Computation error: {str(e)}")


def _finite_or_none(bits: float) -> float | None:
    return bits if math.isfinite(bits) else None


@app.get("/health")
async def health_check() -> dict:
    """
    Health check endpoint.

    Returns:
        Status information and timestamp
    """
    return {
        "status": "ok",
        "service_ready": quantity_service is not None,
        "timestamp": datetime.now(tz=UTC).isoformat(),
    }


@app.post("/entropy", response_model=EntropyResponse)
async def entropy(request: EntropyRequest) -> EntropyResponse:
    """
    Evaluate one entropic quantity.

    Raises:
        HTTPException: 400 on malformed matrices, 422 on domain violations, 503 on solver failure
    """
    service = _service()
    try:
        rho = _operator(request.rho)
        sigma = _operator(request.sigma) if request.sigma else None
        value = service.entropy(request.quantity, rho, sigma, request.alpha, request.eps, request.a_labels)
    except Exception as e:
        raise _http_error(e)
    return EntropyResponse(quantity=request.quantity, bits=_finite_or_none(value.bits), finite=value.finite)


@app.post("/distance", response_model=DistanceResponse)
async def distance(request: DistanceRequest) -> DistanceResponse:
    service = _service()
    try:
        values = service.distances(_operator(request.rho), _operator(request.sigma))
    except Exception as e:
        raise _http_error(e)
    return DistanceResponse(values=values)


@app.post("/dh", response_model=HypothesisTestResponse)
async def hypothesis_testing(request: HypothesisTestRequest) -> HypothesisTestResponse:
    """
    Hypothesis-testing relative entropy D_h^eps(rho||sigma).

    Raises:
        HTTPException: 400 on malformed matrices, 422 on domain violations
    """
    service = _service()
    try:
        value, alpha, beta = service.hypothesis_test(_operator(request.rho), _operator(request.sigma), request.eps)
    except Exception as e:
        raise _http_error(e)
    return HypothesisTestResponse(bits=_finite_or_none(value.bits), finite=value.finite, alpha=alpha, beta=beta)


@app.post("/expand", response_model=ExpandResponse)
async def expand(request: ExpandRequest) -> ExpandResponse:
    """
    Predicted per-copy rates leading + second_coeff * a_n over the requested block lengths.

    Raises:
        HTTPException: 422 on an unknown task or missing expansion inputs
    """
    service = _service()
    try:
        if request.state is not None:
            inputs = service.inputs_from_state(request.task, _operator(request.state))
        else:
            inputs = ExpansionInputs(**request.inputs.model_dump())
        seq = ModerateSequence(request.alpha, request.beta, request.scale)
        leading, coeff, frame = service.expand(request.task, inputs, seq, request.n_values)
    except Exception as e:
        raise _http_error(e)
    return ExpandResponse(task=request.task, leading=leading, second_coeff=coeff, rows=frame.to_dict(orient="records"))


@app.get("/")
async def root() -> dict:
    """
    API documentation and available endpoints.

    Returns:
        Dictionary with service information and available endpoints
    """
    matrix = {"labels": ["A"], "dims": [2], "entries": [[0.75, 0], [0, 0], [0, 0], [0.25, 0]]}
    return {
        "service": "One-Shot QIT API",
        "version": "0.1.0",
        "description": "One-shot quantum information quantities and moderate-deviation expansions",
        "endpoints": {
            "GET /health": {"description": "Health check endpoint", "returns": "Status and timestamp"},
            "GET /docs": {"description": "Interactive API documentation (Swagger UI)"},
            "POST /entropy": {
                "description": "Entropic quantity of a state or pair",
                "parameters": {
                    "quantity": "von_neumann, relative_entropy, dmax, dmin, imax, ...",
                    "rho": "Matrix JSON",
                    "sigma": "Matrix JSON (divergences) or tau_A (mutual informations)",
                    "alpha": "Renyi order",
                    "eps": "Error for information-spectrum quantities",
                },
                "errors": {"400": "Malformed matrix", "422": "Precondition violated", "503": "Solver failure"},
            },
            "POST /distance": {"description": "Fidelity, generalized fidelity, purified and trace distance"},
            "POST /dh": {
                "description": "Hypothesis-testing relative entropy",
                "parameters": {"rho": "Matrix JSON", "sigma": "Matrix JSON", "eps": "Type-I error in [0, 1)"},
                "errors": {"400": "Malformed matrix", "422": "Precondition violated"},
            },
            "POST /expand": {
                "description": "Moderate-deviation expansion of a one-shot rate or cost",
                "parameters": {
                    "task": "state_splitting, source_low, source_high, channel_sim, channel_coding, ...",
                    "alpha": "a_n decay exponent in (0, 1/2]",
                    "n_values": "Block lengths",
                    "state": "Matrix JSON, or inputs with the information quantities",
                },
            },
        },
        "examples": {
            "entropy": {
                "endpoint": "POST /entropy",
                "request": {"quantity": "von_neumann", "rho": matrix},
                "response": {"quantity": "von_neumann", "bits": 0.8112781, "finite": True},
            },
        },
        "status": "ready" if quantity_service else "starting",
    }


if __name__ == "__main__":
    import uvicorn

    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    uvicorn.run(app, host="0.0.0.0", port=8000, log_level="info")
