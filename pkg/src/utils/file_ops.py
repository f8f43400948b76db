"""
Utility functions for file operations: matrix and channel JSON, result tables.

Matrix JSON is {"labels": [...], "dims": [...], "entries": [[re, im], ...]} with the
entries in row-major order. Channel JSON is {"kraus": [...], "in_dims": [...],
"out_dims": [...]} where each Kraus operator is a row-major [[re, im], ...] list.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from src.constants import PSD_TOL, TRACE_TOL
from src.errors import DomainError, InputFormatError
from src.quantum.qchannels import Channel
from src.quantum.qregisters import (
    DensityState,
    HermitianOperator,
    OperatorLike,
    SubnormalizedState,
    as_operator,
    make_shape,
)

logger = logging.getLogger(__name__)


def _fail(message: str) -> InputFormatError:
    error = InputFormatError(message)
    logger.error(message)
    return error


def atomic_write_text(filepath: Path, text: str) -> None:
    """Write through a temporary file in the target directory, then rename over the target."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=filepath.parent, prefix=f".{filepath.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, filepath)
    except OSError as e:
        logger.error(f"Failed to write {filepath}: {e}")
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _read_json(filepath: Path, description: str) -> Any:
    filepath = Path(filepath)
    if not filepath.exists():
        raise FileNotFoundError(f"{description} file not found: {filepath}")
    try:
        with open(filepath, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise _fail(f"Malformed JSON in {filepath}: {e}") from e


# ---------------------------------------------------------------------------
# Matrices and states
# ---------------------------------------------------------------------------


def matrix_entries(matrix: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(matrix, dtype=complex).reshape(-1)]


def matrix_from_entries(entries: Any, rows: int, cols: int) -> np.ndarray:
    """
    Complex matrix from a row-major list of [re, im] pairs.

    Raises:
        InputFormatError: If the list has the wrong length or malformed pairs
    """
    try:
        pairs = np.asarray(entries, dtype=float)
    except (TypeError, ValueError) as e:
        raise _fail(f"Entries are not numeric [re, im] pairs: {e}") from e
    if pairs.shape != (rows * cols, 2):
        raise _fail(f"Expected {rows * cols} [re, im] pairs, got array of shape {pairs.shape}")
    return (pairs[:, 0] + 1j * pairs[:, 1]).reshape(rows, cols)


def operator_to_payload(op: OperatorLike) -> dict:
    operator = as_operator(op)
    return {
        "labels": list(operator.shape.labels),
        "dims": list(operator.shape.dims),
        "entries": matrix_entries(operator.matrix),
    }


def operator_from_payload(payload: Any) -> HermitianOperator:
    """
    Parse a matrix JSON payload.

    Raises:
        InputFormatError: If fields are missing, inconsistent or the matrix is not Hermitian
    """
    if not isinstance(payload, dict) or "dims" not in payload or "entries" not in payload:
        raise _fail("Matrix JSON needs 'dims' and 'entries'")
    dims = payload["dims"]
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 1 for d in dims):
        raise _fail(f"'dims' must be a list of positive integers, got {dims!r}")
    labels = payload.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != len(dims)):
        raise _fail(f"'labels' must list one name per register, got {labels!r}")
    shape = make_shape(dims, labels)
    matrix = matrix_from_entries(payload["entries"], shape.total, shape.total)
    try:
        return HermitianOperator(shape, matrix)
    except DomainError as e:
        raise _fail(f"Matrix payload rejected: {e}") from e


def state_from_operator(op: HermitianOperator) -> OperatorLike:
    """The strongest state type the operator satisfies, else the operator itself."""
    evals = np.linalg.eigvalsh(op.matrix)
    if evals.min() < -PSD_TOL * max(float(np.abs(evals).max()), np.finfo(float).tiny):
        return op
    if abs(op.trace - 1) <= TRACE_TOL:
        return DensityState(op)
    if 0 < op.trace <= 1 + TRACE_TOL:
        return SubnormalizedState(op)
    return op


def save_operator(op: OperatorLike, filepath: Path, description: str = "") -> None:
    atomic_write_text(Path(filepath), json.dumps(operator_to_payload(op)))
    desc = f" ({description})" if description else ""
    logger.info(f"Saved matrix file: {Path(filepath).name}{desc}")


def load_operator(filepath: Path, description: str = "matrix") -> OperatorLike:
    """
    Load a matrix JSON file as a DensityState, SubnormalizedState or HermitianOperator.

    Raises:
        FileNotFoundError: If the file does not exist
        InputFormatError: If the payload is malformed
    """
    op = state_from_operator(operator_from_payload(_read_json(filepath, description)))
    logger.info(f"Loaded {description} {Path(filepath).name} on registers {list(as_operator(op).shape.labels)}")
    return op


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------


def channel_to_payload(channel: Channel) -> dict:
    return {
        "kraus": [matrix_entries(k) for k in channel.kraus],
        "in_dims": list(channel.in_shape.dims),
        "out_dims": list(channel.out_shape.dims),
        "in_labels": list(channel.in_shape.labels),
        "out_labels": list(channel.out_shape.labels),
        "name": channel.name,
    }


def channel_from_payload(payload: Any) -> Channel:
    """
    Parse a channel JSON payload.

    Raises:
        InputFormatError: If fields are missing or the Kraus operators are not trace preserving
    """
    if not isinstance(payload, dict) or not {"kraus", "in_dims", "out_dims"} <= payload.keys():
        raise _fail("Channel JSON needs 'kraus', 'in_dims' and 'out_dims'")
    if not isinstance(payload["kraus"], list) or not payload["kraus"]:
        raise _fail("'kraus' must be a non-empty list")
    in_shape = make_shape(payload["in_dims"], payload.get("in_labels", "A"))
    out_shape = make_shape(payload["out_dims"], payload.get("out_labels", "B"))
    kraus = tuple(matrix_from_entries(k, out_shape.total, in_shape.total) for k in payload["kraus"])
    try:
        return Channel(kraus, in_shape, out_shape, payload.get("name", ""))
    except DomainError as e:
        raise _fail(f"Channel payload rejected: {e}") from e


def save_channel(channel: Channel, filepath: Path) -> None:
    atomic_write_text(Path(filepath), json.dumps(channel_to_payload(channel)))
    logger.info(f"Saved channel file: {Path(filepath).name}")


def load_channel(filepath: Path) -> Channel:
    channel = channel_from_payload(_read_json(filepath, "channel"))
    logger.info(f"Loaded channel {Path(filepath).name}: {channel.in_dim} -> {channel.out_dim}")
    return channel


# ---------------------------------------------------------------------------
# Result tables
# ---------------------------------------------------------------------------


def table_text(frame: pd.DataFrame, seed: int | None = None, fmt: str = "csv") -> str:
    """Render a result table; the seed is recorded only when the job drew random numbers."""
    if fmt == "json":
        payload = {"seed": seed} if seed is not None else {}
        payload["rows"] = json.loads(frame.to_json(orient="records"))
        return json.dumps(payload, indent=2)
    if fmt == "csv":
        header = f"# seed: {seed}\n" if seed is not None else ""
        return header + frame.to_csv(index=False)
    raise _fail(f"Unknown table format {fmt!r}")


def save_table(frame: pd.DataFrame, filepath: Path, seed: int | None = None, fmt: str | None = None) -> None:
    """
    Write a result table as CSV (with a '# seed:' header line when seeded) or JSON.

    Args:
        frame: Table to write
        filepath: Destination; the format defaults to the file suffix
        seed: Seed recorded with the table, None for deterministic jobs
        fmt: "csv" or "json"
    """
    filepath = Path(filepath)
    fmt = fmt or ("json" if filepath.suffix.lower() == ".json" else "csv")
    atomic_write_text(filepath, table_text(frame, seed, fmt))
    logger.info(f"Saved {fmt} table with {len(frame)} rows: {filepath}")


def load_table(filepath: Path) -> pd.DataFrame:
    """Read back a table written by save_table."""
    filepath = Path(filepath)
    if filepath.suffix.lower() == ".json":
        return pd.DataFrame(_read_json(filepath, "table")["rows"])
    return pd.read_csv(filepath, comment="#")
