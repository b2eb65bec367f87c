"""Utility functions for projlab."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import polars as pl

from projlab.config import config_to_dict
from projlab.linalg import as_matrix, as_vector
from projlab.models import ReturnFormat

if TYPE_CHECKING:
    from projlab.config import ScenarioConfig
    from projlab.models.base import SweepResult
    from projlab.models.types import CoeffVector, DenseMatrix, ProjLabOutputType


logger = logging.getLogger(__name__)

FLOAT_FORMAT = ".17g"


def format_float(value: float | None) -> str:
    """Format a float with 17 significant digits; None becomes an empty field."""
    if value is None:
        return ""
    return format(float(value), FLOAT_FORMAT)


def config_hash(cfg: ScenarioConfig) -> str:
    """SHA-256 of the canonical JSON form of a config."""
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_matrix(path: str | Path) -> DenseMatrix:
    """Read a whitespace-separated matrix file."""
    logger.debug(f"Loading matrix from {path}")
    return as_matrix(np.loadtxt(path, dtype=float, ndmin=2), str(path))


def load_coefficients(path: str | Path) -> CoeffVector:
    """Read a coefficient vector, one or more values per line."""
    logger.debug(f"Loading coefficients from {path}")
    return as_vector(np.loadtxt(path, dtype=float, ndmin=1).ravel(), str(path))


def _text_columns(table: pl.DataFrame) -> pl.DataFrame:
    """Render float columns as fixed 17-digit text, keeping nulls."""
    return table.with_columns(
        pl.col(name).map_elements(format_float, return_dtype=pl.String())
        for name, dtype in table.schema.items()
        if dtype == pl.Float64()
    )


def _json_value(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def format_output(
    data: pl.DataFrame,
    format: ReturnFormat | str,
) -> ProjLabOutputType:
    """Format a sweep table based on the specified format."""
    if isinstance(format, str):
        format = ReturnFormat(format)

    if format == ReturnFormat.DICT:
        return data.to_dict(as_series=False)
    elif format == ReturnFormat.PL_DATAFRAME:
        return data
    elif format == ReturnFormat.PD_DATAFRAME:
        return data.to_pandas()
    elif format == ReturnFormat.JSON:
        return json.dumps(_json_value(data.to_dicts()), allow_nan=False)
    elif format == ReturnFormat.CSV:
        return _text_columns(data).write_csv(line_terminator="\r\n")
    else:
        raise ValueError(f"Unsupported format: {format}")


def render(result: SweepResult, format: ReturnFormat | str) -> str:
    """Render a sweep result as CSV (the table) or JSON (rows, metadata and summary)."""
    if isinstance(format, str):
        format = ReturnFormat(format)
    if format == ReturnFormat.CSV:
        return format_output(result.table, ReturnFormat.CSV)
    if format == ReturnFormat.JSON:
        document = {
            "metadata": result.metadata,
            "summary": result.summary,
            "rows": result.table.to_dicts(),
        }
        return json.dumps(_json_value(document), indent=2, allow_nan=False) + "\n"
    raise ValueError(f"Unsupported format: {format}")


def emit(result: SweepResult, format: ReturnFormat | str, path: str | Path | None = None) -> str:
    """Render a sweep result and write it to `path` if one is given.

    Returns:
        str: The rendered text.
    """
    text = render(result, format)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
        logger.info(f"Wrote {result.table.height} rows to {path}")
    return text
