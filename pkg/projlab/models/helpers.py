"""Helper models for ProjLab."""

from enum import Enum


class ReturnFormat(Enum):
    """Enum for return formats.

    This enum defines the different formats in which a sweep table can be returned.

    Attributes:
        DICT: Format as a dictionary mapping column names as keys.
        PL_DATAFRAME: Format as a Polars DataFrame. This is the internal format used by projlab.
        PD_DATAFRAME: Format as a Pandas DataFrame (needs the `pandas` extra).
        JSON: Format as a JSON string.
        CSV: Format as a CSV string.
    """

    DICT = "dict"
    PL_DATAFRAME = "pl_dataframe"
    PD_DATAFRAME = "pd_dataframe"
    JSON = "json"
    CSV = "csv"


class Sentinel(Enum):
    """Sentinel discretization levels.

    `INFINITY` stands for "no projection on this side": with `m = INFINITY`
    the projected operator is `A P_n` (projected least squares), with
    `n = INFINITY` it is `Q_m A` (dual least squares).
    """

    INFINITY = "inf"

    def __str__(self) -> str:
        """Return the config spelling of the sentinel."""
        return self.value


INFINITY = Sentinel.INFINITY


def level_key(level: "int | Sentinel") -> float:
    """Sort key for levels, `INFINITY` last."""
    return float("inf") if level is INFINITY else float(level)
