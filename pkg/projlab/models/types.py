"""Type aliases for ProjLab models.

This module is designed to work with static type checkers and as such
imports optional dependencies like pandas. Avoid importing this module
directly, instead import this module inside a `if TYPE_CHECKING` block.
"""

from __future__ import annotations

from typing import Union

import numpy as np
import numpy.typing as npt
import pandas as pd
import polars as pl

from projlab.models.helpers import Sentinel

# Type Aliases
CoeffVector = npt.NDArray[np.float64]
"""Real coefficients against a fixed orthonormal basis prefix."""

DenseMatrix = npt.NDArray[np.float64]
"""Row-major real matrix with finite entries."""

Level = Union[int, Sentinel]
"""A discretization level; `INFINITY` selects the whole truncation."""

ProjLabOutputType = Union[dict[str, list], pl.DataFrame, pd.DataFrame, str]
