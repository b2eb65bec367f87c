"""A numerical laboratory for regularization by projection."""

from projlab.main import Laboratory
from importlib.metadata import version

__all__ = ["Laboratory"]

__version__ = version(__name__)
