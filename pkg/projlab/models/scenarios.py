"""Models for gallery scenarios."""

from __future__ import annotations

import abc
from typing import TYPE_CHECKING

from projlab.models.base import ScenarioInfo, SubspaceBasis, TruncatedOperator

if TYPE_CHECKING:
    from projlab.config import OperatorConfig, ScenarioConfig
    from projlab.models.types import CoeffVector, DenseMatrix


class Scenario(abc.ABC):
    """Base class for all gallery scenarios.

    A scenario owns one operator kind: it knows the defaults of a run, how
    to realize the operator and its default exact solution, and which
    reference elements and test functionals make its behaviour visible.
    """

    def __init__(self) -> None:
        """Initialize the scenario."""
        super().__init__()

    @classmethod
    @abc.abstractmethod
    def get_scenario_key(cls) -> str:
        """Get a unique key for this scenario, equal to its operator kind."""
        raise NotImplementedError("Subclasses must implement this method.")

    @classmethod
    @abc.abstractmethod
    def get_scenario_info(cls) -> ScenarioInfo:
        """Get scenario information."""
        raise NotImplementedError("Subclasses must implement this method.")

    @abc.abstractmethod
    def default_config(self) -> ScenarioConfig:
        """Get the configuration `projlab gallery KEY` runs."""
        raise NotImplementedError("Subclasses must implement this method.")

    @abc.abstractmethod
    def build_operator(self, cfg: OperatorConfig) -> TruncatedOperator:
        """Realize the operator described by an `operator` block of this kind."""
        raise NotImplementedError("Subclasses must implement this method.")

    @abc.abstractmethod
    def build_xdagger(self, cfg: ScenarioConfig, op: TruncatedOperator) -> CoeffVector:
        """Build the scenario's own default exact solution."""
        raise NotImplementedError("Subclasses must implement this method.")

    def references(
        self, cfg: ScenarioConfig, op: TruncatedOperator, xdagger: CoeffVector
    ) -> dict[str, CoeffVector]:
        """Named reference elements the sweep measures its distance to.

        Keys `u` and `v` fill the `err_to_u` and `err_to_v` columns.
        """
        return {}

    def test_functionals(
        self, cfg: ScenarioConfig, op: TruncatedOperator, xdagger: CoeffVector
    ) -> DenseMatrix | None:
        """Extra functionals (one per row) for the weak-convergence proxy."""
        return None

    def nullspace(self, op: TruncatedOperator, rank_tol: float | None = None) -> SubspaceBasis:
        """Numerical nullspace of the operator.

        Scenarios with structure may override this with a cheaper but
        equally numerical computation.
        """
        from projlab.diagnostics import operator_nullspace

        return operator_nullspace(op, rank_tol)
