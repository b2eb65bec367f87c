"""Models for ProjLab."""

from projlab.models.base import (
    ConditionReport,
    LocalVerdict,
    NestedFamily,
    ObliqueParts,
    ScenarioInfo,
    SolutionRecord,
    SpaceConditionProbe,
    SubspaceBasis,
    TruncatedOperator,
)
from projlab.models.helpers import INFINITY, ReturnFormat, Sentinel
from projlab.models.plugins import Plugin, PluginInfo
from projlab.models.scenarios import Scenario

__all__ = [
    "ConditionReport",
    "LocalVerdict",
    "NestedFamily",
    "ObliqueParts",
    "ScenarioInfo",
    "SolutionRecord",
    "SpaceConditionProbe",
    "SubspaceBasis",
    "TruncatedOperator",
    "INFINITY",
    "ReturnFormat",
    "Sentinel",
    "Plugin",
    "PluginInfo",
    "Scenario",
]
