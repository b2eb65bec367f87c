"""Plugin interface: how gallery scenarios reach the laboratory."""

import abc
from collections.abc import Iterable
from typing import NamedTuple

from projlab.models.scenarios import Scenario


class PluginInfo(NamedTuple):
    """Metadata a plugin reports about itself."""

    name: str
    """Display name, e.g. "Neubauer"."""

    description: str
    """One line on what the plugin's scenarios demonstrate."""

    version: str
    """Version of the plugin. Built-in plugins use the ProjLab version."""

    author: str

    author_email: str = ""


class Plugin(abc.ABC):
    """Base class for all plugins.

    A plugin contributes one or more gallery scenarios. Scenario keys must be
    unique across all plugins registered with one laboratory.
    """

    @classmethod
    @abc.abstractmethod
    def get_info(cls) -> PluginInfo:
        """Return plugin information."""
        raise NotImplementedError("Subclasses must implement this method.")

    @abc.abstractmethod
    def get_scenarios(self) -> Iterable[Scenario]:
        """Return the scenarios provided by the plugin."""
        raise NotImplementedError("Subclasses must implement this method.")

    def scenario_keys(self) -> list[str]:
        """Keys of the provided scenarios, in plugin order."""
        return [scenario.get_scenario_key() for scenario in self.get_scenarios()]

    def find_scenario(self, key: str) -> Scenario | None:
        """Return the scenario registered under `key`, or None."""
        for scenario in self.get_scenarios():
            if scenario.get_scenario_key() == key:
                return scenario
        return None
