"""Scenario runner and acceptance verification command."""

from .config import SCENARIOS, ScenarioConfig, load, resolve
from .scenarios import DEFAULTS, TOLERANCES, run

__all__ = ["SCENARIOS", "ScenarioConfig", "load", "resolve", "DEFAULTS", "TOLERANCES", "run"]
