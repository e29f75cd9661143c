"""Coupled macroscopic (LWR) / microscopic (follow-the-leader) traffic model."""

from .errors import CFLError, DomainError, InvariantError, MicroMacroError, ScenarioError
from .speed_law import SpeedLaw

__all__ = ["CFLError", "DomainError", "InvariantError", "MicroMacroError", "ScenarioError", "SpeedLaw"]
__version__ = "0.1.0"
