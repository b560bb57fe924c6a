"""
Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes (see ``stbeam.cli``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence


@dataclass(frozen=True)
class Violation:
    """A single violated invariant, addressed by a dotted field path."""

    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class StbeamError(Exception):
    """Base class for all stbeam errors."""


class ConfigValidationError(StbeamError, ValueError):
    """Raised when an array, grid or region violates its invariants."""

    def __init__(self, violations: Sequence[Violation]):
        self.violations: List[Violation] = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "invalid configuration")


class ScenarioError(StbeamError):
    """Raised when a scenario file cannot be parsed or does not match the schema."""

    def __init__(self, source: str, diagnostics: Sequence[str]):
        self.source = source
        self.diagnostics: List[str] = list(diagnostics)
        super().__init__(f"{source}: " + "; ".join(self.diagnostics))


class DomainError(StbeamError, ValueError):
    """Raised when a field evaluation is requested outside the model's physical domain."""


class MeasurementError(StbeamError, ValueError):
    """Raised when a metric is undefined for the given pattern data."""
