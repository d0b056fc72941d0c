"""Structured results for invariant checks.

Every ``*_check`` in the package returns a :class:`CheckReport` rather than a
bare boolean so the CLI audit can aggregate named residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one invariant check.

    ``residuals`` maps residual names to floats; ``details`` may carry
    auxiliary data (small arrays, label lists) that is not part of the
    pass/fail decision.
    """

    name: str
    passed: bool
    residuals: dict[str, float] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def worst_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_json_entry(self) -> dict[str, Any]:
        """Flatten for the audit JSON: {name, pass, residual, residuals}."""
        return {
            "name": self.name,
            "pass": bool(self.passed),
            "residual": self.worst_residual,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }
