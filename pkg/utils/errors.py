"""Error hierarchy for the laboratory.

Every error is a ``ValueError`` so callers that only guard against bad input
keep working; ``hint`` carries a remediation message surfaced by the CLI and
copied into failed checks.
"""

from typing import Any, Optional


class LabError(ValueError):
    """Base class for all laboratory errors."""

    kind = "lab_error"

    def __init__(self, message: str, *, hint: Optional[str] = None, **details: Any) -> None:
        super().__init__(message)
        self.hint = hint
        self.details = details

    def to_dict(self) -> dict:
        payload = {"kind": self.kind, "message": str(self)}
        if self.hint:
            payload["hint"] = self.hint
        if self.details:
            payload["details"] = {k: _plain(v) for k, v in sorted(self.details.items())}
        return payload


def _plain(value: Any) -> Any:
    if isinstance(value, (int, float, str, bool)) or value is None:
        return value
    return str(value)


class InvalidSequenceError(LabError):
    kind = "invalid_sequence"


class CapacityError(LabError):
    kind = "capacity"


class EnumerationBudgetError(CapacityError):
    """Raised when an exact enumeration would exceed its configuration budget."""

    kind = "enumeration_budget"

    def __init__(self, message: str, *, required_coordinates: int, **details: Any) -> None:
        super().__init__(
            message,
            hint="reduce the window half-width or the level parameter",
            required_coordinates=required_coordinates,
            **details,
        )
        self.required_coordinates = required_coordinates


class BudgetError(LabError):
    """Rate budget not evaluable or not decreasing."""

    kind = "budget"


class BelowRangeError(LabError):
    kind = "below_range"


class CoverageError(LabError):
    """A stencil window reaches outside the sampled interval."""

    kind = "coverage"


class RangeError(LabError):
    kind = "range"


class TrialCountError(LabError):
    kind = "trial_count"


class ScenarioError(LabError):
    """Scenario file could not be parsed; carries the line number and field."""

    kind = "scenario"

    def __init__(self, message: str, *, line: Optional[int] = None, field: Optional[str] = None, **details: Any) -> None:
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}", line=line, field=field, **details)
        self.line = line
        self.field = field


class MergeError(LabError):
    kind = "merge"
