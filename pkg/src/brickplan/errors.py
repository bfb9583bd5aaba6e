"""Exception hierarchy shared across the pipeline."""
from __future__ import annotations


class BrickPlanError(Exception):
    """Base class for all errors raised by brickplan."""


class MeshParseError(BrickPlanError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyMeshError(MeshParseError):
    pass


class DegenerateMeshError(BrickPlanError, ValueError):
    pass


class ContractError(BrickPlanError, ValueError):
    """An input violates an operation's precondition."""


class InventoryError(ContractError):
    pass


class InstanceTooLargeError(BrickPlanError):
    def __init__(self, cells: int, cap: int):
        self.cells = cells
        self.cap = cap
        super().__init__(
            f"{cells} occupied cells exceeds the exact-solver cap of {cap}; "
            "use the heuristic solver instead"
        )


class PlanValidationError(BrickPlanError):
    """Raised when a build list is not an exact partition of the grid."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"placements do not partition the grid: {report.summary()}")
