"""Exception hierarchy for the foodsys package."""


class FoodsysError(Exception):
    """Base class for all foodsys errors."""


class DomainError(FoodsysError):
    """An input value is outside the mathematical domain of an operation."""


class FrameError(FoodsysError):
    """A state or trajectory is in the wrong frame (dimensional vs dimensionless)."""


class SingularityError(FoodsysError):
    """Evaluation would divide by zero (inventory, price or demand at zero)."""


class IntegrationError(FoodsysError):
    """The ODE solver failed. Carries the time at which integration stopped.

    ``reason`` is "max_steps" (no convergence within the step budget) or
    "step_underflow" (persistent rejection, e.g. a singular or non-finite
    right-hand side, or an unsatisfiable positivity constraint).
    """

    def __init__(self, message: str, time: float, reason: str = "max_steps"):
        super().__init__(f"{message} (at t={time!r})")
        self.time = time
        self.reason = reason


class SchemaError(FoodsysError):
    """A JSON/CSV document does not match its documented schema."""


class DataError(FoodsysError):
    """A data file failed to load. Names the offending row and column."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(message + (f" [{', '.join(loc)}]" if loc else ""))
        self.row = row
        self.column = column


class SamplerError(FoodsysError):
    """MCMC sampling failed. Carries acceptance diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
