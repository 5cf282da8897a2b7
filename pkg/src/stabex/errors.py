"""Exception hierarchy for stabex.

Every error raised by the library derives from StabexError so CLI code can
map failures to one usage-error exit path.
"""

from __future__ import annotations


class StabexError(Exception):
    """Base class for all stabex errors."""


class SpecError(StabexError):
    """Problem-specification document is invalid."""


class MalformedJsonError(SpecError):
    pass


class UnknownInterfaceError(SpecError):
    pass


class UnknownTypeError(SpecError):
    pass


class RadiusOnNonKnobError(SpecError):
    pass


class GridOnNonKnobError(SpecError):
    pass


class GridOutOfRangeError(SpecError):
    pass


class MissingRangeError(SpecError):
    pass


class ScopeError(SpecError):
    """A constraint references variables outside its allowed interface set."""


class UndeclaredVariableError(SpecError):
    def __init__(self, name: str, message: str | None = None) -> None:
        super().__init__(message or f"undeclared variable: {name!r}")
        self.name = name


class ExprSyntaxError(SpecError):
    """Expression text failed to parse; carries the offending position."""

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} (at position {position})")
        self.position = position


class NonConstantExponentError(SpecError):
    pass


class DivisionByNonConstantError(SpecError):
    pass


class SortMismatchError(StabexError):
    """Numeric/categorical values used where the other kind is required."""


class ModelError(StabexError):
    """Model artifact is invalid."""


class UnknownKindError(ModelError):
    pass


class DimensionMismatchError(ModelError):
    pass


class FeatureMismatchError(ModelError):
    """Model features/outputs do not line up with the declared variables."""


class BackendLaunchError(StabexError):
    """External solver process could not be started."""


class ProtocolError(StabexError):
    """External solver produced output we cannot interpret."""

    def __init__(self, message: str, line: str | None = None) -> None:
        super().__init__(message if line is None else f"{message}: {line!r}")
        self.line = line


class UngriddedFactorialDimensionError(StabexError):
    """full_factorial needs every dimension gridded, integral, or categorical."""


class AlphaRejectionExhaustedError(StabexError):
    """Input sampling could not find enough assumption-satisfying points."""


class OracleFailureError(StabexError):
    def __init__(self, row_index: int, message: str) -> None:
        super().__init__(f"oracle failed on row {row_index}: {message}")
        self.row_index = row_index


class UsageError(StabexError):
    """Bad CLI invocation (maps to exit code 3)."""
