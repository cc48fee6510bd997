"""
Exception hierarchy shared by the services and the command line.
"""


class VarimatchError(Exception):
    """Base class for all varimatch errors."""


class ValidationError(VarimatchError, ValueError):
    """Raised when an input violates a documented precondition."""


class DimensionMismatchError(ValidationError):
    """Raised when two objects do not share ambient or plane dimension."""


class DegenerateFrameError(ValidationError):
    """Raised when a Grassmann quantity is requested for a zero-weight frame."""


class EmptyVarifoldError(ValidationError):
    """Raised when an operation needs at least one atom."""


class IndefiniteKernelError(ValidationError):
    """Raised when a sign-indefinite Grassmann kernel is used for quantization."""


class OutOfRangeError(ValidationError):
    """Raised when an integer argument is outside its admissible range."""


class SchemaError(ValidationError):
    """Raised when a file or config does not follow its schema."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class MeshParseError(ValidationError):
    """Raised when a mesh or polyline file cannot be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(VarimatchError, ArithmeticError):
    """Base class for numerical failures."""


class NonFiniteStateError(NumericalError):
    """Raised when an integrated state leaves the finite range."""


class NonFiniteObjectiveError(NumericalError):
    """Raised when an objective or its gradient is not finite."""
