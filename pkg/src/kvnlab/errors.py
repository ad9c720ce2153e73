"""Exception hierarchy shared by every kvnlab module."""


class KvnError(Exception):
    """Base class for all library errors."""


class ShapeError(KvnError, ValueError):
    """Grids or axes of two objects do not line up."""


class DomainError(KvnError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ParameterError(KvnError, ValueError):
    """A numerical or structural parameter is invalid."""


class ConfigurationError(KvnError, ValueError):
    """A scenario, generator or partition is built inconsistently."""


class SelfAdjointnessError(KvnError, ArithmeticError):
    """An expectation value came out with a non-negligible imaginary part."""


class BoundaryGuardError(KvnError, RuntimeError):
    """Too much probability mass reached the edge of a periodic grid."""

    def __init__(self, message, *, time=None, axis=None, mass=None):
        super().__init__(message)
        self.time = time
        self.axis = axis
        self.mass = mass


class ZeroProbabilityError(KvnError, ValueError):
    """Conditioning on an outcome that (numerically) never occurs."""


class ExtractionError(KvnError, RuntimeError):
    """Tomographic reconstruction produced an invalid POVM or Kraus set."""

    def __init__(self, message, *, details=None):
        super().__init__(message)
        self.details = details or {}


class ResourceError(KvnError, RuntimeError):
    """A symbolic expression exceeded the supported degree."""


class ParseError(KvnError, ValueError):
    """Malformed operator text. ``offset`` is the 0-based character position."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownSymbolError(ParseError):
    """Identifier that is neither a generator nor a declared parameter."""
