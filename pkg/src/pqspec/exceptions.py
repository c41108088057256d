"""Exception hierarchy shared by all modules."""


class PQSpecError(Exception):
    """Base class for library errors."""


class ParameterError(PQSpecError, ValueError):
    """Raised for invalid, non-finite or inconsistent parameters."""


class UnsupportedParametersError(ParameterError):
    """Raised for parameter combinations the method does not cover (p == q)."""


class DegenerateInputError(PQSpecError, ValueError):
    """Raised when an input makes an operation ill-defined (constant or zero u)."""


class InfeasibleDirectionError(PQSpecError, ValueError):
    """Raised when a direction cannot be scaled onto the Nehari manifold."""
