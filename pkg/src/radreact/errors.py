"""Exception hierarchy shared by the library and the command line."""


class RadReactError(Exception):
    """Base class for all library errors."""

    exit_code = 2


class DomainError(RadReactError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 3


class ConstraintViolation(RadReactError, ValueError):
    """A physical admissibility constraint is violated.

    The canonical case is a cutoff frequency above ``1/tau_e``, which makes the
    bare mass negative.
    """

    exit_code = 1


class PoleError(RadReactError, ArithmeticError):
    """Evaluation at (or integration through) a real-axis pole."""

    exit_code = 2


class NumericError(RadReactError, ArithmeticError):
    """A numerical procedure failed to converge.

    ``residual`` carries the best available error estimate, ``details`` any
    diagnostic payload (e.g. an extrapolation sequence).
    """

    exit_code = 2

    def __init__(self, message, residual=None, details=None):
        super().__init__(message)
        self.residual = residual
        self.details = details


class IntegratorError(NumericError):
    """ODE integration failed; ``state`` holds the last good state."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class UnsupportedError(RadReactError, NotImplementedError):
    """Requested operation is not defined for this kind of object."""

    exit_code = 3


class ConfigurationError(RadReactError, ValueError):
    """Inconsistent run configuration (grid too short, unresolved spectrum...)."""

    exit_code = 3
