"""Exception hierarchy shared by the numerical modules and the CLI."""


class QNDWorkError(Exception):
    """Base class for all package errors."""


class ConfigError(QNDWorkError, ValueError):
    """Invalid or inconsistent scenario configuration."""


class NumericalError(QNDWorkError, RuntimeError):
    """A numerical procedure failed to reach its requested accuracy."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge.

    ``worst_interval`` holds ``(a, b, error_estimate)`` of the subinterval
    with the largest error estimate when that information is available.
    """

    def __init__(self, message, worst_interval=None):
        super().__init__(message)
        self.worst_interval = worst_interval


class ConvergenceError(NumericalError):
    """Step refinement exhausted its budget; ``achieved`` is the last error estimate."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DimensionCapError(QNDWorkError, ValueError):
    """The requested Hilbert space exceeds the configured dimension cap."""

    def __init__(self, required, cap):
        super().__init__(
            f"Hilbert space dimension {required} exceeds cap {cap}; "
            f"raise dim_cap to at least {required} or reduce n_modes/fock_cutoff"
        )
        self.required = required
        self.cap = cap


class SecondLawViolation(NumericalError):
    """A quantity that must be non-positive by the second law came out positive."""
