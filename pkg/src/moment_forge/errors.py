"""Typed exceptions shared across the package."""


class MomentForgeError(Exception):
    """Base class for all package errors."""


class ConfigError(MomentForgeError):
    """Malformed user-facing configuration (CLI exit code 1)."""


class DomainError(MomentForgeError):
    """Argument outside a divergence conjugate's domain."""


class BarrierViolation(DomainError):
    """Log-barrier divergence evaluated at t >= 1; carries the worst argument."""

    def __init__(self, max_t: float, message: str | None = None):
        self.max_t = float(max_t)
        super().__init__(
            message or f"log-barrier violated: max conjugate argument {self.max_t:.6g} >= 1"
        )


class InfeasibleError(MomentForgeError):
    """Dual feasibility could not be restored within the backtrack budget."""


class DivergedError(MomentForgeError):
    """Optimization produced a non-finite value; carries the trace so far."""

    def __init__(self, message: str, trace=None):
        self.trace = trace
        super().__init__(message)
