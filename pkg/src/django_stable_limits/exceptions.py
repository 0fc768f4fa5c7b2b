class StableLimitsError(Exception):
    """Base exception for django-stable-limits."""


class ParameterError(StableLimitsError):
    """Raised when an argument lies outside its domain."""


class PreconditionError(StableLimitsError):
    """Raised when a test function violates a hypothesis of the requested law."""


class UnsupportedRegime(StableLimitsError):
    """Raised when a quantity does not exist for the given stability index."""

    def __init__(self, alpha: float, reason: str):
        self.alpha = alpha
        self.reason = reason
        super().__init__(f"Unsupported for alpha={alpha}: {reason}")


class NumericalError(StableLimitsError):
    """Raised when a quadrature fails to reach its tolerance."""

    def __init__(self, quantity: str, achieved: float, tolerance: float):
        self.quantity = quantity
        self.achieved = achieved
        self.tolerance = tolerance
        super().__init__(
            f"Quadrature for {quantity} did not converge: error {achieved:.3g} > tolerance {tolerance:.3g}"
        )


class ConfigError(StableLimitsError):
    """Raised when an experiment configuration is invalid."""


class FunctionNotFound(StableLimitsError):
    """Raised when no test function is registered under an id."""

    def __init__(self, f_id: str, available: list[str] | None = None):
        self.f_id = f_id
        self.available = available or []
        message = f"No test function registered for id: {f_id}"
        if self.available:
            message += f" (available: {', '.join(self.available)})"
        super().__init__(message)
