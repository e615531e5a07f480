"""Exception types shared across the package."""


class HDualError(Exception):
    """Base class for package errors."""


class ShapeError(HDualError, ValueError):
    """An array has the wrong shape or is not lower-triangular."""


class DivergenceError(HDualError):
    """A run produced a non-finite iterate."""

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"non-finite iterate at index {index}")


class DualizationError(HDualError, ZeroDivisionError):
    """A dual momentum coefficient has a vanishing denominator."""

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"vanishing denominator at dual step {index}")


class FeasibilityError(HDualError, ValueError):
    """A parameter sequence violates its feasibility condition."""

    def __init__(self, index: int, condition: str):
        self.index = index
        self.condition = condition
        super().__init__(f"condition '{condition}' fails at index {index}")


class CertificateError(HDualError):
    """A rate was requested from a certificate that did not verify."""


class IntegrationError(HDualError):
    """The ODE integrator failed, typically from step-size underflow."""
