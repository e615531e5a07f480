"""Fixed-step first-order methods, their anti-transpose duals and Lyapunov certificates."""
from hdual._backend import BACKEND
from hdual.errors import (
    CertificateError,
    DivergenceError,
    DualizationError,
    FeasibilityError,
    HDualError,
    IntegrationError,
    ShapeError,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CertificateError",
    "DivergenceError",
    "DualizationError",
    "FeasibilityError",
    "HDualError",
    "IntegrationError",
    "ShapeError",
    "__version__",
]
