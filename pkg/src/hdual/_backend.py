"""Kernel backend selection.

The compiled extension is used when importable; set ``HDUAL_PURE_PYTHON=1``
to force the pure-Python kernels.
"""
import os

from hdual import _kernels_py

if os.environ.get("HDUAL_PURE_PYTHON") == "1":
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from hdual import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"

BACKENDS = {"python": _kernels_py}
if BACKEND == "cython":
    BACKENDS["cython"] = kernels
else:
    try:
        from hdual import _kernels as _compiled  # type: ignore[attr-defined]

        BACKENDS["cython"] = _compiled
    except ImportError:
        pass

jacobi_eigenvalues = kernels.jacobi_eigenvalues
s_coefficients = kernels.s_coefficients
t_coefficients = kernels.t_coefficients
