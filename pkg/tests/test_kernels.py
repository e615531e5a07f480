import os
import subprocess
import sys

import numpy as np
import pytest

from hdual import _backend, _kernels_py
from hdual.certify import build_S, build_T
from hdual.method_lib import StepsizeMatrix

from .conftest import random_H, random_weights


def test_compiled_backend_available():
    # the repository ships the extension; a missing build should be loud here, not silent elsewhere
    assert "cython" in _backend.BACKENDS
    expected = "python" if os.environ.get("HDUAL_PURE_PYTHON") == "1" else "cython"
    assert _backend.BACKEND == expected


def test_pure_python_override():
    env = dict(os.environ, HDUAL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import hdual; print(hdual.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


class TestJacobi:
    def test_against_eigvalsh(self, kernels, rng):
        for n in (1, 2, 5, 12, 31):
            a = rng.normal(size=(n, n))
            a = a + a.T
            ev = kernels.jacobi_eigenvalues(a)
            assert np.max(np.abs(ev - np.linalg.eigvalsh(a))) <= 1e-12 * max(1.0, np.max(np.abs(ev)))

    def test_zero_and_diagonal(self, kernels):
        assert np.array_equal(kernels.jacobi_eigenvalues(np.zeros((3, 3))), np.zeros(3))
        assert kernels.jacobi_eigenvalues(np.diag([3.0, -1.0, 2.0])).tolist() == [-1.0, 2.0, 3.0]

    def test_rank_one_psd(self, kernels, rng):
        x = rng.normal(size=8)
        ev = kernels.jacobi_eigenvalues(np.outer(x, x))
        assert ev[-1] == pytest.approx(float(x @ x), rel=1e-13)
        assert np.max(np.abs(ev[:-1])) <= 1e-13 * float(x @ x)

    def test_read_only_input(self, kernels):
        a = np.eye(3)
        a.setflags(write=False)
        assert kernels.jacobi_eigenvalues(a).tolist() == [1.0, 1.0, 1.0]

    def test_input_untouched(self, kernels, rng):
        a = rng.normal(size=(4, 4))
        a = a + a.T
        before = a.copy()
        kernels.jacobi_eigenvalues(a)
        assert np.array_equal(a, before)


class TestCoefficients:
    def test_backends_agree(self, rng):
        if "cython" not in _backend.BACKENDS:
            pytest.skip("compiled kernels not built")
        fast = _backend.BACKENDS["cython"]
        for n in (1, 4, 15):
            h = random_H(rng, n)
            u = random_weights(rng, n)
            assert np.allclose(fast.s_coefficients(h, u), _kernels_py.s_coefficients(h, u), rtol=1e-13, atol=1e-13)
            assert np.allclose(fast.t_coefficients(h, u), _kernels_py.t_coefficients(h, u), rtol=1e-13, atol=1e-13)

    def test_lower_triangular(self, kernels, rng):
        h = random_H(rng, 6)
        u = random_weights(rng, 6)
        assert np.array_equal(np.triu(kernels.s_coefficients(h, u), 1), np.zeros((7, 7)))
        assert np.array_equal(np.triu(kernels.t_coefficients(h, u), 1), np.zeros((7, 7)))

    def test_match_assembly(self, kernels, rng):
        n = 9
        h = random_H(rng, n)
        u = random_weights(rng, n)
        S = kernels.s_coefficients(h, u)
        S = 0.5 * (S + S.T)
        ref = build_S(StepsizeMatrix(h), u, "assembly").entries
        assert np.max(np.abs(S - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))
        T = kernels.t_coefficients(h, u)
        T = 0.5 * (T + T.T)
        ref = build_T(StepsizeMatrix(h), u, "assembly").entries
        assert np.max(np.abs(T - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))
