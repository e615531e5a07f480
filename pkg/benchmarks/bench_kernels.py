"""Compiled versus pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--sizes 10 30 60] [--repeat 5]

Prints the best-of-``repeat`` wall time per call for each kernel and size,
and checks that both backends return the same numbers.
"""
import argparse
import timeit

import numpy as np

from hdual import _backend, _kernels_py


def _symmetric(rng, n):
    a = rng.normal(size=(n, n))
    return a + a.T


def _cases(rng, n):
    h = np.tril(rng.uniform(-1, 1, size=(n, n))) + np.eye(n)
    u = np.cumsum(rng.uniform(0.1, 2.0, size=n + 1))
    return {
        "jacobi_eigenvalues": (_symmetric(rng, n + 1),),
        "s_coefficients": (h, u),
        "t_coefficients": (h, u),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 30, 60])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if "cython" not in _backend.BACKENDS:
        raise SystemExit("compiled kernels are not built; run `python3 setup.py build_ext --inplace` first")
    fast = _backend.BACKENDS["cython"]
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'N':>5}{'python (ms)':>14}{'cython (ms)':>14}{'speedup':>10}{'max diff':>12}")
    for n in args.sizes:
        for name, call_args in _cases(rng, n).items():
            py_fn, cy_fn = getattr(_kernels_py, name), getattr(fast, name)
            diff = float(np.max(np.abs(py_fn(*call_args) - cy_fn(*call_args))))
            number = 1 if n >= 30 else 5
            t_py = min(timeit.repeat(lambda: py_fn(*call_args), number=number, repeat=args.repeat)) / number
            t_cy = min(timeit.repeat(lambda: cy_fn(*call_args), number=number, repeat=args.repeat)) / number
            print(f"{name:<20}{n:>5}{1e3 * t_py:>14.3f}{1e3 * t_cy:>14.3f}{t_py / t_cy:>9.1f}x{diff:>12.1e}")


if __name__ == "__main__":
    main()
