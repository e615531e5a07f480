"""Convex test oracles, instance generators and fixture I/O."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from hdual import _backend


def lambda_max(A: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric matrix (cyclic Jacobi kernel)."""
    return float(_backend.jacobi_eigenvalues(np.asarray(A, dtype=float))[-1])


def power_iteration(A: np.ndarray, tol: float = 1e-10, max_iter: int = 100000, seed: int = 0) -> float:
    """Rayleigh-quotient power iteration; kept as a cross-check for :func:`lambda_max`."""
    A = np.asarray(A, dtype=float)
    x = np.random.default_rng(seed).normal(size=A.shape[0])
    x /= np.linalg.norm(x)
    rq = float(x @ A @ x)
    for _ in range(max_iter):
        y = A @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        new = float(x @ A @ x)
        if abs(new - rq) <= tol * max(abs(new), 1e-300):
            return new
        rq = new
    return rq


class ConvexOracle:
    """An L-smooth convex function with optional certified minimizer."""

    def __init__(self, dim: int, L: float, xstar: Optional[np.ndarray] = None, fstar: Optional[float] = None):
        self.dim = dim
        self.L = float(L)
        self.xstar = None if xstar is None else np.asarray(xstar, dtype=float)
        self.fstar = None if fstar is None else float(fstar)

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Quadratic(ConvexOracle):
    """f(x) = x^T A x / 2 - b^T x."""

    def __init__(self, A: np.ndarray, b: np.ndarray):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        if A.shape != (b.size, b.size) or not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise ValueError("A must be a symmetric d x d matrix matching b")
        A = 0.5 * (A + A.T)
        ev = _backend.jacobi_eigenvalues(A)
        lo, hi = float(ev[0]), float(ev[-1])
        if lo < -1e-10 * max(1.0, abs(hi)):
            raise ValueError("A must be positive semidefinite")
        if lo > 1e-12 * max(1.0, hi):
            xstar = np.linalg.solve(A, b)
        else:
            # singular: least-squares minimizer exists only when b is in range(A)
            xs, *_ = np.linalg.lstsq(A, b, rcond=None)
            if np.linalg.norm(A @ xs - b) > 1e-9 * max(1.0, np.linalg.norm(b)):
                raise ValueError("b is not in the range of A; f is unbounded below")
            xstar = xs
        super().__init__(b.size, max(hi, 0.0), xstar)
        self.A = A
        self.b = b
        self.fstar = self.value(self.xstar)

    def value(self, x):
        return 0.5 * float(x @ self.A @ x) - float(self.b @ x)

    def grad(self, x):
        return self.A @ x - self.b


def make_quadratic(A: np.ndarray, b: np.ndarray) -> Quadratic:
    return Quadratic(A, b)


class LogSumExp(ConvexOracle):
    """f(x) = mu * log sum_i exp((a_i^T x - b_i) / mu), with L = ||A||_2^2 / mu."""

    def __init__(self, A: np.ndarray, b: np.ndarray, mu: float):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float)
        if not mu > 0:
            raise ValueError("smoothing must be positive")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
            raise ValueError("rows must be finite")
        super().__init__(A.shape[1], lambda_max(A.T @ A) / mu)
        self.A, self.b, self.mu = A, b, float(mu)

    def _z(self, x):
        return (self.A @ x - self.b) / self.mu

    def value(self, x):
        z = self._z(x)
        m = float(np.max(z))
        return self.mu * (m + math.log(float(np.sum(np.exp(z - m)))))

    def grad(self, x):
        z = self._z(x)
        w = np.exp(z - np.max(z))
        return self.A.T @ (w / np.sum(w))


def make_logsumexp(A: np.ndarray, b: np.ndarray, smoothing: float) -> LogSumExp:
    return LogSumExp(A, b, smoothing)


class LeastSquares(ConvexOracle):
    """f(x) = ||Ax - b||^2 / 2 with L = ||A||_2^2."""

    def __init__(self, A: np.ndarray, b: np.ndarray):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float)
        super().__init__(A.shape[1], lambda_max(A.T @ A))
        self.A, self.b = A, b

    def value(self, x):
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def grad(self, x):
        return self.A.T @ (self.A @ x - self.b)


# ---------------------------------------------------------------------------
# nonsmooth parts


class Regularizer:
    """Closed convex g exposed through its prox and subdifferential distance."""

    kind = "none"

    def value(self, x: np.ndarray) -> float:
        return 0.0

    def prox(self, z: np.ndarray, step: float) -> np.ndarray:
        """argmin_x g(x) + ||x - z||^2 / (2 step)."""
        return np.array(z, dtype=float, copy=True)

    def subdiff_distance(self, x: np.ndarray, w: np.ndarray) -> float:
        """Euclidean distance from ``w`` to the subdifferential of g at ``x``."""
        return float(np.linalg.norm(w))

    def to_dict(self) -> dict:
        return {"type": "none"}


class L1(Regularizer):
    kind = "l1"

    def __init__(self, lam: float):
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        self.lam = float(lam)

    def value(self, x):
        return self.lam * float(np.sum(np.abs(x)))

    def prox(self, z, step):
        thr = self.lam * step
        return np.sign(z) * np.maximum(np.abs(z) - thr, 0.0)

    def subdiff_distance(self, x, w):
        lam = self.lam
        d = np.where(
            x > 0, np.abs(w - lam), np.where(x < 0, np.abs(w + lam), np.maximum(np.abs(w) - lam, 0.0))
        )
        return float(np.linalg.norm(d))

    def to_dict(self):
        return {"type": "l1", "lambda": self.lam}


class Box(Regularizer):
    kind = "box"

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if np.any(self.lo > self.hi):
            raise ValueError("need lo <= hi")

    def value(self, x):
        inside = np.all(x >= self.lo) and np.all(x <= self.hi)
        return 0.0 if inside else math.inf

    def prox(self, z, step):
        return np.clip(z, self.lo, self.hi)

    def subdiff_distance(self, x, w):
        lo = np.broadcast_to(self.lo, x.shape)
        hi = np.broadcast_to(self.hi, x.shape)
        d = np.where(
            lo == hi,
            0.0,
            np.where(x <= lo, np.maximum(w, 0.0), np.where(x >= hi, np.maximum(-w, 0.0), np.abs(w))),
        )
        return float(np.linalg.norm(d))

    def to_dict(self):
        lo = self.lo.tolist() if self.lo.ndim else float(self.lo)
        hi = self.hi.tolist() if self.hi.ndim else float(self.hi)
        return {"type": "box", "lo": lo, "hi": hi}


@dataclass
class CompositeOracle:
    """F = f + g with f L-smooth convex and g given by its prox."""

    f: ConvexOracle
    g: Regularizer
    fstar: Optional[float] = None
    xstar: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def L(self) -> float:
        return self.f.L

    @property
    def dim(self) -> int:
        return self.f.dim

    def value(self, x: np.ndarray) -> float:
        return self.f.value(x) + self.g.value(x)

    def min_subgrad_norm(self, x: np.ndarray) -> float:
        """min over v in dF(x) of ||v||."""
        return self.g.subdiff_distance(x, -self.f.grad(x))


def make_lasso(A: np.ndarray, b: np.ndarray, lam: float, solve: bool = True) -> CompositeOracle:
    F = CompositeOracle(LeastSquares(A, b), L1(lam))
    return _with_reference(F) if solve else F


def make_box_ls(A: np.ndarray, b: np.ndarray, lo, hi, solve: bool = True) -> CompositeOracle:
    F = CompositeOracle(LeastSquares(A, b), Box(lo, hi))
    return _with_reference(F) if solve else F


def _with_reference(F: CompositeOracle) -> CompositeOracle:
    from hdual.composite import reference_minimize

    xs, fs = reference_minimize(F)
    F.xstar, F.fstar = xs, fs
    return F


# ---------------------------------------------------------------------------
# generators and fixtures


def random_quadratic(rng: np.random.Generator, d: int = 10, cond: float = 1e3, scale: float = 1.0) -> Quadratic:
    """SPD quadratic with log-spaced spectrum in [scale/cond, scale]."""
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    lam = scale * np.logspace(-math.log10(cond), 0.0, d)
    A = (Q * lam) @ Q.T
    return Quadratic(0.5 * (A + A.T), rng.normal(size=d))


def random_lasso_data(rng: np.random.Generator, m: int = 80, d: int = 50, sparsity: int = 8, cond: float = 1e4):
    """(A, b, lambda) for a sparse-recovery lasso instance.

    A has log-spaced singular values with squared condition number ``cond``
    (m >= d), so accelerated methods are still far from the minimizer after
    a hundred steps.
    """
    U, _ = np.linalg.qr(rng.normal(size=(m, d)))
    V, _ = np.linalg.qr(rng.normal(size=(d, d)))
    k = min(m, d)
    sv = np.logspace(0.0, -0.5 * math.log10(cond), k)
    A = (U[:, :k] * sv) @ V[:, :k].T
    x_true = np.zeros(d)
    idx = rng.choice(d, size=min(sparsity, d), replace=False)
    x_true[idx] = rng.normal(size=idx.size) * 3.0
    b = A @ x_true + 0.1 * rng.normal(size=m)
    lam = 0.02 * float(np.max(np.abs(A.T @ b)))
    return A, b, lam


def random_lasso(rng: np.random.Generator, m: int = 80, d: int = 50) -> CompositeOracle:
    A, b, lam = random_lasso_data(rng, m, d)
    return make_lasso(A, b, lam)


def random_box_ls(rng: np.random.Generator, m: int = 80, d: int = 50, width: float = 0.5) -> CompositeOracle:
    """Least squares over the box [-width, width]^d; the unconstrained solution sits outside."""
    A, b, _ = random_lasso_data(rng, m, d)
    return make_box_ls(A, b, -width, width)


def composite_to_fixture(F: CompositeOracle) -> dict:
    f = F.f
    if not isinstance(f, LeastSquares):
        raise TypeError("only least-squares smooth parts serialize to the fixture schema")
    out = {"A": f.A.tolist(), "b": f.b.tolist(), "reg": F.g.to_dict(), "Fstar": F.fstar}
    if F.xstar is not None:
        out["xstar"] = np.asarray(F.xstar).tolist()
    return out


def load_fixture(source) -> CompositeOracle | Quadratic:
    """Load a fixture from a path, JSON text or dict.

    ``{"A", "b", "reg", "Fstar"}`` gives a composite least-squares problem;
    ``{"type": "quadratic", "A", "b"}`` gives a smooth quadratic.
    """
    if isinstance(source, dict):
        obj = source
    elif str(source).lstrip().startswith("{"):
        obj = json.loads(str(source))
    else:
        obj = json.loads(Path(source).read_text())
    A = np.asarray(obj["A"], dtype=float)
    b = np.asarray(obj["b"], dtype=float)
    if obj.get("type") == "quadratic":
        return Quadratic(A, b)
    reg = obj.get("reg", {"type": "none"})
    kind = reg.get("type", "none")
    if kind == "l1":
        g: Regularizer = L1(reg["lambda"])
    elif kind == "box":
        g = Box(reg["lo"], reg["hi"])
    elif kind == "none":
        g = Regularizer()
    else:
        raise ValueError(f"unknown regularizer type {kind!r}")
    F = CompositeOracle(LeastSquares(A, b), g)
    if obj.get("Fstar") is not None:
        F.fstar = float(obj["Fstar"])
        if obj.get("xstar") is not None:
            F.xstar = np.asarray(obj["xstar"], dtype=float)
    else:
        _with_reference(F)
    return F


def finite_difference_error(f: ConvexOracle, x: np.ndarray, h: float = 1e-6) -> float:
    """Relative error between grad f(x) and central differences."""
    g = f.grad(x)
    fd = np.empty_like(g)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        fd[j] = (f.value(x + e) - f.value(x - e)) / (2.0 * h)
    return float(np.linalg.norm(fd - g) / max(1.0, np.linalg.norm(g)))
