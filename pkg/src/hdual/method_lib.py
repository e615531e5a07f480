"""Step-size matrices, the method catalog, H-dualization and discrete runners.

A fixed-step first-order method with N steps is identified with a
lower-triangular N x N array ``H``: step k computes

    x_{k+1} = x_k - (1/L) * sum_{i<=k} H[k, i] * grad f(x_i).

Throughout, ``H[k, i]`` (0-based) stores the coefficient usually written
h_{k+1,i}.  The H-dual of a method is obtained by flipping ``H`` along its
anti-diagonal.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from hdual.errors import DivergenceError, DualizationError, FeasibilityError, ShapeError


class SmoothOracle(Protocol):
    """What the discrete runners need from an objective."""

    def value(self, x: np.ndarray) -> float: ...

    def grad(self, x: np.ndarray) -> np.ndarray: ...


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StepsizeMatrix:
    """Lower-triangular array of dimensionless step sizes."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ShapeError(f"expected a non-empty square array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ShapeError("step sizes must be finite")
        if np.any(np.triu(a, 1) != 0.0):
            raise ShapeError("step sizes above the diagonal must be exactly zero")
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)

    def allclose(self, other: "StepsizeMatrix", rtol: float = 1e-12) -> bool:
        return self.n == other.n and max_rel_diff(self.entries, other.entries) <= rtol

    def scaled(self, c: float) -> "StepsizeMatrix":
        return StepsizeMatrix(self.entries * c)

    def rows(self) -> list[list[float]]:
        return [[float(x) for x in self.entries[k, : k + 1]] for k in range(self.n)]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "StepsizeMatrix":
        n = len(rows)
        a = np.zeros((n, n))
        for k, row in enumerate(rows):
            if len(row) != k + 1:
                raise ShapeError(f"row {k} must have {k + 1} entries, got {len(row)}")
            a[k, : k + 1] = row
        return cls(a)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "rows": self.rows()})

    @classmethod
    def from_json(cls, text: str) -> "StepsizeMatrix":
        obj = json.loads(text)
        h = cls.from_rows(obj["rows"])
        if "n" in obj and int(obj["n"]) != h.n:
            raise ShapeError(f"declared n={obj['n']} but found {h.n} rows")
        return h


def max_rel_diff(a: np.ndarray, b: np.ndarray) -> float:
    """Largest entrywise difference, relative to the larger max-abs entry (floored at 1)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


@dataclass(frozen=True, eq=False)
class ThetaSequence:
    """theta_0..theta_N of the optimized gradient method."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def n(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, i):
        return self.values[i]

    def residuals(self) -> np.ndarray:
        """Relative residuals of the defining quadratic equations."""
        th = self.values
        n = self.n
        res = np.empty(n)
        for i in range(n):
            rhs = th[i] ** 2 if i < n - 1 else 2.0 * th[i] ** 2
            res[i] = abs(th[i + 1] ** 2 - th[i + 1] - rhs) / rhs
        return res


def theta_sequence(n: int) -> ThetaSequence:
    """theta_0 = 1, theta_{i+1}^2 - theta_{i+1} = theta_i^2, and the last step
    solves theta_N^2 - theta_N = 2 theta_{N-1}^2 (positive roots throughout)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    th = np.empty(n + 1)
    th[0] = 1.0
    for i in range(n - 1):
        th[i + 1] = (1.0 + math.sqrt(1.0 + 4.0 * th[i] ** 2)) / 2.0
    th[n] = (1.0 + math.sqrt(1.0 + 8.0 * th[n - 1] ** 2)) / 2.0
    return ThetaSequence(th)


@dataclass(frozen=True, eq=False)
class TSequence:
    """Positive t_0..t_N with running sums T_i = t_0 + ... + t_i."""

    t: np.ndarray
    T: np.ndarray = field(init=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ShapeError("need t_0..t_N with N >= 1")
        if not np.all(np.isfinite(t)) or np.any(t <= 0):
            raise FeasibilityError(int(np.argmax(~(t > 0))), "t_i > 0")
        T = np.empty_like(t)
        acc = 0.0
        for i, ti in enumerate(t):
            acc = acc + ti
            T[i] = acc
        object.__setattr__(self, "t", _frozen(t))
        object.__setattr__(self, "T", _frozen(T))

    @property
    def n(self) -> int:
        return len(self.t) - 1

    def check_gogm(self, rtol: float = 1e-12) -> None:
        """Raise unless t_i^2 <= 2 T_i (i < N) and t_N^2 <= T_N."""
        t, T, n = self.t, self.T, self.n
        for i in range(n):
            if t[i] ** 2 > 2.0 * T[i] * (1.0 + rtol):
                raise FeasibilityError(i, "t_i^2 <= 2 T_i")
        if t[n] ** 2 > T[n] * (1.0 + rtol):
            raise FeasibilityError(n, "t_N^2 <= T_N")

    def check_gfpgm(self, rtol: float = 1e-12) -> None:
        """Raise unless T_i <= t_i^2 for every i."""
        for i in range(self.n + 1):
            if self.T[i] > self.t[i] ** 2 * (1.0 + rtol):
                raise FeasibilityError(i, "T_i <= t_i^2")


def ogm_tseq(n: int) -> TSequence:
    """Equality case t_i^2 = 2 T_i (i < N), t_N^2 = T_N."""
    t = np.empty(n + 1)
    T_prev = 0.0
    for i in range(n):
        t[i] = 1.0 + math.sqrt(1.0 + 2.0 * T_prev)
        T_prev += t[i]
    t[n] = (1.0 + math.sqrt(1.0 + 4.0 * T_prev)) / 2.0
    return TSequence(t)


def fgm_tseq(n: int) -> TSequence:
    """Nesterov's choice T_i = t_i^2."""
    t = np.empty(n + 1)
    T_prev = 0.0
    for i in range(n + 1):
        t[i] = (1.0 + math.sqrt(1.0 + 4.0 * T_prev)) / 2.0
        T_prev += t[i]
    return TSequence(t)


def obl_tseq(n: int) -> TSequence:
    """t_i = i + 1 (i < N), t_N = sqrt(N(N+1)/2)."""
    t = np.arange(1, n + 2, dtype=float)
    t[n] = math.sqrt(n * (n + 1) / 2.0)
    return TSequence(t)


@dataclass(frozen=True, eq=False)
class ThreeTermCoeffs:
    """Momentum coefficients of

        x_{k+1} = x_k^+ + beta_k (x_k^+ - x_{k-1}^+) + gamma_k (x_k^+ - x_k),

    where x_k^+ = x_k - grad f(x_k) / L and x_{-1}^+ = x_0.
    """

    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=float)
        g = np.asarray(self.gamma, dtype=float)
        if b.ndim != 1 or b.shape != g.shape or len(b) < 1:
            raise ShapeError("beta and gamma must be 1-D with equal length N >= 1")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(g))):
            raise ShapeError("coefficients must be finite")
        object.__setattr__(self, "beta", _frozen(b))
        object.__setattr__(self, "gamma", _frozen(g))

    @property
    def n(self) -> int:
        return len(self.beta)


def anti_transpose(H: StepsizeMatrix) -> StepsizeMatrix:
    """Flip along the anti-diagonal: result[i, j] = H[N-1-j, N-1-i]."""
    return StepsizeMatrix(np.asarray(H.entries)[::-1, ::-1].T)


def three_term_to_H(c: ThreeTermCoeffs) -> StepsizeMatrix:
    """h_{k+1,i} = (prod_{j=i+1..k} beta_j) * (beta_i + gamma_i + [i == k])."""
    n = c.n
    b, g = c.beta, c.gamma
    a = np.zeros((n, n))
    for k in range(n):
        a[k, k] = 1.0 + b[k] + g[k]
        for i in range(k):
            # row k shares the prefix with row k-1, minus its extra diagonal 1
            prev = a[k - 1, i] - (1.0 if i == k - 1 else 0.0)
            a[k, i] = b[k] * prev
    return StepsizeMatrix(a)


def dual_three_term(c: ThreeTermCoeffs, aux: tuple[float, float] = (1.0, 0.0)) -> ThreeTermCoeffs:
    """Momentum coefficients of the H-dual method.

    ``aux`` is the free pair (beta_N, gamma_N); it must have a nonzero sum and
    does not affect the resulting step sizes.  A vanishing denominator
    beta_j + gamma_j is tolerated only when beta_j = gamma_j = 0, in which
    case the dual step carries no momentum.
    """
    n = c.n
    if aux[0] + aux[1] == 0.0:
        raise DualizationError(0, "auxiliary pair must have a nonzero sum")
    b = np.concatenate([c.beta, [aux[0]]])
    g = np.concatenate([c.gamma, [aux[1]]])
    s = b + g
    bd = np.empty(n)
    gd = np.empty(n)
    for k in range(n):
        j = n - k
        num = s[j - 1]
        if s[j] == 0.0:
            if b[j] != 0.0 or g[j] != 0.0:
                raise DualizationError(k)
            bd[k] = 0.0
            gd[k] = num
            continue
        bd[k] = b[j] * num / s[j]
        gd[k] = g[j] * num / s[j]
    return ThreeTermCoeffs(bd, gd)


# ---------------------------------------------------------------------------
# catalog


def ogm_H(n: int) -> StepsizeMatrix:
    """Optimized gradient method, built from its row recursion."""
    th = theta_sequence(n).values
    a = np.zeros((n, n))
    for k in range(n):
        factor = (th[k] - 1.0) / th[k + 1]
        a[k, k] = 1.0 + (2.0 * th[k] - 1.0) / th[k + 1]
        if k >= 1:
            a[k, k - 1] = factor * (a[k - 1, k - 1] - 1.0)
        for i in range(k - 1):
            a[k, i] = factor * a[k - 1, i]
    return StepsizeMatrix(a)


def ogm_H_closed_form(n: int) -> StepsizeMatrix:
    """Closed-form entries of :func:`ogm_H` (independent check)."""
    th = theta_sequence(n).values
    a = np.zeros((n, n))
    for k in range(n):
        a[k, k] = 1.0 + (2.0 * th[k] - 1.0) / th[k + 1]
        for i in range(k):
            prod = 1.0
            for l in range(i + 1, k + 1):
                prod *= (th[l] - 1.0) / th[l + 1]
            a[k, i] = prod * (2.0 * th[i] - 1.0) / th[i + 1]
    return StepsizeMatrix(a)


def ogmg_H(n: int) -> StepsizeMatrix:
    """OGM-G, built row by row from the diagonal leftwards."""
    th = theta_sequence(n).values
    a = np.zeros((n, n))
    for k in range(n):
        a[k, k] = 1.0 + (2.0 * th[n - k - 1] - 1.0) / th[n - k]
        if k >= 1:
            a[k, k - 1] = (th[n - k] - 1.0) / th[n - k + 1] * (a[k, k] - 1.0)
        for i in range(k - 2, -1, -1):
            a[k, i] = (th[n - i - 1] - 1.0) / th[n - i] * a[k, i + 1]
    return StepsizeMatrix(a)


def obl_gamma(n: int) -> float:
    return math.sqrt(n * (n + 1) / 2.0)


def obl_f_H(n: int) -> StepsizeMatrix:
    g = obl_gamma(n)
    a = np.zeros((n, n))
    for k in range(n):
        if k < n - 1:
            factor = k / (k + 3.0)
        else:
            factor = (n - 1.0) / (2.0 * (g + 1.0))
        a[k, k] = 1.0 + 2.0 * factor
        if k >= 1:
            a[k, k - 1] = factor * (a[k - 1, k - 1] - 1.0)
        for i in range(k - 1):
            a[k, i] = factor * a[k - 1, i]
    return StepsizeMatrix(a)


def obl_g_H(n: int) -> StepsizeMatrix:
    g = obl_gamma(n)
    a = np.zeros((n, n))
    for k in range(n):
        if k == 0:
            factor = (n - 1.0) / (2.0 * (g + 1.0))
        else:
            factor = (n - k - 1.0) / (n - k + 2.0)
        a[k, k] = 1.0 + 2.0 * factor
        if k >= 1:
            a[k, k - 1] = factor * (a[k - 1, k - 1] - 1.0)
        for i in range(k - 1):
            a[k, i] = factor * a[k - 1, i]
    return StepsizeMatrix(a)


def gd_H(n: int, h: float) -> StepsizeMatrix:
    if n < 1 or not h > 0:
        raise ValueError("need n >= 1 and h > 0")
    return StepsizeMatrix(h * np.eye(n))


def gogm_coeffs(ts: TSequence) -> ThreeTermCoeffs:
    """beta_k = (T_k - t_k) t_{k+1} / (t_k T_{k+1}), gamma_k = (t_k^2 - T_k) t_{k+1} / (t_k T_{k+1})."""
    t, T, n = ts.t, ts.T, ts.n
    k = np.arange(n)
    beta = (T[k] - t[k]) * t[k + 1] / (t[k] * T[k + 1])
    gamma = (t[k] ** 2 - T[k]) * t[k + 1] / (t[k] * T[k + 1])
    return ThreeTermCoeffs(beta, gamma)


def gogm_dual_coeffs(ts: TSequence) -> ThreeTermCoeffs:
    """Closed-form momentum coefficients of the H-dual of the GOGM family.

    The first step only needs beta'_0 + gamma'_0 = (t_{N-1} - 1) t_N / T_N, so
    t_N = 1 is allowed there; elsewhere t_{N-k} = 1 is a division error.
    """
    t, T, n = ts.t, ts.T, ts.n
    beta = np.empty(n)
    gamma = np.empty(n)
    beta[0] = (t[n - 1] - 1.0) * t[n] / T[n]
    gamma[0] = 0.0
    for k in range(1, n):
        j = n - k
        den = T[j] * (t[j] - 1.0)
        if den == 0.0:
            raise DualizationError(k, f"t_{j} = 1 divides the dual coefficient at step {k}")
        beta[k] = T[j - 1] * (t[j - 1] - 1.0) / den
        gamma[k] = (t[j] ** 2 - T[j]) * (t[j - 1] - 1.0) / den
    return ThreeTermCoeffs(beta, gamma)


def gogm_H(ts: TSequence, check: bool = True) -> StepsizeMatrix:
    if check:
        ts.check_gogm()
    return three_term_to_H(gogm_coeffs(ts))


def gogm_dual_H(ts: TSequence, check: bool = True) -> StepsizeMatrix:
    if check:
        ts.check_gogm()
    return three_term_to_H(gogm_dual_coeffs(ts))


def ogm_coeffs(n: int) -> ThreeTermCoeffs:
    th = theta_sequence(n).values
    k = np.arange(n)
    return ThreeTermCoeffs((th[k] - 1.0) / th[k + 1], th[k] / th[k + 1])


def ogmg_coeffs(n: int) -> ThreeTermCoeffs:
    th = theta_sequence(n).values
    k = np.arange(n)
    a = th[n - k]
    b = th[n - k - 1]
    beta = (a - 1.0) * (2.0 * b - 1.0) / (a * (2.0 * a - 1.0))
    gamma = (2.0 * b - 1.0) / (2.0 * a - 1.0)
    return ThreeTermCoeffs(beta, gamma)


def obl_f_coeffs(n: int) -> ThreeTermCoeffs:
    k = np.arange(n, dtype=float)
    beta = k / (k + 3.0)
    beta[n - 1] = (n - 1.0) / (2.0 * (obl_gamma(n) + 1.0))
    return ThreeTermCoeffs(beta, beta.copy())


def obl_g_coeffs(n: int) -> ThreeTermCoeffs:
    k = np.arange(n, dtype=float)
    beta = (n - k - 1.0) / (n - k + 2.0)
    beta[0] = (n - 1.0) / (2.0 * (obl_gamma(n) + 1.0))
    return ThreeTermCoeffs(beta, beta.copy())


# ---------------------------------------------------------------------------
# runners


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Iterates x_0..x_N with the gradients and values the method used."""

    points: np.ndarray
    grads: np.ndarray
    fvals: np.ndarray
    lipschitz: float

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        g = np.asarray(self.grads, dtype=float)
        f = np.asarray(self.fvals, dtype=float)
        if p.ndim != 2 or p.shape != g.shape or f.shape != (p.shape[0],):
            raise ShapeError("points, grads and fvals must describe the same N + 1 iterates")
        if not self.lipschitz > 0:
            raise ValueError("lipschitz constant must be positive")
        object.__setattr__(self, "points", _frozen(p))
        object.__setattr__(self, "grads", _frozen(g))
        object.__setattr__(self, "fvals", _frozen(f))

    @property
    def n(self) -> int:
        return self.points.shape[0] - 1

    def to_csv(self, coordinates: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.points.shape[1]
        header = ["iter", "f", "grad_norm"]
        if coordinates:
            header += [f"x{j}" for j in range(d)]
        w.writerow(header)
        norms = np.linalg.norm(self.grads, axis=1)
        for k in range(self.n + 1):
            row = [k, repr(float(self.fvals[k])), repr(float(norms[k]))]
            if coordinates:
                row += [repr(float(x)) for x in self.points[k]]
            w.writerow(row)
        return buf.getvalue()


def _check_finite(x: np.ndarray, index: int) -> None:
    if not np.all(np.isfinite(x)):
        raise DivergenceError(index)


def run_fsfom(H: StepsizeMatrix, f: SmoothOracle, x0: np.ndarray, L: float) -> Trajectory:
    """Run x_{k+1} = x_k - (1/L) sum_{i<=k} H[k, i] grad f(x_i)."""
    n = H.n
    x0 = np.asarray(x0, dtype=float)
    pts = np.empty((n + 1, x0.size))
    grads = np.empty((n + 1, x0.size))
    fvals = np.empty(n + 1)
    pts[0] = x0
    for k in range(n + 1):
        _check_finite(pts[k], k)
        grads[k] = f.grad(pts[k])
        fvals[k] = f.value(pts[k])
        _check_finite(grads[k], k)
        if k < n:
            pts[k + 1] = pts[k] - (H.entries[k, : k + 1] @ grads[: k + 1]) / L
    return Trajectory(pts, grads, fvals, L)


def run_three_term(c: ThreeTermCoeffs, f: SmoothOracle, x0: np.ndarray, L: float) -> Trajectory:
    """Run the momentum form directly, without forming H."""
    n = c.n
    x = np.asarray(x0, dtype=float).copy()
    pts, grads, fvals = [], [], []
    plus_prev = x.copy()
    for k in range(n + 1):
        _check_finite(x, k)
        g = np.asarray(f.grad(x), dtype=float)
        _check_finite(g, k)
        pts.append(x)
        grads.append(g)
        fvals.append(f.value(x))
        if k == n:
            break
        plus = x - g / L
        x = plus + c.beta[k] * (plus - plus_prev) + c.gamma[k] * (plus - x)
        plus_prev = plus
    return Trajectory(np.array(pts), np.array(grads), np.array(fvals), L)


def basis_simulation(step: Callable[[int, list[np.ndarray]], np.ndarray], n: int) -> StepsizeMatrix:
    """Recover H from a method written against abstract gradient symbols.

    Iterates are tracked as coefficient vectors of L(x_k - x_0) over the
    symbols e_0..e_{N-1}, where e_i stands for grad f(x_i) / L, so a gradient
    step from x_k reads ``ys[k] - e_k``.  ``step(k, ys)`` returns y_{k+1}.
    """
    ys = [np.zeros(n)]
    for k in range(n):
        ys.append(np.asarray(step(k, ys), dtype=float))
    a = np.array([ys[k] - ys[k + 1] for k in range(n)])
    return StepsizeMatrix(a)


METHODS = ("ogm", "ogmg", "obl-f", "obl-g", "gd", "gogm", "gogm-dual", "gfpgm", "sfg", "sfg-family")
