"""Lyapunov certificates for fixed-step methods.

A primal certificate pairs a step-size matrix H with weights u_0..u_N and
proves f(x_N) - f* <= L ||x_0 - x*||^2 / (2 u_N).  A dual certificate pairs
H^A with weights v_0..v_N and proves ||grad f(y_N)||^2 / (2L) <= v_0 (f(y_0) -
f*).  Each reduces to positive semidefiniteness of a symmetric matrix over
gradient inner products: S(H, u) on the primal side and T(H^A, v) on the dual
side.  With v_i = 1/u_{N-i} the two are congruent, S = M^T T M.

Matrix convention: entry (i, j) of S or T multiplies <g_i, g_j> / L, with the
off-diagonal coefficient split evenly between (i, j) and (j, i).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from hdual import _backend
from hdual.errors import CertificateError, ShapeError
from hdual.method_lib import (
    StepsizeMatrix,
    Trajectory,
    TSequence,
    anti_transpose,
    obl_gamma,
    theta_sequence,
)

Role = Literal["u", "v"]
Kind = Literal["C1", "C2"]

PSD_TOL = 1e-9
CONGRUENCE_TOL = 1e-9


# ---------------------------------------------------------------------------
# brackets


def bracket_convexity(f, x, y) -> float:
    """[x, y] = f(y) - f(x) + <grad f(y), x - y>; nonpositive for convex f."""
    return float(f.value(y) - f.value(x) + np.dot(f.grad(y), x - y))


def bracket_coco(f, x, y, L: float) -> float:
    """[[x, y]] = [x, y] + ||grad f(x) - grad f(y)||^2 / (2L); nonpositive for L-smooth convex f."""
    gx, gy = f.grad(x), f.grad(y)
    return float(f.value(y) - f.value(x) + np.dot(gy, x - y) + np.dot(gx - gy, gx - gy) / (2.0 * L))


def bracket_coco_star(f, x, L: float, fstar: float) -> float:
    """[[x, *]] = f* - f(x) + ||grad f(x)||^2 / (2L)."""
    g = f.grad(x)
    return float(fstar - f.value(x) + np.dot(g, g) / (2.0 * L))


def _coco(fx, gx, x, fy, gy, y, L):
    # [[x, y]] from cached values
    return fy - fx + np.dot(gy, x - y) + np.dot(gx - gy, gx - gy) / (2.0 * L)


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """Positive weights w_0..w_N; ``role`` is "u" (function value) or "v" (gradient norm)."""

    values: np.ndarray
    role: Role = "u"
    strict: bool = field(default=True, repr=False)

    def __post_init__(self):
        w = np.array(self.values, dtype=float, copy=True)
        if w.ndim != 1 or len(w) < 2:
            raise ShapeError("weights need N + 1 >= 2 entries")
        if self.role not in ("u", "v"):
            raise ValueError("role must be 'u' or 'v'")
        if self.strict:
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValueError("weights must be positive and finite")
            if np.any(np.diff(w) < -1e-15 * np.max(np.abs(w))):
                raise ValueError("weights must be nondecreasing")
        w.setflags(write=False)
        object.__setattr__(self, "values", w)

    @property
    def n(self) -> int:
        return len(self.values) - 1

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def reciprocal_reversed(self) -> "WeightSequence":
        """w'_i = 1 / w_{N-i}, switching role."""
        return WeightSequence(1.0 / self.values[::-1], "v" if self.role == "u" else "u", self.strict)


def _w(weights) -> np.ndarray:
    if isinstance(weights, WeightSequence):
        return weights.values
    return np.asarray(weights, dtype=float)


def ogm_weights(n: int) -> WeightSequence:
    th = theta_sequence(n).values
    u = 2.0 * th**2
    u[n] = th[n] ** 2
    return WeightSequence(u, "u")


def ogmg_weights(n: int) -> WeightSequence:
    return ogm_weights(n).reciprocal_reversed()


def obl_f_weights(n: int) -> WeightSequence:
    i = np.arange(n + 1, dtype=float)
    u = (i + 1.0) * (i + 2.0) / 2.0
    g = obl_gamma(n)
    u[n] = g * g + g
    return WeightSequence(u, "u")


def obl_g_weights(n: int) -> WeightSequence:
    return obl_f_weights(n).reciprocal_reversed()


def gd_weights(n: int, h: float) -> WeightSequence:
    """u_i = (2Nh + 1)(i + 1)/(2N - i) for i < N and u_N = 2Nh + 1."""
    i = np.arange(n + 1, dtype=float)
    u = (2.0 * n * h + 1.0) * (i + 1.0) / (2.0 * n - i)
    u[n] = 2.0 * n * h + 1.0
    return WeightSequence(u, "u")


def gd_dual_weights(n: int, h: float) -> WeightSequence:
    """v_0 = 1/(2Nh + 1) and v_i = (N + i) / ((2Nh + 1)(N - i + 1)) for i >= 1."""
    return gd_weights(n, h).reciprocal_reversed()


def gogm_weights(ts: TSequence) -> WeightSequence:
    return WeightSequence(ts.T, "u")


def gogm_dual_weights(ts: TSequence) -> WeightSequence:
    return gogm_weights(ts).reciprocal_reversed()


# ---------------------------------------------------------------------------
# energies


def energy_U(traj: Trajectory, u, xstar: np.ndarray, fstar: float) -> np.ndarray:
    """U_{-1}, U_0, ..., U_N along a run, assuming grad f(x*) = 0.

    U_k = (L/2)||x_0 - x*||^2 + sum_{i<k} u_i [[x_i, x_{i+1}]]
          + sum_{i<=k} (u_i - u_{i-1}) [[x*, x_i]].
    """
    u = _w(u)
    n, L = traj.n, traj.lipschitz
    if len(u) != n + 1:
        raise ShapeError("weights and trajectory lengths differ")
    x, g, fv = traj.points, traj.grads, traj.fvals
    xstar = np.asarray(xstar, dtype=float)
    zero = np.zeros_like(xstar)
    out = np.empty(n + 2)
    out[0] = 0.5 * L * float(np.dot(x[0] - xstar, x[0] - xstar))
    prev_u = 0.0
    for k in range(n + 1):
        step = 0.0
        if k >= 1:
            step = u[k - 1] * _coco(fv[k - 1], g[k - 1], x[k - 1], fv[k], g[k], x[k], L)
        star = (u[k] - prev_u) * _coco(fstar, zero, xstar, fv[k], g[k], x[k], L)
        out[k + 1] = out[k] + step + star
        prev_u = u[k]
    return out


def energy_V(traj: Trajectory, v, fstar: float) -> np.ndarray:
    """V_0, ..., V_N along a run.

    V_k = v_0 (f(y_0) - f* + [[y_N, *]]) + sum_{i<k} v_{i+1} [[y_i, y_{i+1}]]
          + sum_{i<k} (v_{i+1} - v_i) [[y_N, y_i]].
    """
    v = _w(v)
    n, L = traj.n, traj.lipschitz
    if len(v) != n + 1:
        raise ShapeError("weights and trajectory lengths differ")
    y, g, fv = traj.points, traj.grads, traj.fvals
    out = np.empty(n + 1)
    gN = g[n]
    out[0] = v[0] * (fv[0] - fstar + fstar - fv[n] + float(np.dot(gN, gN)) / (2.0 * L))
    for k in range(n):
        step = v[k + 1] * _coco(fv[k], g[k], y[k], fv[k + 1], g[k + 1], y[k + 1], L)
        tail = (v[k + 1] - v[k]) * _coco(fv[n], gN, y[n], fv[k], g[k], y[k], L)
        out[k + 1] = out[k] + step + tail
    return out


# ---------------------------------------------------------------------------
# certificate matrices


@dataclass(frozen=True, eq=False)
class CertificateMatrix:
    """Symmetric (N+1) x (N+1) coefficients of <g_i, g_j> / L."""

    entries: np.ndarray
    role: Literal["S", "T"]

    def __post_init__(self):
        a = np.array(self.entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError("certificate matrix must be square")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0] - 1

    def quadratic_form(self, g: np.ndarray, L: float = 1.0) -> float:
        """sum_ij entries[i, j] <g_i, g_j> / L for a bundle ``g`` of shape (N+1, d)."""
        g = np.asarray(g, dtype=float)
        return float(np.sum(self.entries * (g @ g.T)) / L)


def _lower_to_sym(lower: np.ndarray) -> np.ndarray:
    return 0.5 * (lower + lower.T)


def _padded(H: StepsizeMatrix) -> np.ndarray:
    # rows shifted down by one: row i+1 holds the coefficients of x_i - x_{i+1}
    n = H.n
    a = np.zeros((n + 1, n + 1))
    a[1:, :n] = H.entries
    return a


def build_S(H: StepsizeMatrix, u, route: str = "entrywise") -> CertificateMatrix:
    """Primal certificate matrix.

    ``route="entrywise"`` uses the closed-form coefficients s_ij (compiled
    kernel when available); ``route="assembly"`` sums the rank-one vector
    pieces directly.  The two agree to rounding.
    """
    u = _w(u)
    if len(u) != H.n + 1:
        raise ShapeError("weights must have N + 1 entries")
    if route == "entrywise":
        return CertificateMatrix(_lower_to_sym(_backend.s_coefficients(H.entries, u)), "S")
    if route != "assembly":
        raise ValueError(f"unknown route {route!r}")
    n = H.n
    e = np.vstack([np.eye(n + 1), np.zeros((1, n + 1))])  # e[N+1] = 0
    Hc = _padded(H)
    du = np.diff(np.concatenate([[0.0], u]))
    S = -0.5 * np.outer(du, du)
    prefix = np.zeros(n + 1)
    acc = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        prefix = prefix + e[i]
        acc += u[i] * np.outer(Hc.T @ prefix, e[i] - e[i + 1])
        d = e[i] - e[i + 1]
        S += 0.5 * u[i] * (np.outer(d, e[i]) + np.outer(e[i], d))
    S += 0.5 * (acc + acc.T)
    S -= 0.5 * u[n] * np.outer(e[n], e[n])
    return CertificateMatrix(S, "S")


def build_T(HA: StepsizeMatrix, v, route: str = "entrywise") -> CertificateMatrix:
    """Dual certificate matrix of the method ``HA`` with weights ``v``."""
    v = _w(v)
    if len(v) != HA.n + 1:
        raise ShapeError("weights must have N + 1 entries")
    if route == "entrywise":
        return CertificateMatrix(_lower_to_sym(_backend.t_coefficients(HA.entries, v)), "T")
    if route != "assembly":
        raise ValueError(f"unknown route {route!r}")
    n = HA.n
    eye = np.eye(n + 1)
    zero = np.zeros(n + 1)

    def e(i):
        return eye[i] if 0 <= i <= n else zero

    Hc = _padded(HA)
    T = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        a = e(i - 1) - e(i)
        b = e(i - 1) - e(n)
        T += 0.5 * v[i] * (np.outer(a, b) + np.outer(b, a))
        tail = eye[i:].sum(axis=0)
        c = Hc.T @ tail
        d = e(i) - e(i - 1)
        T += 0.5 * v[i] * (np.outer(c, d) + np.outer(d, c))
    T -= 0.5 * v[0] * np.outer(e(0), e(0))
    T -= 0.5 * np.outer(e(n), e(n))
    return CertificateMatrix(T, "T")


def raw_U(H: StepsizeMatrix, u, g: np.ndarray, L: float, x0: np.ndarray | None = None) -> float:
    """The primal certificate quantity evaluated from its defining sums.

    ``g`` is an arbitrary bundle of N+1 vectors standing in for the
    gradients; iterates are generated from ``x0`` by the step sizes H.
    """
    u = _w(u)
    n = H.n
    g = np.asarray(g, dtype=float)
    x = np.empty_like(g)
    x[0] = np.zeros(g.shape[1]) if x0 is None else x0
    for k in range(n):
        x[k + 1] = x[k] - (H.entries[k, : k + 1] @ g[: k + 1]) / L
    du = np.diff(np.concatenate([[0.0], u]))
    s = du @ g
    total = -float(np.dot(s, s)) / (2.0 * L)
    for i in range(n + 1):
        total += du[i] * (float(np.dot(g[i], x[0] - x[i])) + float(np.dot(g[i], g[i])) / (2.0 * L))
    for i in range(n):
        dg = g[i] - g[i + 1]
        total += u[i] * (float(np.dot(g[i + 1], x[i] - x[i + 1])) + float(np.dot(dg, dg)) / (2.0 * L))
    return total


def raw_V(HA: StepsizeMatrix, v, g: np.ndarray, L: float, y0: np.ndarray | None = None) -> float:
    """The dual certificate quantity evaluated from its defining sums."""
    v = _w(v)
    n = HA.n
    g = np.asarray(g, dtype=float)
    y = np.empty_like(g)
    y[0] = np.zeros(g.shape[1]) if y0 is None else y0
    for k in range(n):
        y[k + 1] = y[k] - (HA.entries[k, : k + 1] @ g[: k + 1]) / L
    gN = g[n]
    total = (v[0] - 1.0) * float(np.dot(gN, gN)) / (2.0 * L)
    for i in range(n):
        dg = g[i] - g[i + 1]
        total += v[i + 1] * (float(np.dot(g[i + 1], y[i] - y[i + 1])) + float(np.dot(dg, dg)) / (2.0 * L))
        dn = g[i] - gN
        total += (v[i + 1] - v[i]) * (float(np.dot(g[i], y[n] - y[i])) + float(np.dot(dn, dn)) / (2.0 * L))
    return total


# ---------------------------------------------------------------------------
# congruence


@dataclass(frozen=True, eq=False)
class DualityTransform:
    """The invertible matrix M(u) with S(H, u) = M^T T(H^A, v) M."""

    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0] - 1


def build_M(u) -> DualityTransform:
    """Row 0 is u_N e_N; row r >= 1 is u_{N-r} e_{N-r} + sum_{c > N-r} (u_c - u_{c-1}) e_c."""
    u = _w(u)
    n = len(u) - 1
    if np.any(u <= 0):
        raise ValueError("weights must be positive")
    M = np.zeros((n + 1, n + 1))
    M[0, n] = u[n]
    for r in range(1, n + 1):
        j = n - r
        M[r, j] = u[j]
        for c in range(j + 1, n + 1):
            M[r, c] = u[c] - u[c - 1]
    M.setflags(write=False)
    return DualityTransform(M)


@dataclass(frozen=True)
class CongruenceReport:
    max_abs_residual: float
    scale: float
    passed: bool


def verify_congruence(H: StepsizeMatrix, u, tol: float = CONGRUENCE_TOL) -> CongruenceReport:
    """Check S(H, u) = M(u)^T T(H^A, v) M(u) with v_i = 1/u_{N-i}."""
    u = _w(u)
    v = 1.0 / u[::-1]
    S = build_S(H, u).entries
    T = build_T(anti_transpose(H), v).entries
    M = build_M(u).entries
    res = float(np.max(np.abs(S - M.T @ T @ M)))
    scale = max(1.0, float(np.max(np.abs(S))))
    return CongruenceReport(res, scale, res <= tol * scale)


# ---------------------------------------------------------------------------
# verdicts and rates


def min_eigenvalue(A: np.ndarray) -> tuple[float, float]:
    """(smallest eigenvalue, spectral radius) via cyclic Jacobi."""
    ev = _backend.jacobi_eigenvalues(np.asarray(A, dtype=float))
    return float(ev[0]), float(np.max(np.abs(ev)))


@dataclass(frozen=True, eq=False)
class Verdict:
    kind: Kind
    n: int
    weights: np.ndarray
    min_eig: float
    spectral_radius: float
    passed: bool
    matrix: CertificateMatrix = field(repr=False)


def _verdict(kind: Kind, mat: CertificateMatrix, weights: np.ndarray, tol: float) -> Verdict:
    lam, rho = min_eigenvalue(mat.entries)
    return Verdict(kind, mat.n, np.array(weights), lam, rho, lam >= -tol * max(1.0, rho), mat)


def check_C1(H: StepsizeMatrix, u, tol: float = PSD_TOL) -> Verdict:
    """Primal condition: S(H, u) is positive semidefinite."""
    u = _w(u)
    return _verdict("C1", build_S(H, u), u, tol)


def check_C2(HA: StepsizeMatrix, v, tol: float = PSD_TOL) -> Verdict:
    """Dual condition: T(H^A, v) is positive semidefinite."""
    v = _w(v)
    return _verdict("C2", build_T(HA, v), v, tol)


@dataclass(frozen=True)
class RateBound:
    """A guaranteed bound ``quantity <= coefficient * reference``."""

    kind: Kind
    coefficient: float
    quantity: str
    reference: str
    formula: str

    def value(self, L: float, distance_sq: float | None = None, fgap0: float | None = None) -> float:
        if self.kind == "C1":
            if distance_sq is None:
                raise ValueError("the primal bound needs ||x_0 - x*||^2")
            return self.coefficient * 0.5 * L * distance_sq
        if fgap0 is None:
            raise ValueError("the dual bound needs f(y_0) - f*")
        return self.coefficient * fgap0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "quantity": self.quantity,
            "reference": self.reference,
            "formula": self.formula,
            "coefficient": self.coefficient,
        }


def rate_from_certificate(verdict: Verdict) -> RateBound:
    """The rate implied by a passing verdict; refuses failed ones."""
    if not verdict.passed:
        raise CertificateError(f"{verdict.kind} did not verify (min eigenvalue {verdict.min_eig:.3e})")
    w = verdict.weights
    if verdict.kind == "C1":
        return RateBound("C1", 1.0 / float(w[-1]), "f(x_N) - f*", "(L/2)||x_0 - x*||^2", "(1/u_N) * (L/2) * ||x_0 - x*||^2")
    return RateBound("C2", float(w[0]), "||grad f(y_N)||^2 / (2L)", "f(y_0) - f*", "v_0 * (f(y_0) - f*)")


def gd_gradient_corollary_bound(n: int, h: float, mode: str = "fgap") -> float:
    """Coefficient of the gradient bound for plain gradient descent.

    ||grad f(x_N)||^2 / (2L) is at most ``coef * (f(x_0) - f*)`` in mode
    "fgap" and ``coef * L ||x_0 - x*||^2`` in mode "distance".
    """
    if not 0.0 < h <= 1.0:
        raise ValueError("step size h must lie in (0, 1]")
    if mode == "fgap":
        return 1.0 / (2.0 * n * h + 1.0)
    if mode == "distance":
        lo, hi = n // 2, (n + 1) // 2
        return 1.0 / (2.0 * (2.0 * lo * h + 1.0) * (2.0 * hi * h + 1.0))
    raise ValueError(f"unknown mode {mode!r}")


def gd_gradient_bound_value(n: int, h: float, L: float, fgap0: float, distance_sq: float) -> float:
    """min of the two branches, as a bound on ||grad f(x_N)||^2 / (2L)."""
    return min(
        gd_gradient_corollary_bound(n, h, "fgap") * fgap0,
        gd_gradient_corollary_bound(n, h, "distance") * L * distance_sq,
    )


@dataclass(frozen=True)
class CertificateReport:
    kind: Kind
    n: int
    min_eig: float
    residual_congruence: float
    passed: bool
    bound: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "n": self.n,
                "min_eig": self.min_eig,
                "residual_congruence": self.residual_congruence,
                "pass": self.passed,
                "bound": self.bound,
            },
            sort_keys=True,
        )


def certificate_report(H: StepsizeMatrix, weights, kind: Kind) -> CertificateReport:
    """Verdict plus congruence residual for a method/weight pair.

    For ``kind="C1"`` the matrix is the primal method and ``weights`` are u;
    for ``"C2"`` it is the dual method and ``weights`` are v, and the
    congruence is checked on the primal pair (H^A, u) with u_i = 1/v_{N-i}.
    """
    w = _w(weights)
    if kind == "C1":
        verdict = check_C1(H, w)
        cong = verify_congruence(H, w)
    elif kind == "C2":
        verdict = check_C2(H, w)
        cong = verify_congruence(anti_transpose(H), 1.0 / w[::-1])
    else:
        raise ValueError("kind must be C1 or C2")
    passed = verdict.passed and cong.passed
    if verdict.passed:
        bound = rate_from_certificate(verdict).to_dict()
    else:
        bound = {"kind": kind, "formula": None, "coefficient": None}
    return CertificateReport(kind, H.n, verdict.min_eig, cong.max_abs_residual, passed, bound)
