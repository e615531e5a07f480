"""Composite minimization F = f + g with proximal steps.

The alpha-proximal step at y is

    y^{+a} = prox_{g / (a L)}(y - grad f(y) / (a L)),

and a composite fixed-step method moves along the scaled gradient mappings
a (x_i - x_i^{+a}).  With g = 0 and a = 1 everything reduces to the smooth
setting of :mod:`hdual.method_lib`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hdual.certify import build_M, build_T
from hdual.errors import DivergenceError, FeasibilityError
from hdual.method_lib import (
    StepsizeMatrix,
    ThreeTermCoeffs,
    TSequence,
    anti_transpose,
    dual_three_term,
    gogm_coeffs,
    three_term_to_H,
)
from hdual.testbed import CompositeOracle


@dataclass(frozen=True)
class ProxParams:
    alpha: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


def prox_step(F: CompositeOracle, y: np.ndarray, alpha: float = 1.0) -> np.ndarray:
    """y^{+a} = prox_{g/(aL)}(y - grad f(y)/(aL))."""
    step = 1.0 / (alpha * F.L)
    return F.g.prox(y - step * F.f.grad(y), step)


def prox_residual(F: CompositeOracle, y: np.ndarray, alpha: float = 1.0) -> float:
    """Distance from -(La (y^+ - y) + grad f(y)) to the subdifferential of g at y^+."""
    yp = prox_step(F, y, alpha)
    w = -(F.L * alpha * (yp - y) + F.f.grad(y))
    return F.g.subdiff_distance(yp, w)


def prox_grad_bracket(F: CompositeOracle, x: np.ndarray, y: np.ndarray, alpha: float = 1.0) -> float:
    """F(y^+) - F(x^+) - La <y^+ - y, x^+ - y^+> - (L/2)||y^+ - y||^2, nonpositive."""
    xp = prox_step(F, x, alpha)
    yp = prox_step(F, y, alpha)
    L = F.L
    d = yp - y
    return float(F.value(yp) - F.value(xp) - L * alpha * np.dot(d, xp - yp) - 0.5 * L * np.dot(d, d))


@dataclass(frozen=True, eq=False)
class CompositeTrajectory:
    """Iterates, their alpha-prox points and F at the prox points."""

    points: np.ndarray
    prox_points: np.ndarray
    Fvals: np.ndarray
    lipschitz: float
    alpha: float

    @property
    def n(self) -> int:
        return self.points.shape[0] - 1


def _record(F, x, alpha, k):
    if not np.all(np.isfinite(x)):
        raise DivergenceError(k)
    xp = prox_step(F, x, alpha)
    if not np.all(np.isfinite(xp)):
        raise DivergenceError(k)
    return xp


def run_composite(H: StepsizeMatrix, F: CompositeOracle, x0: np.ndarray, alpha: float = 1.0) -> CompositeTrajectory:
    """x_{k+1} = x_k - sum_{i<=k} a H[k, i] (x_i - x_i^{+a})."""
    n = H.n
    x0 = np.asarray(x0, dtype=float)
    pts = np.empty((n + 1, x0.size))
    prox = np.empty_like(pts)
    pts[0] = x0
    for k in range(n + 1):
        prox[k] = _record(F, pts[k], alpha, k)
        if k < n:
            pts[k + 1] = pts[k] - alpha * (H.entries[k, : k + 1] @ (pts[: k + 1] - prox[: k + 1]))
    Fv = np.array([F.value(p) for p in prox])
    return CompositeTrajectory(pts, prox, Fv, F.L, alpha)


def run_composite_three_term(c: ThreeTermCoeffs, F: CompositeOracle, x0: np.ndarray, alpha: float = 1.0) -> CompositeTrajectory:
    """x_{k+1} = x_k^{+a} + beta_k (x_k^{+a} - x_{k-1}^{+a}) + gamma_k (x_k^{+a} - x_k), x_{-1}^{+a} = x_0."""
    n = c.n
    x = np.asarray(x0, dtype=float).copy()
    pts, prox = [], []
    prev = x.copy()
    for k in range(n + 1):
        xp = _record(F, x, alpha, k)
        pts.append(x)
        prox.append(xp)
        if k == n:
            break
        x = xp + c.beta[k] * (xp - prev) + c.gamma[k] * (xp - x)
        prev = xp
    prox_arr = np.array(prox)
    Fv = np.array([F.value(p) for p in prox_arr])
    return CompositeTrajectory(np.array(pts), prox_arr, Fv, F.L, alpha)


# ---------------------------------------------------------------------------
# GFPGM


def gfpgm_H(ts: TSequence, check: bool = True) -> StepsizeMatrix:
    """Step sizes of the generalized fast proximal gradient method (a = 1).

    Diagonal 1 + (t_k - 1) t_{k+1} / T_{k+1}; the off-diagonal part of row k
    is the previous row (diagonal minus one) times
    beta_k = (T_k - t_k) t_{k+1} / (t_k T_{k+1}).
    """
    if check:
        ts.check_gfpgm()
    t, T, n = ts.t, ts.T, ts.n
    a = np.zeros((n, n))
    for k in range(n):
        beta = (T[k] - t[k]) * t[k + 1] / (t[k] * T[k + 1])
        a[k, k] = 1.0 + (t[k] - 1.0) * t[k + 1] / T[k + 1]
        if k >= 1:
            a[k, k - 1] = beta * (a[k - 1, k - 1] - 1.0)
        for i in range(k - 1):
            a[k, i] = beta * a[k - 1, i]
    return StepsizeMatrix(a)


def gfpgm_coeffs(ts: TSequence) -> ThreeTermCoeffs:
    return gogm_coeffs(ts)


def composite_energy_U(traj: CompositeTrajectory, F: CompositeOracle, u, xstar: np.ndarray) -> np.ndarray:
    """Energy of the composite primal method with prox-grad brackets in place of [[.,.]]."""
    u = np.asarray(u, dtype=float)
    n, L, alpha = traj.n, traj.lipschitz, traj.alpha
    x = traj.points
    out = np.empty(n + 2)
    out[0] = 0.5 * L * float(np.dot(x[0] - xstar, x[0] - xstar))
    prev = 0.0
    for k in range(n + 1):
        step = u[k - 1] * prox_grad_bracket(F, x[k - 1], x[k], alpha) if k >= 1 else 0.0
        star = (u[k] - prev) * prox_grad_bracket(F, xstar, x[k], alpha)
        out[k + 1] = out[k] + step + star
        prev = u[k]
    return out


def gfpgm_bound(ts: TSequence, L: float, distance_sq: float) -> float:
    """F(x_N^{+1}) - F* <= (1/T_N)(L/2)||x_0 - x*||^2."""
    return 0.5 * L * distance_sq / ts.T[-1]


# ---------------------------------------------------------------------------
# correction matrix and the SFG family


@dataclass(frozen=True, eq=False)
class CompositeCorrection:
    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def build_C(ts: TSequence) -> CompositeCorrection:
    """Lower-triangular correction C with c_{1,0} = t_1/T_1,

    c_{k+1,k} = (t_{k+1}/T_{k+1}) (t_k/T_0 + t_k sum_{j<=k-2} 1/T_j + T_k/T_{k-1}),
    and c_{k+1,i} = beta_k c_{k,i} below the diagonal.
    """
    t, T, n = ts.t, ts.T, ts.n
    c = np.zeros((n, n))
    inv_sum = 0.0  # sum_{j=0}^{k-2} 1/T_j
    for k in range(n):
        if k == 0:
            c[0, 0] = t[1] / T[1]
            continue
        if k >= 2:
            inv_sum += 1.0 / T[k - 2]
        c[k, k] = t[k + 1] / T[k + 1] * (t[k] / T[0] + t[k] * inv_sum + T[k] / T[k - 1])
        beta = t[k + 1] * (T[k] - t[k]) / (t[k] * T[k + 1])
        c[k, :k] = beta * c[k - 1, :k]
    c.setflags(write=False)
    return CompositeCorrection(c)


def claim_matrices(ts: TSequence) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the correction-matrix identity.

    Left: 2 (sum_i T_i (e_i - e_{i+1})(e_0 + ... + e_i)^T) Cpad, with Cpad the
    correction shifted one row down.  Right: the symmetric combination of
    f-basis outer products and diagonal terms, where the diagonal term for
    index i carries t_i^2 (1/T_0 + sum_{j<=i-2} 1/T_j), the same sum as in
    the family condition.  The left side is strictly lower triangular and the
    right side symmetric with zero diagonal, so the identity holds between
    quadratic forms: ``(left + left.T) / 2 == right``.
    """
    t, T, n = ts.t, ts.T, ts.n
    C = build_C(ts).entries
    Cpad = np.zeros((n + 1, n + 1))
    Cpad[1:, :n] = C
    eye = np.vstack([np.eye(n + 1), np.zeros((1, n + 1))])
    P = np.zeros((n + 1, n + 1))
    prefix = np.zeros(n + 1)
    for i in range(n + 1):
        prefix = prefix + eye[i]
        P += T[i] * np.outer(eye[i] - eye[i + 1], prefix)
    left = 2.0 * P @ Cpad
    fb = build_M(T).entries  # row j is f_j
    right = np.zeros((n + 1, n + 1))
    for i in range(1, n + 1):
        right += np.outer(fb[n - i], fb[n - i]) / T[i - 1]
    right += np.outer(fb[n], fb[n]) / T[0]
    right[0, 0] -= T[0]
    inv_sum = 0.0
    for i in range(1, n + 1):
        if i >= 2:
            inv_sum += 1.0 / T[i - 2]
        right[i, i] -= T[i] ** 2 / T[i - 1] + t[i] ** 2 * (1.0 / T[0] + inv_sum)
    return left, right


def claim_residual(ts: TSequence) -> float:
    left, right = claim_matrices(ts)
    return float(np.max(np.abs(0.5 * (left + left.T) - right)))


def sfg_condition_slack(ts: TSequence, alpha: float) -> np.ndarray:
    """Left minus right side of each family condition, indices 0..N."""
    t, T, n = ts.t, ts.T, ts.n
    out = np.empty(n + 1)
    out[0] = alpha * (2.0 * T[0] - t[0] ** 2) - T[0]
    inv_sum = 0.0
    for k in range(1, n + 1):
        if k >= 2:
            inv_sum += 1.0 / T[k - 2]
        rhs = T[k] ** 2 / T[k - 1] + t[k] ** 2 * (1.0 / T[0] + inv_sum)
        out[k] = alpha * (2.0 * T[k] - t[k] ** 2) - rhs
    return out


def check_sfg_condition(ts: TSequence, alpha: float, rtol: float = 1e-12) -> None:
    slack = sfg_condition_slack(ts, alpha)
    scale = np.maximum(1.0, np.abs(alpha * 2.0 * ts.T))
    bad = np.nonzero(slack < -rtol * scale)[0]
    if bad.size:
        raise FeasibilityError(int(bad[0]), "alpha (2 T_k - t_k^2) >= T_k^2/T_{k-1} + t_k^2 (1/T_0 + sum 1/T_i)")


@dataclass(frozen=True, eq=False)
class SFGFamily:
    """A member of the SFG family: step sizes and both momentum forms."""

    H: StepsizeMatrix
    primal: ThreeTermCoeffs
    dual: ThreeTermCoeffs
    alpha: float
    ts: TSequence

    def rate_coefficient(self) -> float:
        """(aL/2)||y_N^+ - y_N||^2 <= coef * (F(y_0) - F*)."""
        return 1.0 / self.ts.T[-1]

    def subgrad_constant(self) -> float:
        """min ||v||^2 over dF(y_N^+) <= const * L (F(y_0) - F*)."""
        return 2.0 * (self.alpha + 1.0) ** 2 / (self.alpha * self.ts.T[-1])


def sfg_family(ts: TSequence, alpha: float, check: bool = True) -> SFGFamily:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if check:
        check_sfg_condition(ts, alpha)
    H0 = gfpgm_H(ts, check=False).entries
    C = build_C(ts).entries
    H = anti_transpose(StepsizeMatrix(H0 / alpha + C / alpha**2))
    base = gogm_coeffs(ts)
    n = ts.n
    gamma = base.gamma + np.array([C[k, k] for k in range(n)]) / alpha
    primal = ThreeTermCoeffs(base.beta, gamma)
    return SFGFamily(H, primal, dual_three_term(primal), float(alpha), ts)


def sfg_family_H(ts: TSequence, alpha: float) -> StepsizeMatrix:
    return sfg_family(ts, alpha).H


def sfg_family_certificate(fam: SFGFamily) -> np.ndarray:
    """M^T Tplus M for a family member; diagonal with the condition slacks when the derivation holds.

    Tplus collects the dissipation slack of the family's energy function in
    the scaled gradient-mapping coordinates; M uses the weights T_i.
    """
    ts, a = fam.ts, fam.alpha
    n = ts.n
    T = ts.T
    v = 1.0 / T[::-1]
    zero = StepsizeMatrix(np.zeros((n, n)))
    full = 2.0 * build_T(fam.H, v, route="assembly").entries
    rest = 2.0 * build_T(zero, v, route="assembly").entries
    Tplus = a * a * (full - rest) + a * rest
    Tplus[0, 0] += a / T[n]
    for i in range(n):
        Tplus[i, i] -= 1.0 / T[n - 1 - i]
    Tplus[n, n] -= 1.0 / T[0]
    M = build_M(T).entries
    return M.T @ Tplus @ M


def sfg_tseq(n: int) -> TSequence:
    """T_i = (i+2)(i+3)/4, i.e. t_0 = 3/2 and t_i = (i+2)/2."""
    t = (np.arange(n + 1) + 2.0) / 2.0
    t[0] = 1.5
    return TSequence(t)


def sfg_coeffs(n: int) -> ThreeTermCoeffs:
    """Closed-form momentum coefficients of SFG (a = 4)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    beta = np.empty(n)
    gamma = np.empty(n)
    for k in range(n - 1):
        m = n - k
        den = (m + 3.0) * (2.0 * m + 1.0)
        beta[k] = (m + 1.0) * (2.0 * m - 1.0) / den
        gamma[k] = (4.0 * m - 1.0) * (2.0 * m - 1.0) / (6.0 * den)
    beta[n - 1] = 3.0 / 10.0
    gamma[n - 1] = 3.0 / 40.0
    return ThreeTermCoeffs(beta, gamma)


def sfg_H(n: int) -> StepsizeMatrix:
    """Composite step sizes of SFG: three-term coefficients scaled by 1/a, a = 4."""
    return three_term_to_H(sfg_coeffs(n)).scaled(0.25)


SFG_ALPHA = 4.0


def sfg_bound(n: int, L: float, fgap0: float) -> float:
    """min ||v||^2 over dF(y_N^{+4}) <= 50 L (F(y_0) - F*) / ((N+2)(N+3))."""
    return 50.0 * L * fgap0 / ((n + 2.0) * (n + 3.0))


def gradient_mapping_bound(F: CompositeOracle, y: np.ndarray, alpha: float = 1.0, exact: bool = True):
    """(L(a+1)||y - y^{+a}||, exact min subgradient norm at y^{+a} or None)."""
    yp = prox_step(F, y, alpha)
    bound = F.L * (alpha + 1.0) * float(np.linalg.norm(y - yp))
    ex = F.min_subgrad_norm(yp) if exact else None
    return bound, ex


# ---------------------------------------------------------------------------
# equality-case family members for the alpha sweep


def sfg_equality_tseq(n: int, alpha: float) -> TSequence:
    """Largest-T sequence meeting every family condition with equality."""
    if not alpha > 0.5:
        raise ValueError("alpha must exceed 1/2")
    T0 = 2.0 - 1.0 / alpha
    t = [T0]
    T = [T0]
    inv_sum = 0.0
    for k in range(1, n + 1):
        if k >= 2:
            inv_sum += 1.0 / T[k - 2]
        P = T[-1]
        qa = alpha + 1.0 / P + 1.0 / T0 + inv_sum
        qb = 2.0 - 2.0 * alpha
        qc = P - 2.0 * alpha * P
        tk = (-qb + math.sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa)
        t.append(tk)
        T.append(P + tk)
    return TSequence(np.array(t))


def sweep_constant(n: int, alpha: float) -> float:
    """N^2 times the subgradient constant of the equality-case member."""
    ts = sfg_equality_tseq(n, alpha)
    return n * n * 2.0 * (alpha + 1.0) ** 2 / (alpha * ts.T[-1])


# ---------------------------------------------------------------------------
# reference solver


def reference_minimize(F: CompositeOracle, x0: np.ndarray | None = None, max_iter: int = 200000, tol: float = 1e-15):
    """Accurate minimizer of F for fixtures.

    Accelerated proximal gradient (a = 1, T_i = t_i^2) with gradient-based
    momentum restart, stopped when the iterate change stalls.
    """
    x = np.zeros(F.dim) if x0 is None else np.asarray(x0, dtype=float).copy()
    y = x.copy()
    t = 1.0
    stall = 0
    for _ in range(max_iter):
        xn = prox_step(F, y, 1.0)
        if np.dot(y - xn, xn - x) > 0.0:
            t = 1.0
            y = x.copy()
            continue
        tn = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        y = xn + (t - 1.0) / tn * (xn - x)
        change = float(np.linalg.norm(xn - x))
        x, t = xn, tn
        if change <= tol * max(1.0, float(np.linalg.norm(x))):
            stall += 1
            if stall >= 5:
                break
        else:
            stall = 0
    return x, F.value(x)
