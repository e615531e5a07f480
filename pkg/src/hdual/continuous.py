"""Continuous-time fixed-step methods: kernels, friction ODEs and energies.

A continuous method with kernel H moves by

    X'(t) = -int_0^t H(t, s) grad f(X(s)) ds,

and its dual uses H^A(t, s) = H(T - s, T - t).  Two kernel families are
covered: the p-family H(t, s) = C p^2 s^{2p-1} / t^{p+1} and the r-family
H(t, s) = (s / t)^r.  Both reduce to second-order ODEs with a friction term,
which are integrated with an adaptive Runge-Kutta pair.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from hdual.errors import IntegrationError
from hdual.testbed import ConvexOracle

RTOL = 1e-8
ATOL = 1e-10
START_FRACTION = 1e-6


@dataclass(frozen=True)
class ContinuousKernel:
    """Kernel of the p-family (``family="p"``) or the r-family (``family="r"``)."""

    T: float
    family: str = "p"
    p: float = 2.0
    C: float = 0.5
    r: float = 3.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.family == "p":
            if self.p < 2 or not self.C > 0:
                raise ValueError("p-family needs p >= 2 and C > 0")
        elif self.family == "r":
            if self.r < 3:
                raise ValueError("r-family needs r >= 3")
        else:
            raise ValueError(f"unknown kernel family {self.family!r}")

    @classmethod
    def power(cls, p: float, C: float, T: float) -> "ContinuousKernel":
        return cls(T=T, family="p", p=p, C=C)

    @classmethod
    def ratio(cls, r: float, T: float) -> "ContinuousKernel":
        return cls(T=T, family="r", r=r)

    def H(self, t, s):
        if self.family == "p":
            return self.C * self.p**2 * s ** (2 * self.p - 1) / t ** (self.p + 1)
        return (s / t) ** self.r

    def HA(self, t, s):
        return self.H(self.T - s, self.T - t)

    # ODE form: x'' + friction(t) x' + coefficient(t) grad f(x) = 0
    def primal_friction(self, t):
        return (self.p + 1) / t if self.family == "p" else self.r / t

    def dual_friction(self, t):
        tau = self.T - t
        return (2 * self.p - 1) / tau if self.family == "p" else self.r / tau

    def primal_coefficient(self, t):
        if self.family == "p":
            return self.C * self.p**2 * t ** (self.p - 2)
        return 1.0

    def dual_coefficient(self, t):
        if self.family == "p":
            return self.C * self.p**2 * (self.T - t) ** (self.p - 2)
        return 1.0

    def start_series(self, eps: float):
        """Leading-order (displacement, velocity) factors multiplying -grad f(x0) at t = eps."""
        if self.family == "p":
            return 0.5 * self.C * eps**self.p, 0.5 * self.C * self.p * eps ** (self.p - 1)
        return eps * eps / (2 * (self.r + 1)), eps / (self.r + 1)

    def terminal_order(self) -> float:
        """Exponent q with Y'(t) ~ (T - t)^q grad f(Y(T)) as t -> T."""
        return self.p - 1 if self.family == "p" else 1.0

    def weights(self) -> "ContinuousWeights":
        return ContinuousWeights(self)


@dataclass(frozen=True)
class ContinuousWeights:
    """Energy weights u(t) and v(t) = 1 / u(T - t)."""

    kernel: ContinuousKernel

    def u(self, t):
        k = self.kernel
        if k.family == "p":
            return k.C * np.asarray(t, dtype=float) ** k.p
        return np.asarray(t, dtype=float) ** 2 / (2 * (k.r - 1))

    def du(self, t):
        k = self.kernel
        if k.family == "p":
            return k.C * k.p * np.asarray(t, dtype=float) ** (k.p - 1)
        return np.asarray(t, dtype=float) / (k.r - 1)

    def v(self, t):
        return 1.0 / self.u(self.kernel.T - np.asarray(t, dtype=float))

    def dv(self, t):
        tau = self.kernel.T - np.asarray(t, dtype=float)
        return self.du(tau) / self.u(tau) ** 2


@dataclass(frozen=True, eq=False)
class OdeTrajectory:
    """Samples of a primal (X) or dual (Y) trajectory on a strictly increasing grid."""

    side: str
    kernel: ContinuousKernel
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    grads: np.ndarray
    fvals: np.ndarray
    oracle: ConvexOracle = field(repr=False)
    terminal_point: Optional[np.ndarray] = None
    terminal_grad: Optional[np.ndarray] = None

    def final_point(self) -> np.ndarray:
        return self.points[-1] if self.terminal_point is None else self.terminal_point

    def final_grad(self) -> np.ndarray:
        return self.grads[-1] if self.terminal_grad is None else self.terminal_grad

    def to_csv(self, coordinates: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["t", "f", "grad_norm"]
        if coordinates:
            header += [f"x{j}" for j in range(self.points.shape[1])]
        w.writerow(header)
        for t, fv, g, x in zip(self.times, self.fvals, self.grads, self.points):
            row = [repr(float(t)), repr(float(fv)), repr(float(np.linalg.norm(g)))]
            if coordinates:
                row += [repr(float(c)) for c in x]
            w.writerow(row)
        return buf.getvalue()


def _integrate(friction, coefficient, oracle, t0, t1, x0, v0, refine, rtol, atol):
    """Integrate x'' = -friction(t) x' - coefficient(t) grad f(x) and sample densely."""
    d = x0.size

    def rhs(t, z):
        x, v = z[:d], z[d:]
        return np.concatenate([v, -friction(t) * v - coefficient(t) * oracle.grad(x)])

    sol = solve_ivp(rhs, (t0, t1), np.concatenate([x0, v0]), method="RK45", rtol=rtol, atol=atol, dense_output=True)
    if sol.status != 0:
        raise IntegrationError(sol.message)
    knots = sol.t
    pieces = [np.linspace(a, b, refine + 1)[:-1] for a, b in zip(knots[:-1], knots[1:])]
    grid = np.concatenate(pieces + [knots[-1:]])
    z = sol.sol(grid)
    z[:, 0] = np.concatenate([x0, v0])
    z[:, -1] = sol.y[:, -1]
    X = z[:d].T.copy()
    V = z[d:].T.copy()
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(V))):
        raise IntegrationError("non-finite state")
    G = np.array([oracle.grad(x) for x in X])
    F = np.array([oracle.value(x) for x in X])
    return grid, X, V, G, F


def integrate_primal(kernel: ContinuousKernel, oracle: ConvexOracle, x0, refine: int = 8,
                     rtol: float = RTOL, atol: float = ATOL) -> OdeTrajectory:
    """Primal ODE from t = eps (series start) to T."""
    x0 = np.asarray(x0, dtype=float)
    eps = START_FRACTION * kernel.T
    g0 = oracle.grad(x0)
    disp, vel = kernel.start_series(eps)
    grid, X, V, G, F = _integrate(kernel.primal_friction, kernel.primal_coefficient, oracle, eps, kernel.T,
                                  x0 - disp * g0, -vel * g0, refine, rtol, atol)
    # prepend the exact initial point so energies see X(0) = x0
    grid = np.concatenate([[0.0], grid])
    X = np.vstack([x0, X])
    V = np.vstack([np.zeros_like(x0), V])
    G = np.vstack([g0, G])
    F = np.concatenate([[oracle.value(x0)], F])
    return OdeTrajectory("primal", kernel, grid, X, V, G, F, oracle)


def _extrapolate_to_zero(tau: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Quadratic Lagrange extrapolation of values(tau) to tau = 0 from three samples."""
    out = np.zeros(values.shape[1])
    for j in range(3):
        w = 1.0
        for m in range(3):
            if m != j:
                w *= (0.0 - tau[m]) / (tau[j] - tau[m])
        out += w * values[j]
    return out


def integrate_dual(kernel: ContinuousKernel, oracle: ConvexOracle, y0, refine: int = 8,
                   rtol: float = RTOL, atol: float = ATOL) -> OdeTrajectory:
    """Dual ODE from t = 0 (Y'(0) = 0) to T - eps, with the endpoint extrapolated.

    Near T the velocity scales like (T - t)^q grad f(Y(T)), so
    Y(T) ~ Y(T - eps) + eps Y'(T - eps) / (q + 1).  grad f(Y(T)) is the
    Richardson (quadratic) extrapolation of grad f(Y(t)) from the last three
    samples at T - 4 eps, T - 2 eps, T - eps.
    """
    y0 = np.asarray(y0, dtype=float)
    T = kernel.T
    eps = START_FRACTION * T
    grid, Y, V, G, F = _integrate(kernel.dual_friction, kernel.dual_coefficient, oracle, 0.0, T - eps,
                                  y0, np.zeros_like(y0), refine, rtol, atol)
    q = kernel.terminal_order()
    y_end = Y[-1] + eps * V[-1] / (q + 1.0)
    # resample the tail at fixed offsets for the gradient extrapolation
    taus = np.array([4.0 * eps, 2.0 * eps, eps])
    tail_pts = np.array([_interp(grid, Y, T - tau) for tau in taus])
    tail_grads = np.array([oracle.grad(y) for y in tail_pts])
    g_end = _extrapolate_to_zero(taus, tail_grads)
    return OdeTrajectory("dual", kernel, grid, Y, V, G, F, oracle, terminal_point=y_end, terminal_grad=g_end)


def _interp(grid, values, t):
    j = int(np.searchsorted(grid, t))
    j = min(max(j, 1), grid.size - 1)
    a, b = grid[j - 1], grid[j]
    w = (t - a) / (b - a)
    return (1 - w) * values[j - 1] + w * values[j]


def _cumtrapz(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def _bracket(f_y, grad_y, x, y, f_x):
    """[x, y] = f(y) - f(x) + <grad f(y), x - y>."""
    return f_y - f_x + float(np.dot(grad_y, x - y))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


def _bracket_near(oracle, grad_y, x, y):
    """[x, y] for y close to x, free of the f(y) - f(x) cancellation.

    [x, y] = -int_0^1 <grad f(y) - grad f(x + s (y - x)), y - x> ds, by
    5-point Gauss-Legendre (exact for quadratics).
    """
    d = y - x
    acc = 0.0
    for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
        s = 0.5 * (node + 1.0)
        acc += 0.5 * weight * float(np.dot(grad_y - oracle.grad(x + s * d), d))
    return -acc


def energy_U(traj: OdeTrajectory, xstar=None, fstar=None) -> np.ndarray:
    """U(t) = (1/2)||X(0) - x*||^2 + int_0^t u'(s) [x*, X(s)] ds on the grid."""
    if traj.side != "primal":
        raise ValueError("energy_U needs a primal trajectory")
    o = traj.oracle
    xstar = o.xstar if xstar is None else np.asarray(xstar, dtype=float)
    fstar = o.fstar if fstar is None else fstar
    if xstar is None or fstar is None:
        raise ValueError("energy_U needs x* and f*")
    w = traj.kernel.weights()
    integrand = np.array([
        _bracket(fv, g, xstar, x, fstar) for fv, g, x in zip(traj.fvals, traj.grads, traj.points)
    ]) * w.du(traj.times)
    r0 = traj.points[0] - xstar
    return 0.5 * float(r0 @ r0) + _cumtrapz(traj.times, integrand)


def energy_V(traj: OdeTrajectory, cutoff: Optional[float] = None) -> np.ndarray:
    """V(t) = v(0)(f(Y(0)) - f(Y(T))) + int_0^t v'(s) [Y(T), Y(s)] ds on the grid.

    Samples past ``cutoff`` (a time before T) are dropped from the quadrature.
    """
    if traj.side != "dual":
        raise ValueError("energy_V needs a dual trajectory")
    o = traj.oracle
    w = traj.kernel.weights()
    yT = traj.final_point()
    fT = o.value(yT)
    near = 1e-3 * (1.0 + float(np.linalg.norm(yT)))
    integrand = np.array([
        _bracket_near(o, g, yT, y) if np.linalg.norm(y - yT) < near else _bracket(fv, g, yT, y, fT)
        for fv, g, y in zip(traj.fvals, traj.grads, traj.points)
    ]) * w.dv(traj.times)
    V = float(w.v(0.0)) * (traj.fvals[0] - fT) + _cumtrapz(traj.times, integrand)
    if cutoff is not None:
        V = V[traj.times <= cutoff]
    return V


def is_nonincreasing(values: np.ndarray, rtol: float = 1e-6) -> bool:
    scale = max(1.0, float(np.max(np.abs(values))))
    return bool(np.all(np.diff(values) <= rtol * scale))


@dataclass(frozen=True)
class ContinuousRate:
    kind: str
    measured: float
    bound: float
    formula: str

    def ratio(self) -> float:
        return self.measured / self.bound if self.bound > 0 else math.inf

    def holds(self, slack: float = 0.05) -> bool:
        return self.measured <= (1.0 + slack) * self.bound

    def to_dict(self) -> dict:
        return {"kind": self.kind, "measured": self.measured, "bound": self.bound, "formula": self.formula,
                "ratio": self.ratio()}


def primal_rate(traj: OdeTrajectory) -> ContinuousRate:
    """f(X(T)) - f* <= (1/(2 u(T))) ||X(0) - x*||^2."""
    o = traj.oracle
    uT = float(traj.kernel.weights().u(traj.kernel.T))
    r0 = traj.points[0] - o.xstar
    formula = "||x0-x*||^2/(2 C T^p)" if traj.kernel.family == "p" else "(r-1)||x0-x*||^2/T^2"
    return ContinuousRate("f_gap", float(traj.fvals[-1] - o.fstar), 0.5 * float(r0 @ r0) / uT, formula)


def dual_rate(traj: OdeTrajectory) -> ContinuousRate:
    """(1/2)||grad f(Y(T))||^2 <= v(0)(f(Y(0)) - f*)."""
    o = traj.oracle
    g = traj.final_grad()
    v0 = float(traj.kernel.weights().v(0.0))
    formula = "(f(y0)-f*)/(C T^p)" if traj.kernel.family == "p" else "2(r-1)(f(y0)-f*)/T^2"
    return ContinuousRate("grad_norm_sq_half", 0.5 * float(g @ g), v0 * float(traj.fvals[0] - o.fstar), formula)


def sos_identity_check(r: float, T: float, traj: OdeTrajectory, side: str = "primal",
                       tail_fraction: float = 1e-3) -> dict:
    """Both sides of the sum-of-squares identity for H(t, s) = (s/t)^r.

    primal: U(T) - u(T)(f(X(T)) - f*)
            = (||T X'(T) + 2(X(T) - x*)||^2 + 2(r-3)||X(T) - x*||^2) / (4(r-1))
              + int_0^T (r-3) s / (2(r-1)) ||X'(s)||^2 ds
    dual:   V(T) - (1/2)||grad f(Y(T))||^2
            = 2(r-1)(r-3)||Y(0) - Y(T)||^2 / T^4
              + int_0^T 2(r-1)(r-3) ||(T-s) Y'(s) + 2(Y(s) - Y(T))||^2 / (T-s)^5 ds

    On the dual side, the integrands are summed up to T(1 - tail_fraction).
    Near T they vanish linearly in T - s, and past that point the error in
    the extrapolated Y(T) dominates.
    """
    k = traj.kernel
    if k.family != "r" or k.r != r or k.T != T:
        raise ValueError("trajectory was not produced by the r-family kernel with these parameters")
    if side != traj.side:
        raise ValueError("side does not match the trajectory")
    o = traj.oracle
    t = traj.times
    if side == "primal":
        U = energy_U(traj)
        xT = traj.points[-1] - o.xstar
        lhs = float(U[-1]) - T * T / (2 * (r - 1)) * float(traj.fvals[-1] - o.fstar)
        w = T * traj.velocities[-1] + 2 * xT
        boundary = (float(w @ w) + 2 * (r - 3) * float(xT @ xT)) / (4 * (r - 1))
        integrand = (r - 3) * t / (2 * (r - 1)) * np.sum(traj.velocities**2, axis=1)
        integral = float(_cumtrapz(t, integrand)[-1])
    else:
        cut = T * (1.0 - tail_fraction)
        mask = t <= cut
        yT = traj.final_point()
        gT = traj.final_grad()
        V = energy_V(traj)
        lhs = float(V[mask][-1]) - 0.5 * float(gT @ gT)
        d0 = traj.points[0] - yT
        boundary = 2 * (r - 1) * (r - 3) * float(d0 @ d0) / T**4
        tau = T - t[mask]
        w = tau[:, None] * traj.velocities[mask] + 2 * (traj.points[mask] - yT)
        integrand = 2 * (r - 1) * (r - 3) * np.sum(w * w, axis=1) / tau**5
        integral = float(_cumtrapz(t[mask], integrand)[-1])
    rhs = boundary + integral
    # relative to the initial energy, so that r = 3 (both sides near zero) is well posed
    energy0 = float(energy_U(traj)[0]) if side == "primal" else float(energy_V(traj)[0])
    scale = max(abs(lhs), abs(rhs), abs(energy0), 1e-300)
    return {"side": side, "lhs": lhs, "rhs": rhs, "boundary": boundary, "integral": integral,
            "residual": abs(lhs - rhs) / scale}


def kernel_duality_residual(kernel: ContinuousKernel, samples: int = 50, seed: int = 0) -> float:
    """max |H^A(t, s) - H(T-s, T-t)| and |(H^A)^A - H| over random 0 < s < t < T."""
    rng = np.random.default_rng(seed)
    T = kernel.T
    worst = 0.0
    for _ in range(samples):
        s, t = np.sort(rng.uniform(0.01 * T, 0.99 * T, size=2))
        direct = kernel.H(T - s, T - t)
        worst = max(worst, abs(kernel.HA(t, s) - direct) / max(1.0, abs(direct)))
        # the dual of the dual evaluates H at (T - (T - t), T - (T - s)) = (t, s)
        back = kernel.HA(T - s, T - t)
        worst = max(worst, abs(back - kernel.H(t, s)) / max(1.0, abs(kernel.H(t, s))))
    return worst
