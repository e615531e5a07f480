"""Named methods with their certificate weights and guaranteed bounds.

Shared by the command line and the test suites so both evaluate a run
against the same bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hdual import certify, composite
from hdual.method_lib import (
    METHODS,
    StepsizeMatrix,
    TSequence,
    fgm_tseq,
    gd_H,
    gogm_H,
    gogm_dual_H,
    obl_f_H,
    obl_g_H,
    obl_tseq,
    ogm_H,
    ogm_tseq,
    ogmg_H,
    run_fsfom,
    theta_sequence,
)

TSEQS = ("ogm", "fgm", "obl", "quadratic", "equality")
COMPOSITE = ("gfpgm", "sfg", "sfg-family")


def make_tseq(name: str, n: int, alpha: Optional[float] = None) -> TSequence:
    if name == "ogm":
        return ogm_tseq(n)
    if name == "fgm":
        return fgm_tseq(n)
    if name == "obl":
        return obl_tseq(n)
    if name == "quadratic":
        return composite.sfg_tseq(n)
    if name == "equality":
        if alpha is None:
            raise ValueError("the equality sequence needs alpha")
        return composite.sfg_equality_tseq(n, alpha)
    raise ValueError(f"unknown t-sequence {name!r}; choose from {', '.join(TSEQS)}")


@dataclass(frozen=True, eq=False)
class MethodSpec:
    """A generated method: step sizes, weights and the bound it carries.

    ``kind`` is "C1" (function value, weights u), "C2" (gradient norm,
    weights v), "F1" (composite function value) or "G1" (composite
    gradient mapping).
    """

    name: str
    H: StepsizeMatrix
    weights: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)
    alpha: float = 1.0
    bound_coefficient: float = 0.0
    bound_formula: str = ""

    @property
    def n(self) -> int:
        return self.H.n

    @property
    def composite(self) -> bool:
        return self.kind in ("F1", "G1")

    def to_dict(self) -> dict:
        return {
            "method": self.name,
            "n": self.n,
            "params": self.params,
            "rows": self.H.rows(),
            "weights": [float(w) for w in self.weights],
            "weight_role": "v" if self.kind == "C2" else "u",
            "kind": self.kind,
            "alpha": self.alpha,
            "bound": {"coefficient": self.bound_coefficient, "formula": self.bound_formula},
        }


DEFAULT_TSEQ = {"gogm": "ogm", "gogm-dual": "ogm", "gfpgm": "fgm", "sfg-family": "quadratic"}


def build_method(name: str, n: int, h: float = 1.0, tseq: Optional[str] = None,
                 alpha: Optional[float] = None) -> MethodSpec:
    """Generate a catalog method; raises FeasibilityError for infeasible parameters."""
    if name not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    if n < 1:
        raise ValueError("n must be at least 1")
    tseq = tseq or DEFAULT_TSEQ.get(name)
    if name == "ogm":
        u = certify.ogm_weights(n).values
        th = theta_sequence(n).values
        return MethodSpec(name, ogm_H(n), u, "C1", {}, 1.0, 1.0 / th[n] ** 2, "(1/theta_N^2) * (L/2) * ||x0-x*||^2")
    if name == "ogmg":
        v = certify.ogmg_weights(n).values
        return MethodSpec(name, ogmg_H(n), v, "C2", {}, 1.0, float(v[0]), "v_0 * (f(y0)-f*), v_0 = 1/theta_N^2")
    if name == "obl-f":
        u = certify.obl_f_weights(n).values
        return MethodSpec(name, obl_f_H(n), u, "C1", {}, 1.0, 1.0 / u[n], "(1/(gamma^2+gamma)) * (L/2) * ||x0-x*||^2")
    if name == "obl-g":
        v = certify.obl_g_weights(n).values
        return MethodSpec(name, obl_g_H(n), v, "C2", {}, 1.0, float(v[0]), "v_0 * (f(y0)-f*), v_0 = 1/(gamma^2+gamma)")
    if name == "gd":
        u = certify.gd_weights(n, h).values
        return MethodSpec(name, gd_H(n, h), u, "C1", {"h": h}, 1.0, 1.0 / (2 * n * h + 1),
                          "(1/(2Nh+1)) * (L/2) * ||x0-x*||^2")
    if name == "gogm":
        ts = make_tseq(tseq, n, alpha)
        u = certify.gogm_weights(ts).values
        return MethodSpec(name, gogm_H(ts), u, "C1", {"t": tseq}, 1.0, 1.0 / ts.T[-1], "(1/T_N) * (L/2) * ||x0-x*||^2")
    if name == "gogm-dual":
        ts = make_tseq(tseq, n, alpha)
        v = certify.gogm_dual_weights(ts).values
        return MethodSpec(name, gogm_dual_H(ts), v, "C2", {"t": tseq}, 1.0, float(v[0]), "(1/T_N) * (f(y0)-f*)")
    if name == "gfpgm":
        ts = make_tseq(tseq, n, alpha)
        return MethodSpec(name, composite.gfpgm_H(ts), ts.T.copy(), "F1", {"t": tseq}, 1.0, 1.0 / ts.T[-1],
                          "(1/T_N) * (L/2) * ||x0-x*||^2")
    if name == "sfg":
        return MethodSpec(name, composite.sfg_H(n), composite.sfg_tseq(n).T.copy(), "G1", {}, composite.SFG_ALPHA,
                          50.0 / ((n + 2.0) * (n + 3.0)), "50 L (F(y0)-F*) / ((N+2)(N+3))")
    # sfg-family
    a = 4.0 if alpha is None else float(alpha)
    ts = make_tseq(tseq, n, a)
    fam = composite.sfg_family(ts, a)
    return MethodSpec(name, fam.H, ts.T.copy(), "G1", {"t": tseq, "alpha": a}, a, fam.subgrad_constant(),
                      "2(alpha+1)^2/(alpha T_N) * L * (F(y0)-F*)")


def spec_from_dict(obj: dict) -> MethodSpec:
    """Inverse of :meth:`MethodSpec.to_dict` (weights and kind optional for bare H files)."""
    H = StepsizeMatrix.from_rows(obj["rows"])
    if "n" in obj and int(obj["n"]) != H.n:
        from hdual.errors import ShapeError

        raise ShapeError(f"declared n={obj['n']} but found {H.n} rows")
    bound = obj.get("bound") or {}
    return MethodSpec(
        obj.get("method", "custom"),
        H,
        np.asarray(obj.get("weights", []), dtype=float),
        obj.get("kind", "C1"),
        obj.get("params", {}),
        float(obj.get("alpha", 1.0)),
        float(bound.get("coefficient") or 0.0),
        bound.get("formula") or "",
    )


# ---------------------------------------------------------------------------
# evaluation of a run against the bound


def evaluate_smooth(spec: MethodSpec, oracle, x0: np.ndarray, slack: float = 1e-8):
    """Run a smooth method and compare with its guarantee. Returns (trajectory, summary)."""
    L = oracle.L
    traj = run_fsfom(spec.H, oracle, x0, L)
    xstar, fstar = oracle.xstar, oracle.fstar
    rows = []
    if spec.name == "gd" and not 0.0 < spec.params.get("h", 1.0) <= 1.0:
        # no guarantee outside (0, 1]; the run is still reported
        return traj, _summary(spec, rows)
    if spec.kind == "C1":
        dist = float(np.sum((x0 - xstar) ** 2))
        measured = float(traj.fvals[-1] - fstar)
        bound = spec.bound_coefficient * 0.5 * L * dist
        rows.append(_row("f(x_N) - f*", measured, bound, spec.bound_formula, slack))
        if spec.name == "gd":
            h = spec.params.get("h", 1.0)
            g2 = float(np.sum(traj.grads[-1] ** 2)) / (2 * L)
            gbound = certify.gd_gradient_bound_value(spec.n, h, L, float(traj.fvals[0] - fstar), dist)
            rows.append(_row("||grad f(x_N)||^2/(2L)", g2, gbound,
                             "min((f(x0)-f*)/(2Nh+1), L||x0-x*||^2/(2(2floor(N/2)h+1)(2ceil(N/2)h+1)))", slack))
    else:
        g2 = float(np.sum(traj.grads[-1] ** 2)) / (2 * L)
        bound = spec.bound_coefficient * float(traj.fvals[0] - fstar)
        rows.append(_row("||grad f(y_N)||^2/(2L)", g2, bound, spec.bound_formula, slack))
    return traj, _summary(spec, rows)


def evaluate_composite(spec: MethodSpec, F, x0: np.ndarray, slack: float = 1e-8):
    traj = composite.run_composite(spec.H, F, x0, spec.alpha)
    L = F.L
    rows = []
    if spec.kind == "F1":
        dist = float(np.sum((x0 - F.xstar) ** 2))
        measured = float(traj.Fvals[-1] - F.fstar)
        rows.append(_row("F(x_N^+) - F*", measured, spec.bound_coefficient * 0.5 * L * dist, spec.bound_formula, slack))
    else:
        gap0 = float(F.value(x0) - F.fstar)
        sub = F.min_subgrad_norm(traj.prox_points[-1]) ** 2
        rows.append(_row("min ||dF(y_N^+)||^2", sub, spec.bound_coefficient * L * gap0, spec.bound_formula, slack))
        surrogate = (L * (spec.alpha + 1.0)) ** 2 * float(np.sum((traj.points[-1] - traj.prox_points[-1]) ** 2))
        rows.append(_row("L^2 (alpha+1)^2 ||y_N - y_N^+||^2", surrogate, spec.bound_coefficient * L * gap0,
                         spec.bound_formula, slack))
    return traj, _summary(spec, rows)


def _row(quantity: str, measured: float, bound: float, formula: str, slack: float) -> dict:
    return {
        "quantity": quantity,
        "measured": float(measured),
        "bound": float(bound),
        "formula": formula,
        "pass": bool(float(measured) <= float(bound) + slack),
    }


def _summary(spec: MethodSpec, rows: list) -> dict:
    return {"method": spec.name, "n": spec.n, "params": spec.params, "checks": rows,
            "pass": all(r["pass"] for r in rows)}


def composite_start(F, rng: np.random.Generator) -> np.ndarray:
    """A random feasible starting point (projected onto dom g)."""
    x = rng.normal(size=F.dim)
    return F.g.prox(x, 0.0)
