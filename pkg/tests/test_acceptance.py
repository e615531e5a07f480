"""Acceptance criteria 1-9, each at its stated tolerance and time limit.

Every criterion prints one line ``criterion k: PASS|FAIL ...``.  Run with
pytest, or directly as a script for the nine lines alone.
"""
import sys
import time
from pathlib import Path

import numpy as np
import pytest

if __package__ in (None, ""):
    sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
    __package__ = "tests"

from hdual import catalog, certify, composite as cp, continuous as ct  # noqa: E402
from hdual.method_lib import (  # noqa: E402
    StepsizeMatrix,
    anti_transpose,
    gd_H,
    max_rel_diff,
    obl_f_H,
    obl_g_H,
    ogm_H,
    ogmg_H,
)
from hdual.testbed import random_lasso, random_quadratic  # noqa: E402

from .conftest import random_H, random_weights  # noqa: E402


def _line(k: int, ok: bool, elapsed: float, limit, detail: str) -> str:
    lim = f" (limit {limit:g} s)" if limit else ""
    return f"criterion {k}: {'PASS' if ok else 'FAIL'}  {elapsed:.2f} s{lim}  {detail}"


def criterion_1():
    worst = 0.0
    gd_exact = True
    for n in range(1, 51):
        worst = max(worst, max_rel_diff(ogmg_H(n).entries, anti_transpose(ogm_H(n)).entries))
        worst = max(worst, max_rel_diff(obl_g_H(n).entries, anti_transpose(obl_f_H(n)).entries))
        for h in (0.5, 1.0, 1.7):
            gd_exact &= bool(np.array_equal(anti_transpose(gd_H(n, h)).entries, gd_H(n, h).entries))
    return worst <= 1e-12 and gd_exact, f"max rel error {worst:.2e}, gd self-dual exactly: {gd_exact}", 1.0


def criterion_2():
    zero = 0.0
    for n in range(1, 31):
        zero = max(zero, float(np.max(np.abs(certify.build_S(ogm_H(n), certify.ogm_weights(n)).entries))))
        zero = max(zero, float(np.max(np.abs(certify.build_T(ogmg_H(n), certify.ogmg_weights(n)).entries))))
    diag = 0.0
    for n in range(1, 31):
        u = certify.obl_f_weights(n).values
        S = certify.build_S(obl_f_H(n), u).entries
        du = np.diff(np.concatenate([[0.0], u]))
        diag = max(diag, float(np.max(np.abs(S - np.diag(du / 2)))))
    return zero <= 1e-9 and diag <= 1e-9, f"OGM/OGM-G max |entry| {zero:.2e}, OBL-F off-structure {diag:.2e}", None


def criterion_3():
    rng = np.random.default_rng(3)
    worst = 0.0
    ok = True
    for _ in range(200):
        n = int(rng.integers(1, 16))
        rep = certify.verify_congruence(StepsizeMatrix(random_H(rng, n)), random_weights(rng, n))
        ok &= rep.passed
        worst = max(worst, rep.max_abs_residual / rep.scale)
    return ok, f"200 pairs, worst scaled residual {worst:.2e}", 5.0


def criterion_4():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 16))
        d = int(rng.integers(1, 6))
        H = StepsizeMatrix(random_H(rng, n))
        w = random_weights(rng, n)
        g = rng.normal(size=(n + 1, d))
        L = float(rng.uniform(0.5, 4.0))
        for raw, form in ((certify.raw_U(H, w, g, L, rng.normal(size=d)), certify.build_S(H, w).quadratic_form(g, L)),
                          (certify.raw_V(H, w, g, L, rng.normal(size=d)), certify.build_T(H, w).quadratic_form(g, L))):
            worst = max(worst, abs(raw - form) / max(abs(form), abs(raw), 1e-300))
    return worst <= 1e-8, f"100 bundles, S and T paths, worst relative gap {worst:.2e}", None


SMOOTH_METHODS = (("ogm", {}), ("gogm", {}), ("gd", {"h": 0.5}), ("gd", {"h": 1.0}),
                  ("ogmg", {}), ("obl-g", {}), ("gogm-dual", {}))


def _criterion5_runs():
    """(spec, oracle, trajectory, summary) for every method on 30 seeded quadratics."""
    specs = [catalog.build_method(name, 25, **kw) for name, kw in SMOOTH_METHODS]
    out = []
    for i in range(30):
        rng = np.random.default_rng([5, i])
        f = random_quadratic(rng, d=10)
        x0 = rng.normal(size=10)
        for spec in specs:
            traj, summary = catalog.evaluate_smooth(spec, f, x0, slack=1e-8)
            out.append((spec, f, traj, summary))
    return out


def criterion_5():
    runs = _criterion5_runs()
    checks = [c for *_, s in runs for c in s["checks"]]
    bad = sum(not c["pass"] for c in checks)
    worst = max(c["measured"] / c["bound"] for c in checks)
    gd_min = sum(1 for c in checks if c["quantity"].startswith("||grad f(x_N)"))
    return bad == 0, f"{len(checks)} checks ({gd_min} GD min-bound), {bad} violations, worst ratio {worst:.3f}", 10.0


def criterion_6():
    a = max(max_rel_diff(cp.sfg_H(n).entries, cp.sfg_family_H(cp.sfg_tseq(n), 4.0).entries) for n in range(2, 31))
    spec = catalog.build_method("sfg", 100)
    bad = 0
    worst = 0.0
    for i in range(10):
        rng = np.random.default_rng([6, i])
        F = random_lasso(rng, m=80, d=50)
        y0 = catalog.composite_start(F, rng)
        _, summary = catalog.evaluate_composite(spec, F, y0, slack=0.0)
        exact = summary["checks"][0]
        bad += not exact["pass"]
        worst = max(worst, exact["measured"] / exact["bound"])
    c = max(cp.claim_residual(cp.sfg_tseq(n)) for n in range(1, 13))
    ok = a <= 1e-10 and bad == 0 and c <= 1e-10
    return ok, f"(a) {a:.2e}  (b) 10 lasso, {bad} violations, worst ratio {worst:.2e}  (c) claim {c:.2e}", 30.0


def criterion_7():
    worst_rate = 0.0
    monotone = True
    count = 0
    for i in range(3):
        rng = np.random.default_rng([7, i])
        f = random_quadratic(rng, d=10, cond=1e2)
        x0 = rng.normal(size=10)
        for p in (2, 3):
            for C in (0.5, 1.0):
                k = ct.ContinuousKernel.power(p, C, 10.0)
                tp = ct.integrate_primal(k, f, x0)
                td = ct.integrate_dual(k, f, x0)
                worst_rate = max(worst_rate, ct.primal_rate(tp).ratio(), ct.dual_rate(td).ratio())
                monotone &= ct.is_nonincreasing(ct.energy_U(tp), 1e-6) and ct.is_nonincreasing(ct.energy_V(td), 1e-6)
                count += 1
    ok = worst_rate <= 1.05 and monotone
    return ok, f"{count} kernel/oracle pairs, worst measured/bound {worst_rate:.3f}, energies monotone: {monotone}", 30.0


def criterion_8():
    worst = -np.inf
    count = 0
    for spec, f, traj, _ in _criterion5_runs():
        if spec.kind == "C1":
            E = certify.energy_U(traj, spec.weights, f.xstar, f.fstar)
        else:
            E = certify.energy_V(traj, spec.weights, f.fstar)
        scale = max(abs(E[0]), 1e-300)
        worst = max(worst, float(np.max(np.diff(E))) / scale)
        count += 1
    return worst <= 1e-9, f"{count} trajectories, max relative increase {worst:.2e}", None


def criterion_9():
    from . import test_properties as props

    before = sum(props.CASES.values())
    failures = []
    for prop in props.PROPERTIES:
        try:
            prop()
        except Exception as exc:  # noqa: BLE001 - report, then fail the criterion
            failures.append(f"{prop.__name__}: {type(exc).__name__}")
    cases = sum(props.CASES.values()) - before
    ok = not failures and cases >= 1000
    detail = f"{len(props.PROPERTIES)} properties, {cases} cases" + (f", failed: {failures}" if failures else "")
    return ok, detail, None


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


def evaluate(k: int) -> tuple[bool, str]:
    start = time.perf_counter()
    ok, detail, limit = CRITERIA[k - 1]()
    elapsed = time.perf_counter() - start
    ok = ok and (limit is None or elapsed < limit)
    return ok, _line(k, ok, elapsed, limit, detail)


@pytest.mark.parametrize("k", range(1, 10))
def test_criterion(k, capsys):
    ok, line = evaluate(k)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(k) for k in range(1, 10)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
