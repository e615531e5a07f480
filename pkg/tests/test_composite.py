import numpy as np
import pytest

from hdual import composite as cp
from hdual.errors import FeasibilityError
from hdual.method_lib import (
    TSequence,
    anti_transpose,
    dual_three_term,
    fgm_tseq,
    gogm_H,
    max_rel_diff,
    ogm_H,
    run_fsfom,
    three_term_to_H,
)
from hdual.testbed import (
    CompositeOracle,
    L1,
    LeastSquares,
    Quadratic,
    Regularizer,
    make_lasso,
    random_box_ls,
    random_lasso,
    random_lasso_data,
    random_quadratic,
)

from . import oracles


@pytest.fixture(scope="module")
def lasso():
    return random_lasso(np.random.default_rng(5), m=40, d=20)


@pytest.fixture(scope="module")
def box():
    return random_box_ls(np.random.default_rng(6), m=40, d=20)


def smooth_only(f):
    return CompositeOracle(f, Regularizer(), f.fstar, f.xstar)


def random_feasible_tseq(rng, n):
    """Sequences with T_i <= t_i^2 drawn by inflating the FGM choice."""
    t = [rng.uniform(1.0, 3.0)]
    for _ in range(n):
        P = sum(t)
        lo = (1 + np.sqrt(1 + 4 * P)) / 2
        t.append(lo * rng.uniform(1.0, 1.5))
    return TSequence(np.array(t))


class TestProx:
    def test_params(self):
        with pytest.raises(ValueError):
            cp.ProxParams(0.0)
        assert cp.ProxParams(2.0).alpha == 2.0

    def test_g_zero_is_gradient_step(self, rng):
        f = random_quadratic(rng, d=5)
        F = smooth_only(f)
        y = rng.normal(size=5)
        assert np.allclose(cp.prox_step(F, y, 1.0), y - f.grad(y) / f.L, rtol=1e-15)
        assert np.allclose(cp.prox_step(F, y, 3.0), y - f.grad(y) / (3 * f.L), rtol=1e-15)

    def test_soft_threshold(self):
        # f = 0 (quadratic with A = 0, b = 0), L = 1 supplied by hand
        f = Quadratic(np.zeros((3, 3)), np.zeros(3))
        f.L = 1.0
        F = CompositeOracle(f, L1(0.5))
        y = np.array([2.0, -0.1, -1.0])
        # threshold lambda/(alpha L) = 0.25
        assert cp.prox_step(F, y, 2.0).tolist() == [1.75, 0.0, -0.75]
        assert cp.prox_residual(F, y, 2.0) <= 1e-15

    def test_fixed_point(self, lasso):
        assert np.allclose(cp.prox_step(lasso, lasso.xstar, 1.0), lasso.xstar, atol=1e-10)

    def test_residuals(self, rng, lasso, box):
        for F in (lasso, box):
            for _ in range(200):
                y = rng.normal(size=F.dim) * 2
                assert cp.prox_residual(F, y, rng.uniform(0.5, 5)) <= 1e-10


class TestProxGradBracket:
    def test_same_point(self, rng, lasso):
        y = rng.normal(size=lasso.dim)
        yp = cp.prox_step(lasso, y, 2.0)
        expected = -0.5 * lasso.L * float((yp - y) @ (yp - y))
        assert cp.prox_grad_bracket(lasso, y, y, 2.0) == pytest.approx(expected, rel=1e-12)

    def test_nonpositive(self, rng, lasso):
        for _ in range(1000):
            x, y = rng.normal(size=(2, lasso.dim)) * 2
            assert cp.prox_grad_bracket(lasso, x, y, rng.uniform(0.5, 5)) <= 1e-10

    def test_smooth_case(self, rng):
        # g = 0, alpha = 1: f(y+) - f(x+) - L<y+ - y, x+ - y+> - (L/2)||y+ - y||^2
        f = random_quadratic(rng, d=4)
        F = smooth_only(f)
        x, y = rng.normal(size=(2, 4))
        xp, yp = x - f.grad(x) / f.L, y - f.grad(y) / f.L
        expected = f.value(yp) - f.value(xp) + float(f.grad(y) @ (xp - yp)) - float(f.grad(y) @ f.grad(y)) / (2 * f.L)
        assert cp.prox_grad_bracket(F, x, y, 1.0) == pytest.approx(expected, rel=1e-10, abs=1e-12)


class TestRunners:
    def test_g_zero_matches_smooth(self, rng):
        f = random_quadratic(rng, d=6)
        x0 = rng.normal(size=6)
        a = cp.run_composite(ogm_H(10), smooth_only(f), x0, 1.0).points
        b = run_fsfom(ogm_H(10), f, x0, f.L).points
        assert max_rel_diff(a, b) <= 1e-13

    def test_three_term_matches_H(self, rng, lasso):
        ts = fgm_tseq(30)
        x0 = rng.normal(size=lasso.dim)
        a = cp.run_composite(cp.gfpgm_H(ts), lasso, x0).points
        b = cp.run_composite_three_term(cp.gfpgm_coeffs(ts), lasso, x0).points
        assert max_rel_diff(a, b) <= 1e-9

    def test_sfg_three_term_matches_H(self, rng, box):
        n = 25
        x0 = np.clip(rng.normal(size=box.dim), -0.5, 0.5)
        a = cp.run_composite(cp.sfg_H(n), box, x0, 4.0).points
        b = cp.run_composite_three_term(dual_three_term(cp.sfg_family(cp.sfg_tseq(n), 4.0).primal), box, x0, 4.0).points
        c = cp.run_composite_three_term(cp.sfg_coeffs(n), box, x0, 4.0).points
        assert max_rel_diff(a, b) <= 1e-9 and max_rel_diff(a, c) <= 1e-9


class TestGFPGM:
    def test_n1(self):
        assert cp.gfpgm_H(TSequence([2.0, 3.0])).entries.tolist() == [[1.6]]

    def test_frozen(self):
        H = cp.gfpgm_H(TSequence([2.0, 3.0, 4.0])).entries
        assert np.allclose(H, oracles.GFPGM_T234, rtol=1e-14, atol=0)

    def test_diagonal(self, rng):
        ts = random_feasible_tseq(rng, 8)
        t, T = ts.t, ts.T
        diag = np.diag(cp.gfpgm_H(ts).entries)
        assert np.allclose(diag, 1 + (t[:-1] - 1) * t[1:] / T[1:], rtol=1e-14)

    def test_fgm_choice_is_fgm(self):
        ts = fgm_tseq(12)
        assert max_rel_diff(cp.gfpgm_H(ts).entries, gogm_H(ts).entries) <= 1e-12

    def test_rejects_infeasible(self):
        with pytest.raises(FeasibilityError) as err:
            cp.gfpgm_H(TSequence([2.0, 1.0, 5.0]))
        assert err.value.index == 1

    def test_bound_on_fixtures(self, rng, lasso, box):
        for F in (lasso, box):
            for n in (5, 40):
                ts = fgm_tseq(n)
                x0 = np.clip(rng.normal(size=F.dim), -0.5, 0.5)
                traj = cp.run_composite(cp.gfpgm_H(ts), F, x0)
                dist = float(np.sum((x0 - F.xstar) ** 2))
                assert traj.Fvals[-1] - F.fstar <= cp.gfpgm_bound(ts, F.L, dist) + 1e-10

    def test_bound_scales_with_L(self, rng):
        # with L = 9 the bound without the L factor is violated; the scaled one holds
        A, b, lam = random_lasso_data(np.random.default_rng(9))
        F = make_lasso(3.0 * A, b, 3.0 * lam)
        assert F.L == pytest.approx(9.0)
        ts = fgm_tseq(20)
        x0 = rng.normal(size=F.dim)
        gap = cp.run_composite(cp.gfpgm_H(ts), F, x0).Fvals[-1] - F.fstar
        dist = float(np.sum((x0 - F.xstar) ** 2))
        assert gap <= cp.gfpgm_bound(ts, F.L, dist)
        assert gap > cp.gfpgm_bound(ts, 1.0, dist)

    def test_energy_nonincreasing(self, rng, lasso):
        ts = fgm_tseq(30)
        x0 = rng.normal(size=lasso.dim)
        traj = cp.run_composite(cp.gfpgm_H(ts), lasso, x0)
        U = cp.composite_energy_U(traj, lasso, ts.T, lasso.xstar)
        assert np.max(np.diff(U)) <= 1e-9 * abs(U[0])


class TestCorrection:
    def test_frozen(self):
        assert np.allclose(cp.build_C(cp.sfg_tseq(3)).entries, oracles.SFG_C_N3, rtol=1e-14, atol=0)

    def test_first_entry(self, rng):
        ts = random_feasible_tseq(rng, 5)
        assert cp.build_C(ts).entries[0, 0] == pytest.approx(ts.t[1] / ts.T[1], rel=1e-15)

    def test_quadratic_subdiagonal(self):
        C = cp.build_C(cp.sfg_tseq(20)).entries
        for k in range(1, 20):
            assert C[k, k] == pytest.approx(2 * (4 * k + 5) / (3 * (k + 4)), rel=1e-13)

    def test_claim_identity(self, rng):
        for n in range(1, 13):
            assert cp.claim_residual(cp.sfg_tseq(n)) <= 1e-10
            assert cp.claim_residual(random_feasible_tseq(rng, n)) <= 1e-10


class TestSFGFamily:
    def test_quadratic_alpha4_feasible(self):
        for n in (1, 2, 10, 50, 200):
            cp.check_sfg_condition(cp.sfg_tseq(n), 4.0)

    def test_infeasible_index(self):
        ts = cp.sfg_tseq(10)
        lo, hi = 0.5, 4.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            try:
                cp.check_sfg_condition(ts, mid)
                hi = mid
            except FeasibilityError:
                lo = mid
        with pytest.raises(FeasibilityError) as err:
            cp.sfg_family_H(ts, lo * 0.99)
        slack = cp.sfg_condition_slack(ts, lo * 0.99)
        assert err.value.index == int(np.nonzero(slack < 0)[0][0])

    def test_alpha2_fails(self):
        with pytest.raises(FeasibilityError):
            cp.sfg_family_H(cp.sfg_tseq(10), 2.0)

    def test_dual_coefficients_match_H(self):
        for alpha, ts in ((4.0, cp.sfg_tseq(12)), (3.8, cp.sfg_equality_tseq(12, 3.8))):
            fam = cp.sfg_family(ts, alpha)
            assert max_rel_diff(three_term_to_H(fam.dual).scaled(1 / alpha).entries, fam.H.entries) <= 1e-12
            assert max_rel_diff(anti_transpose(three_term_to_H(fam.primal)).entries,
                                three_term_to_H(fam.dual).entries) <= 1e-12

    def test_certificate_is_slack_diagonal(self):
        for alpha, ts in ((4.0, cp.sfg_tseq(9)), (3.0, cp.sfg_equality_tseq(9, 3.0))):
            fam = cp.sfg_family(ts, alpha)
            K = cp.sfg_family_certificate(fam)
            off = K - np.diag(np.diag(K))
            scale = max(1.0, float(np.max(np.abs(K))))
            assert np.max(np.abs(off)) <= 1e-10 * scale
            assert np.all(np.diag(K) >= -1e-10 * scale)

    def test_family_guarantee(self, rng, lasso):
        for alpha, ts in ((4.0, cp.sfg_tseq(40)), (3.8, cp.sfg_equality_tseq(40, 3.8))):
            fam = cp.sfg_family(ts, alpha)
            y0 = rng.normal(size=lasso.dim)
            traj = cp.run_composite(fam.H, lasso, y0, alpha)
            d = traj.prox_points[-1] - traj.points[-1]
            lhs = 0.5 * alpha * lasso.L * float(d @ d)
            assert lhs <= fam.rate_coefficient() * (lasso.value(y0) - lasso.fstar) + 1e-10


class TestSFG:
    def test_final_coefficients(self):
        c = cp.sfg_coeffs(4)
        assert np.allclose(c.beta, oracles.SFG_BETA_N4, rtol=1e-15)
        assert np.allclose(c.gamma, oracles.SFG_GAMMA_N4, rtol=1e-15)

    @pytest.mark.parametrize("n", [2, 3, 10, 30])
    def test_family_instance(self, n):
        assert max_rel_diff(cp.sfg_H(n).entries, cp.sfg_family_H(cp.sfg_tseq(n), 4.0).entries) <= 1e-10

    def test_rate(self, rng, lasso, box):
        for F in (lasso, box):
            n = 60
            y0 = np.clip(rng.normal(size=F.dim), -0.5, 0.5)
            traj = cp.run_composite(cp.sfg_H(n), F, y0, cp.SFG_ALPHA)
            gap0 = F.value(y0) - F.fstar
            bound = cp.sfg_bound(n, F.L, gap0)
            surrogate, exact = cp.gradient_mapping_bound(F, traj.points[-1], 4.0)
            assert exact**2 <= surrogate**2 + 1e-12
            assert surrogate**2 <= bound + 1e-10

    def test_bound_formula(self):
        assert cp.sfg_bound(3, 2.0, 1.5) == pytest.approx(50 * 2.0 * 1.5 / 30)


class TestGradientMapping:
    def test_g_zero(self, rng):
        f = random_quadratic(rng, d=5)
        F = smooth_only(f)
        for _ in range(20):
            y = rng.normal(size=5)
            bound, exact = cp.gradient_mapping_bound(F, y, 2.0)
            assert exact == pytest.approx(np.linalg.norm(f.grad(cp.prox_step(F, y, 2.0))), rel=1e-12)
            assert exact <= bound * (1 + 1e-12)

    def test_factor(self, rng, lasso):
        y = rng.normal(size=lasso.dim)
        bound, _ = cp.gradient_mapping_bound(lasso, y, 4.0, exact=False)
        assert bound == pytest.approx(5 * lasso.L * np.linalg.norm(y - cp.prox_step(lasso, y, 4.0)), rel=1e-14)

    def test_at_minimizer(self, lasso):
        bound, exact = cp.gradient_mapping_bound(lasso, lasso.xstar, 4.0)
        assert bound <= 1e-8 and exact <= 1e-8


class TestSweep:
    def test_equality_sequence_is_tight(self):
        for alpha in (3.0, 3.8, 5.0):
            slack = cp.sfg_condition_slack(cp.sfg_equality_tseq(20, alpha), alpha)
            assert np.max(np.abs(slack)) <= 1e-9 * alpha * 2 * cp.sfg_equality_tseq(20, alpha).T[-1]

    def test_constant_range(self):
        # N^2 * constant for large N settles near 44; the quadratic choice gives 50
        vals = [cp.sweep_constant(400, a) for a in (3.0, 3.8, 4.0, 5.0)]
        assert all(40.0 < v < 50.0 for v in vals)
        assert cp.sweep_constant(400, 3.8) < cp.sweep_constant(400, 3.0)


class TestReference:
    def test_optimality(self, lasso, box):
        for F in (lasso, box):
            assert F.min_subgrad_norm(F.xstar) <= 1e-9

    def test_one_dim_lasso(self):
        # f = (a x - b)^2 / 2, g = lam |x|: x* = soft(a b, lam)/a^2
        a, b, lam = 2.0, 3.0, 1.5
        F = make_lasso(np.array([[a]]), np.array([b]), lam)
        xs = (a * b - lam) / a**2
        fs = 0.5 * (a * xs - b) ** 2 + lam * abs(xs)
        assert F.xstar[0] == pytest.approx(xs, abs=1e-10)
        assert F.fstar == pytest.approx(fs, abs=1e-10)

    def test_generator_scale(self):
        A, b, lam = random_lasso_data(np.random.default_rng(0), m=30, d=10)
        assert A.shape == (30, 10) and lam > 0
        assert isinstance(LeastSquares(A, b).L, float)
