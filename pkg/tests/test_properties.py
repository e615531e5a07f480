"""Randomized property suite.

Each property counts the cases it ran in ``CASES`` so the acceptance suite
can report the total.
"""
from collections import Counter

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from hdual import composite as cp
from hdual.certify import build_S, build_T, raw_U, raw_V, verify_congruence
from hdual.method_lib import (
    StepsizeMatrix,
    ThreeTermCoeffs,
    anti_transpose,
    dual_three_term,
    max_rel_diff,
    run_fsfom,
    run_three_term,
    three_term_to_H,
)
from hdual.testbed import (
    Box,
    CompositeOracle,
    L1,
    LeastSquares,
    finite_difference_error,
    make_logsumexp,
    random_quadratic,
)

from .conftest import random_H, random_weights

CASES: Counter = Counter()

seeds = st.integers(min_value=0, max_value=2**32 - 1)
sizes = st.integers(min_value=1, max_value=12)


@settings(max_examples=200, deadline=None)
@given(seed=seeds, n=sizes)
def test_anti_transpose_involution(seed, n):
    CASES["involution"] += 1
    H = StepsizeMatrix(random_H(np.random.default_rng(seed), n))
    assert np.array_equal(anti_transpose(anti_transpose(H)).entries, H.entries)


@settings(max_examples=150, deadline=None)
@given(seed=seeds, n=sizes)
def test_runner_agreement(seed, n):
    CASES["runner"] += 1
    rng = np.random.default_rng(seed)
    c = ThreeTermCoeffs(rng.uniform(0, 1, n), rng.uniform(-0.5, 1, n))
    f = random_quadratic(rng, d=4, cond=50.0)
    x0 = rng.normal(size=4)
    a = run_fsfom(three_term_to_H(c), f, x0, f.L).points
    b = run_three_term(c, f, x0, f.L).points
    assert max_rel_diff(a, b) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(seed=seeds, n=sizes)
def test_dual_three_term_matrix(seed, n):
    CASES["dual_three_term"] += 1
    rng = np.random.default_rng(seed)
    c = ThreeTermCoeffs(rng.uniform(-1, 1, n), rng.uniform(-1, 1, n))
    lhs = three_term_to_H(dual_three_term(c)).entries
    assert max_rel_diff(lhs, anti_transpose(three_term_to_H(c)).entries) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(seed=seeds, alpha=st.floats(min_value=0.25, max_value=8.0), kind=st.sampled_from(["l1", "box"]))
def test_prox_optimality(seed, alpha, kind):
    CASES["prox"] += 1
    rng = np.random.default_rng(seed)
    f = LeastSquares(rng.normal(size=(8, 5)), rng.normal(size=8))
    g = L1(rng.uniform(0, 2)) if kind == "l1" else Box(-rng.uniform(0, 1, 5), rng.uniform(0, 1, 5))
    F = CompositeOracle(f, g)
    assert cp.prox_residual(F, rng.normal(size=5) * 3, alpha) <= 1e-10


@settings(max_examples=150, deadline=None)
@given(seed=seeds, which=st.sampled_from(["quadratic", "logsumexp", "least_squares"]))
def test_finite_differences(seed, which):
    CASES["finite_difference"] += 1
    rng = np.random.default_rng(seed)
    if which == "quadratic":
        f = random_quadratic(rng, d=6, cond=100.0)
    elif which == "logsumexp":
        f = make_logsumexp(rng.normal(size=(7, 6)), rng.normal(size=7), rng.uniform(0.5, 2))
    else:
        f = LeastSquares(rng.normal(size=(9, 6)), rng.normal(size=9))
    assert finite_difference_error(f, rng.normal(size=6)) <= 1e-6


@settings(max_examples=100, deadline=None)
@given(seed=seeds, n=st.integers(min_value=1, max_value=15))
def test_congruence(seed, n):
    CASES["congruence"] += 1
    rng = np.random.default_rng(seed)
    assert verify_congruence(StepsizeMatrix(random_H(rng, n)), random_weights(rng, n)).passed


@settings(max_examples=100, deadline=None)
@given(seed=seeds, n=sizes, d=st.integers(min_value=1, max_value=5))
def test_trace_oracle(seed, n, d):
    CASES["trace"] += 1
    rng = np.random.default_rng(seed)
    H = StepsizeMatrix(random_H(rng, n))
    w = random_weights(rng, n)
    g = rng.normal(size=(n + 1, d))
    raw = raw_U(H, w, g, 1.3, x0=rng.normal(size=d))
    form = build_S(H, w).quadratic_form(g, 1.3)
    assert abs(raw - form) <= 1e-8 * max(1.0, abs(form))
    raw = raw_V(H, w, g, 1.3, y0=rng.normal(size=d))
    form = build_T(H, w).quadratic_form(g, 1.3)
    assert abs(raw - form) <= 1e-8 * max(1.0, abs(form))


@settings(max_examples=100, deadline=None)
@given(seed=seeds, alpha=st.floats(min_value=0.5, max_value=6.0))
def test_prox_grad_bracket(seed, alpha):
    CASES["prox_grad_bracket"] += 1
    rng = np.random.default_rng(seed)
    F = CompositeOracle(LeastSquares(rng.normal(size=(8, 5)), rng.normal(size=8)), L1(rng.uniform(0, 1)))
    x, y = rng.normal(size=(2, 5)) * 2
    assert cp.prox_grad_bracket(F, x, y, alpha) <= 1e-10 * max(1.0, F.value(x))


PROPERTIES = (
    test_anti_transpose_involution,
    test_runner_agreement,
    test_dual_three_term_matrix,
    test_prox_optimality,
    test_finite_differences,
    test_congruence,
    test_trace_oracle,
    test_prox_grad_bracket,
)
