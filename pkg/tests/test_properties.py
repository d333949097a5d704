"""Property-based checks of the invariants every component relies on."""

import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from piatr.diagnostics import fit_rate, pi_sequence, telescoping_violation
from piatr.params import ParamSchedule, RegimeKind, classify_regime, predicted_rates
from piatr.prox_catalog import (
    make_problem,
    prox_box,
    prox_l1,
    prox_l2norm,
    prox_optimality_violation,
)
from piatr.tikhonov_path import check_viscosity_inequalities, viscosity_path

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
steps = st.floats(min_value=1e-3, max_value=1e3)
vec = arrays(np.float64, 4, elements=finite)

schedules = st.builds(
    ParamSchedule,
    alpha=st.floats(min_value=0.1, max_value=10),
    q=st.floats(min_value=0.05, max_value=1.0),
    c=st.floats(min_value=0.0, max_value=5),
    p=st.floats(min_value=0.5, max_value=3),
    lambda0=st.floats(min_value=0.1, max_value=2),
    delta=st.floats(min_value=-1, max_value=1),
)


@given(schedules)
def test_exactly_one_regime(s):
    r = classify_regime(s)
    assert isinstance(r.kind, RegimeKind)
    if r.kind is RegimeKind.OUT_OF_THEORY:
        assert r.violated_hypotheses
    else:
        assert not r.violated_hypotheses


@given(schedules)
def test_predicted_exponents_never_positive(s):
    r = classify_regime(s)
    assume(r.kind is not RegimeKind.OUT_OF_THEORY)
    pr = predicted_rates(s, r)
    for e in (pr.fgap_exponent, pr.velocity_exponent, pr.subgrad_exponent):
        assert e <= 0 and math.isfinite(e)


@given(vec, vec, steps)
def test_l1_nonexpansive(x, y, s):
    assert np.linalg.norm(prox_l1(s, x) - prox_l1(s, y)) <= np.linalg.norm(x - y) + 1e-10


@given(vec, vec, steps)
def test_l2norm_nonexpansive(x, y, s):
    assert np.linalg.norm(prox_l2norm(s, x) - prox_l2norm(s, y)) <= np.linalg.norm(x - y) + 1e-10


@given(vec, steps)
def test_box_prox_is_projection(x, s):
    lo, hi = -np.ones(4), np.full(4, 2.0)
    z = prox_box(s, x, lo, hi)
    assert np.all(z >= lo) and np.all(z <= hi)
    np.testing.assert_array_equal(prox_box(s, z, lo, hi), z)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["quadratic", "quadratic_rank_deficient", "l1", "l2norm", "box"]), vec, steps, st.integers(0, 2**16))
def test_prox_optimality(kind, x, s, seed):
    prob = make_problem(kind, 4, 0)
    z = prob.prox(s, x)
    Z = z + np.random.default_rng(seed).standard_normal((30, 4))
    if kind == "box":
        Z = np.array([prob.prox(1.0, w) for w in Z])
    assert prox_optimality_violation(prob, s, x, Z) <= 1e-9 * (1 + np.abs(x).max())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 1000), st.floats(min_value=0.5, max_value=1.9), st.floats(min_value=0.1, max_value=5))
def test_viscosity_inequalities_hold(seed, p, c):
    prob = make_problem("quadratic_rank_deficient", 5, seed)
    sched = ParamSchedule(alpha=2.0, q=0.5, c=c, p=p, lambda0=1.0, delta=0.0)
    assert check_viscosity_inequalities(viscosity_path(prob, sched, (1, 300))).ok


@given(st.floats(min_value=-4, max_value=0), st.floats(min_value=1e-3, max_value=1e3))
def test_fit_recovers_power_law(gamma, scale):
    ks = np.arange(1, 2001, dtype=float)
    vals = scale * ks**gamma
    assume(vals.min() > 1e-14)
    assert abs(fit_rate((ks, vals)).slope - gamma) < 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**16), st.sampled_from([(2.0, 1.0, 3), (1.0, 0.5, 2), (0.5, 1.0, 1)]))
def test_telescoping_random_nonnegative(seed, hbk):
    H, beta, K0 = hbk
    seq = pi_sequence(H, beta, K0, 3000)
    a = np.abs(np.random.default_rng(seed).standard_normal(seq.ns.size)) * 10
    assert telescoping_violation(seq, a) <= 1e-9
