import math

import numpy as np
import pytest

from piatr.params import (
    ConvergenceMode,
    ParamSchedule,
    RegimeKind,
    classify_regime,
    predicted_rates,
)


def sched(alpha=2.0, q=0.5, c=1.0, p=1.8, lam=1.0, delta=0.0):
    return ParamSchedule(alpha=alpha, q=q, c=c, p=p, lambda0=lam, delta=delta)


def test_accessors_scalar_and_array():
    s = sched()
    assert s.alpha_k(4) == pytest.approx(1 - 2 / 2)
    assert s.c_k(2) == pytest.approx(2**-1.8)
    assert s.lambda_k(7) == 1.0
    ks = np.arange(1, 6)
    np.testing.assert_allclose(s.alpha_k(ks), 1 - 2 / np.sqrt(ks))
    np.testing.assert_allclose(sched(lam=0.5, delta=1.0).lambda_k(ks), 0.5 * ks)


def test_alpha_k_is_not_clamped():
    # k=1 with alpha=2 gives a negative momentum weight; that is intended.
    assert sched().alpha_k(1) == -1.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(q=0.0),
        dict(q=1.5),
        dict(alpha=0.0),
        dict(c=-1.0),
        dict(p=0.0),
        dict(lam=0.0),
        dict(delta=math.nan),
        dict(alpha=math.inf),
    ],
)
def test_invalid_schedules_rejected(kwargs):
    with pytest.raises(ValueError):
        sched(**kwargs)


def test_as_dict_uses_lambda_key():
    d = sched(lam=0.9).as_dict()
    assert d == {"alpha": 2.0, "q": 0.5, "c": 1.0, "p": 1.8, "lambda": 0.9, "delta": 0.0}


@pytest.mark.parametrize(
    "p, kind",
    [(1.8, RegimeKind.WEAK_FAST), (1.5, RegimeKind.CRITICAL), (1.2, RegimeKind.STRONG_VISCOSITY)],
)
def test_three_regimes(p, kind):
    assert classify_regime(sched(p=p)).kind is kind


def test_critical_uses_relative_tolerance():
    assert classify_regime(sched(q=0.1, p=0.1 + 1.0)).kind is RegimeKind.CRITICAL
    assert classify_regime(sched(p=1.5 + 1e-9)).kind is RegimeKind.WEAK_FAST


def test_c_zero_is_classical():
    r = classify_regime(sched(c=0.0))
    assert r.kind is RegimeKind.CLASSICAL_NO_TIKHONOV
    assert "c=0" in r.satisfied_hypotheses


def test_q_one_small_alpha_names_alpha_condition():
    for p in (1.8, 2.5):
        r = classify_regime(sched(q=1.0, alpha=2.0, p=p))
        assert r.kind is RegimeKind.OUT_OF_THEORY
        assert any("α>3" in h for h in r.violated_hypotheses)


def test_q_one_large_alpha_weak_fast():
    r = classify_regime(sched(alpha=5.0, q=1.0, p=2.5, delta=0.5))
    assert r.kind is RegimeKind.WEAK_FAST
    assert classify_regime(sched(alpha=5.0, q=1.0, p=2.5, delta=2.5)).kind is RegimeKind.OUT_OF_THEORY


def test_p_equal_two_needs_c_condition():
    assert classify_regime(sched(p=2.0, c=1.0)).kind is RegimeKind.WEAK_FAST
    r = classify_regime(sched(p=2.0, c=0.1))
    assert r.kind is RegimeKind.OUT_OF_THEORY
    assert "c>q(1−q) at p=2" in r.violated_hypotheses


def test_strong_family_delta_rules():
    assert classify_regime(sched(p=1.2, delta=0.1)).kind is RegimeKind.OUT_OF_THEORY
    assert classify_regime(sched(p=1.2, delta=-0.1)).kind is RegimeKind.STRONG_VISCOSITY
    assert classify_regime(sched(p=1.2, delta=-0.5)).kind is RegimeKind.OUT_OF_THEORY
    assert classify_regime(sched(p=1.2, lam=1.1)).kind is RegimeKind.OUT_OF_THEORY


def test_critical_branches():
    assert classify_regime(sched(p=1.5)).critical_branches == ("fast",)
    assert classify_regime(sched(p=1.5, lam=0.9)).critical_branches == ("fast", "log")
    assert classify_regime(sched(p=1.5, delta=-0.2)).critical_branches == ("log",)


def test_weak_fast_rates():
    s = sched()
    pr = predicted_rates(s, classify_regime(s))
    assert pr.fgap_exponent == pytest.approx(-1.5)
    assert pr.velocity_exponent == pytest.approx(-0.75)
    assert pr.subgrad_exponent == pytest.approx(-0.75)
    assert not pr.has_log_factor
    assert pr.convergence_mode is ConvergenceMode.WEAK_TO_MINIMIZER
    assert ("vel2", 1.0) in pr.sum_estimates


def test_delta_speeds_up_weak_fast():
    s = sched(delta=1.0)
    pr = predicted_rates(s, classify_regime(s))
    assert pr.fgap_exponent == pytest.approx(-2.5)
    assert pr.subgrad_exponent == pytest.approx(-1.75)


def test_strong_subcase_ii():
    s = sched(p=1.2)
    pr = predicted_rates(s, classify_regime(s))
    assert pr.fgap_exponent == pytest.approx(-1.2)
    # Squared velocity decays like k^-(q+1).
    assert 2 * pr.velocity_exponent == pytest.approx(-1.5)
    assert pr.convergence_mode is ConvergenceMode.STRONG_TO_MIN_NORM


def test_strong_subcase_iii():
    s = sched(q=0.6, p=1.55)
    pr = predicted_rates(s, classify_regime(s))
    assert pr.fgap_exponent == pytest.approx(2 * 1.55 - 4 * 0.6 - 2)


def test_strong_small_lambda_is_liminf():
    s = sched(p=1.2, lam=0.9)
    pr = predicted_rates(s, classify_regime(s))
    assert pr.convergence_mode is ConvergenceMode.LIMINF_TO_MIN_NORM


def test_critical_log_factor_only_with_log_branch():
    s = sched(p=1.5, lam=0.9)
    assert predicted_rates(s, classify_regime(s)).has_log_factor
    s = sched(p=1.5)
    assert not predicted_rates(s, classify_regime(s)).has_log_factor


def test_out_of_theory_has_no_rates():
    s = sched(q=1.0, alpha=2.0)
    with pytest.raises(ValueError):
        predicted_rates(s, classify_regime(s))


def test_exponent_for():
    s = sched()
    pr = predicted_rates(s, classify_regime(s))
    assert pr.exponent_for("vel") == pr.velocity_exponent
    with pytest.raises(KeyError):
        pr.exponent_for("energy")


def test_s_margin_must_be_positive():
    s = sched(p=1.5)
    with pytest.raises(ValueError):
        predicted_rates(s, classify_regime(s), s_margin=0.0)
