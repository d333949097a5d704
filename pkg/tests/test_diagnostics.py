import math

import numpy as np
import pytest

from piatr.diagnostics import (
    BelowNoiseFloor,
    EnergyConfig,
    RateFit,
    decimation_weights,
    default_energy_config,
    energy_strong,
    energy_weak,
    fit_rate,
    pi_growth_limit,
    pi_growth_ratio,
    pi_sequence,
    pi_weighted_sum_check,
    sum_estimate,
    telescoping_violation,
    write_energy_csv,
)
from piatr.params import ParamSchedule
from piatr.prox_catalog import QuadraticProblem, make_problem
from piatr.solver import default_record_ks, run
from piatr.tikhonov_path import viscosity_path

WEAK = ParamSchedule(alpha=2.0, q=0.5, c=1.0, p=1.8, lambda0=1.0, delta=0.0)
STRONG = ParamSchedule(alpha=2.0, q=0.5, c=1.0, p=1.2, lambda0=1.0, delta=0.0)

# E_2..E_5 for f = (x-1)^2/2 from x_0 = x_1 = 0 under WEAK with r = 0.75,
# a = 2, from a scalar loop written independently of the vectorized code.
WEAK_ENERGY_ORACLE = (2.1715728752538093, 2.153035848120187, 1.2516320209552336, 0.6940846108978317)


# --- fit_rate ------------------------------------------------------------------


def test_fit_exact_power_law():
    ks = np.arange(1, 10_001, dtype=float)
    fit = fit_rate((ks, ks**-2.0))
    assert isinstance(fit, RateFit)
    assert fit.slope == pytest.approx(-2.0, abs=1e-6)
    assert fit.max_abs_residual < 1e-9


def test_fit_perturbed_power_law():
    ks = np.arange(1, 10_001, dtype=float)
    fit = fit_rate((ks, 5 * ks**-1.5 * (1 + 0.01 * np.sin(ks))))
    assert -1.52 <= fit.slope <= -1.48


def test_fit_constant():
    ks = np.arange(1, 501, dtype=float)
    assert fit_rate((ks, np.full(ks.size, 3.0))).slope == pytest.approx(0.0, abs=1e-9)


def test_fit_accepts_pairs():
    pairs = [(k, k**-1.0) for k in range(1, 200)]
    assert fit_rate(pairs).slope == pytest.approx(-1.0, abs=1e-9)


def test_fit_on_decimated_series():
    ks = np.array(default_record_ks(100_000), dtype=float)
    fit = fit_rate((ks, ks**-0.75))
    assert fit.slope == pytest.approx(-0.75, abs=1e-9)
    assert fit.window[1] == 100_000


def test_fit_below_noise_floor():
    ks = np.arange(1, 100, dtype=float)
    res = fit_rate((ks, np.zeros(ks.size)))
    assert isinstance(res, BelowNoiseFloor)
    assert math.isnan(res.slope)


def test_fit_stops_at_floor():
    ks = np.arange(1, 2001, dtype=float)
    vals = ks**-3.0
    vals[ks > 1000] = 0.0
    fit = fit_rate((ks, vals))
    assert fit.slope == pytest.approx(-3.0, abs=1e-9)
    assert fit.window[1] == 1000


def test_fit_skips_leading_zero():
    ks = np.arange(1, 500, dtype=float)
    vals = ks**-1.0
    vals[0] = 0.0
    assert fit_rate((ks, vals)).slope == pytest.approx(-1.0, abs=1e-9)


def test_fit_rejects_bad_input():
    ks = np.arange(1, 50, dtype=float)
    with pytest.raises(ValueError):
        fit_rate((ks, -np.ones(ks.size)))
    with pytest.raises(ValueError):
        fit_rate((ks[::-1], np.ones(ks.size)))
    with pytest.raises(ValueError):
        fit_rate((ks, np.ones(ks.size)), window_fraction=1.5)


# --- sum_estimate -----------------------------------------------------------


def test_decimation_weights():
    np.testing.assert_array_equal(decimation_weights([1, 2, 3, 13, 23]), [1, 1, 1, 10, 10])


def test_sum_summable_and_harmonic():
    ks = np.arange(1, 100_001, dtype=float)
    assert sum_estimate((ks, ks**-2.0), 0).summable
    harmonic = sum_estimate((ks, 1 / ks), 0)
    assert not harmonic.summable
    assert harmonic.verdict == "diverging-consistent"


def test_sum_gamma_weight():
    ks = np.arange(1, 100_001, dtype=float)
    assert not sum_estimate((ks, ks**-2.0), 1.0).summable


def test_sum_decimated_matches_full():
    full = np.arange(1, 100_001, dtype=float)
    dec = np.array(default_record_ks(100_000), dtype=float)
    a = sum_estimate((full, full**-1.5), 0)
    b = sum_estimate((dec, dec**-1.5), 0)
    assert b.total == pytest.approx(a.total, rel=0.02)


# --- pi sequence ----------------------------------------------------------------


def test_pi_closed_form_h2():
    # prod_{i=3}^n (1 - 2/i) telescopes to 2/(n(n-1)).
    seq = pi_sequence(2.0, 1.0, 3, 1000)
    n = seq.ns.astype(float)
    np.testing.assert_allclose(seq.log_pi, np.log(n * (n - 1) / 2), rtol=1e-12)
    assert math.exp(seq.log_pi_at(10)) == pytest.approx(45.0, rel=1e-13)


def test_pi_growth_h2_value_at_one_million():
    seq = pi_sequence(2.0, 1.0, 3, 1_000_000)
    assert pi_growth_ratio(seq, 1_000_000) == pytest.approx(1.9498282616735532, abs=1e-9)
    assert pi_growth_limit(seq) == 2.0


def test_pi_growth_beta_half():
    seq = pi_sequence(1.0, 0.5, 2, 1_000_000)
    r = pi_growth_ratio(seq, 1_000_000)
    assert abs(r - 2.0) / 2.0 < 0.05


def test_pi_increasing():
    for H, beta, K0 in [(2.0, 1.0, 3), (1.0, 0.5, 2), (0.5, 0.7, 1)]:
        assert pi_sequence(H, beta, K0, 5000).is_increasing()


def test_pi_rejects_bad_k0():
    with pytest.raises(ValueError):
        pi_sequence(2.0, 1.0, 2, 100)
    with pytest.raises(ValueError):
        pi_sequence(1.0, 1.5, 2, 100)


def test_weighted_sum_ratio():
    seq = pi_sequence(1.0, 0.5, 2, 1_000_000)
    for gamma in (0.0, -0.5):
        rep = pi_weighted_sum_check(seq, gamma)
        assert rep.converged()
        assert rep.relative_error < 0.10


def test_weighted_sum_rejects_beta_one():
    with pytest.raises(ValueError):
        pi_weighted_sum_check(pi_sequence(2.0, 1.0, 3, 100), 0.0)


def test_weighted_sum_direct_oracle():
    # Direct float summation on a short range matches the log-space version.
    seq = pi_sequence(1.0, 0.5, 2, 2000)
    pi = np.exp(seq.log_pi)
    n = seq.ns.astype(float)
    direct = np.cumsum(pi) / (n**0.5 * pi)
    rep = pi_weighted_sum_check(seq, 0.0, n_grid=50)
    idx = rep.ns - seq.K0
    np.testing.assert_allclose(rep.ratios, direct[idx], rtol=1e-10)


def test_telescoping():
    seq = pi_sequence(2.0, 1.0, 3, 2000)
    rng = np.random.default_rng(0)
    a = np.cumsum(rng.exponential(size=seq.ns.size))
    assert telescoping_violation(seq, a) <= 1e-12
    with pytest.raises(ValueError):
        telescoping_violation(seq, -a)


# --- energies -------------------------------------------------------------------


def shifted_1d():
    return QuadraticProblem(np.eye(1), np.ones(1))


def test_energy_config_validation():
    with pytest.raises(ValueError):
        EnergyConfig("weak", 0.4, 3.0).validate(WEAK)
    with pytest.raises(ValueError):
        EnergyConfig("weak", 0.75, 1.0).validate(WEAK)
    with pytest.raises(ValueError):
        EnergyConfig("strong", 0.75, 1.0, 0.25).validate(STRONG)
    with pytest.raises(ValueError):
        EnergyConfig("strong", 0.75, 2.0, 1.0).validate(STRONG)
    default_energy_config(WEAK, "weak").validate(WEAK)
    default_energy_config(STRONG, "strong").validate(STRONG)


def test_weak_energy_matches_scalar_oracle():
    prob = shifted_1d()
    tr = run(prob, WEAK, [0.0], [0.0], 12, dense=True)
    es = energy_weak(tr, EnergyConfig("weak", 0.75, 2.0), prob.ground_truth.xstar)
    np.testing.assert_allclose(es.E[:4], WEAK_ENERGY_ORACLE, rtol=1e-13)
    assert es.ks[0] == 2


def test_weak_energy_zero_function_stationary():
    # f = 0, c = 0, x* = 0, stationary start: only the nu and a-terms remain.
    sched = ParamSchedule(alpha=2.0, q=0.5, c=0.0, p=1.8, lambda0=1.0, delta=0.0)
    prob = QuadraticProblem(np.zeros((1, 2)), np.zeros(1))
    v = np.array([0.6, -0.8])
    tr = run(prob, sched, v, v, 30, dense=True)
    cfg = EnergyConfig("weak", 0.75, 2.0)
    es = energy_weak(tr, cfg, np.zeros(2))
    k = es.ks.astype(float) - 1
    a_k = 2.0 * k ** (0.75 - 1)
    b_k = k**0.75
    ap = 2.0 * (k + 1) ** -0.25
    bp = (k + 1) ** 0.75
    nu = -(1 - 2 / np.sqrt(k + 1)) * ap * bp - a_k**2 + a_k * b_k
    np.testing.assert_allclose(es.E, a_k**2 + nu, rtol=1e-12)


def test_weak_energy_on_corpus_run():
    prob = make_problem("quadratic", 5, 0)
    tr = run(prob, WEAK, np.zeros(5), np.zeros(5), 10_000, dense=True)
    es = energy_weak(tr, default_energy_config(WEAK, "weak"), prob.ground_truth.xstar)
    k0 = es.max_sign_index()
    assert k0 is not None and k0 < 10
    assert es.ledger.holds_from(k0)
    tail = es.E[es.ks >= k0]
    assert tail.max() <= 10 * tail[0]


def test_weak_energy_needs_dense():
    tr = run(shifted_1d(), WEAK, [0.0], [0.0], 50)
    with pytest.raises(ValueError):
        energy_weak(tr, default_energy_config(WEAK, "weak"), np.ones(1))


def test_strong_energy_half_sq_norm():
    # f = ||x||^2/2: centers and x* are 0, so G_k = (1 + c_k)/2 ||x_k||^2.
    prob = QuadraticProblem(np.eye(2), np.zeros(2))
    tr = run(prob, STRONG, np.ones(2), np.ones(2), 60, dense=True)
    path = viscosity_path(prob, STRONG, (1, 60))
    es = energy_strong(tr, default_energy_config(STRONG, "strong"), path, prob)
    assert np.all(es.ledger.bound == 0.0)
    assert es.ledger.index is not None


def test_strong_energy_on_corpus_run(tmp_path):
    prob = make_problem("quadratic_rank_deficient", 5, 0)
    x0 = np.random.default_rng(1).standard_normal(5)
    tr = run(prob, STRONG, x0, x0, 5000, dense=True)
    path = viscosity_path(prob, STRONG, (1, 5000))
    es = energy_strong(tr, default_energy_config(STRONG, "strong"), path, prob)
    for name in ("xi", "m", "n", "eta", "t"):
        assert es.sign_indices[name] is not None
    assert es.ledger.index is not None
    assert math.isfinite(es.ledger.extras["C2"])
    out = tmp_path / "e.csv"
    write_energy_csv(es, out)
    header = out.read_text().splitlines()[0].split(",")
    assert header[:2] == ["k", "E"] and header[-2:] == ["ledger_lhs", "ledger_bound"]


def test_strong_energy_path_must_match_schedule():
    prob = make_problem("quadratic_rank_deficient", 5, 0)
    tr = run(prob, STRONG, np.ones(5), np.ones(5), 100, dense=True)
    other = ParamSchedule(alpha=2.0, q=0.5, c=2.0, p=1.2, lambda0=1.0, delta=0.0)
    with pytest.raises(ValueError):
        energy_strong(tr, default_energy_config(STRONG, "strong"), viscosity_path(prob, other, (1, 100)), prob)
    with pytest.raises(ValueError):
        energy_strong(tr, default_energy_config(STRONG, "strong"), viscosity_path(prob, STRONG, (1, 50)), prob)
