import numpy as np
import pytest

from piatr.params import ParamSchedule
from piatr.prox_catalog import QuadraticProblem, make_problem
from piatr.tikhonov_path import (
    PathPoint,
    check_viscosity_inequalities,
    detect_tail_index,
    center_step_index,
    strong_convexity_gap,
    tikhonov_center,
    value_split_violation,
    viscosity_path,
    write_path_csv,
)

STRONG = ParamSchedule(alpha=2.0, q=0.5, c=1.0, p=1.2, lambda0=1.0, delta=0.0)


def half_sq_norm(dim):
    # f = ||x||^2 / 2
    return QuadraticProblem(np.eye(dim), np.zeros(dim), name="half-sq-norm")


def shifted_1d():
    return QuadraticProblem(np.eye(1), np.ones(1), name="shifted")


def test_center_of_half_sq_norm_is_zero():
    for eps in (1e-6, 1.0, 1e3):
        np.testing.assert_array_equal(tikhonov_center(half_sq_norm(3), eps), 0.0)


def test_center_shifted_closed_form():
    for eps in (0.1, 1.0, 7.0):
        np.testing.assert_allclose(tikhonov_center(shifted_1d(), eps), [1 / (1 + eps)], rtol=1e-14)


def test_center_rank_one_hand_solution():
    # A = [[1, 1]], b = 2: (A^T A + eps I) z = (2, 2) gives z_i = 2/(2 + eps).
    prob = QuadraticProblem(np.array([[1.0, 1.0]]), np.array([2.0]))
    np.testing.assert_allclose(tikhonov_center(prob, 1.0), [2 / 3, 2 / 3], rtol=1e-14)
    np.testing.assert_allclose(tikhonov_center(prob, 0.1), [2 / 2.1, 2 / 2.1], rtol=1e-14)


def test_center_rank_deficient_normal_equations():
    prob = make_problem("quadratic_rank_deficient", 5, 0)
    for eps in (1.0, 1e-3, 1e-6):
        oracle = np.linalg.solve(prob.A.T @ prob.A + eps * np.eye(5), prob.A.T @ prob.b)
        np.testing.assert_allclose(tikhonov_center(prob, eps), oracle, atol=1e-10)


def test_center_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        tikhonov_center(shifted_1d(), 0.0)


def test_path_shifted_closed_form():
    path = viscosity_path(shifted_1d(), STRONG, (1, 100))
    ks = np.arange(1, 101)
    centers = np.array([pt.center[0] for pt in path])
    np.testing.assert_allclose(centers, 1 / (1 + ks**-1.2), rtol=1e-14)
    assert np.all(np.diff(centers) > 0)
    assert [pt.k for pt in path] == ks.tolist()


def test_path_converges_to_min_norm():
    prob = make_problem("quadratic_rank_deficient", 5, 0)
    ks = np.unique(np.geomspace(10, 10_000, 60).astype(int))
    path = viscosity_path(prob, STRONG, ks)
    dist = [np.linalg.norm(pt.center - prob.ground_truth.xstar) for pt in path]
    assert np.all(np.diff(dist) < 0)
    assert dist[-1] < 1e-3


def test_path_needs_positive_c():
    sched = ParamSchedule(alpha=2.0, q=0.5, c=0.0, p=1.2, lambda0=1.0, delta=0.0)
    with pytest.raises(ValueError):
        viscosity_path(shifted_1d(), sched, (1, 5))


def test_constant_path_holds_with_equality():
    path = viscosity_path(half_sq_norm(2), STRONG, (1, 50))
    rep = check_viscosity_inequalities(path)
    assert rep.ok
    assert all(w == 0.0 for w in rep.worst.values())


def test_inequalities_on_closed_form_path():
    rep = check_viscosity_inequalities(viscosity_path(shifted_1d(), STRONG, (1, 2000)))
    assert rep.ok, rep.lines()


def test_inequalities_on_rank_deficient_path():
    prob = make_problem("quadratic_rank_deficient", 5, 0)
    rep = check_viscosity_inequalities(viscosity_path(prob, STRONG, (1, 10_000)))
    assert rep.ok, rep.lines()
    assert rep.n_pairs == 9999


def test_report_flags_a_bad_path():
    # A shrinking center sequence breaks norm monotonicity.
    path = [PathPoint(k, 1.0 / k, np.array([1.0 / k]), 1.0 / k) for k in range(1, 6)]
    rep = check_viscosity_inequalities(path)
    assert not rep.ok
    assert rep.violations["norm_monotone"] == [1, 2, 3, 4]
    assert any(line.startswith("FAIL") for line in rep.lines())


def test_detect_tail_index():
    ks = np.arange(1, 8)
    assert detect_tail_index(ks, [0, 1, 0, 1, 1, 1, 1]) == 4
    assert detect_tail_index(ks, [1] * 7) == 1
    assert detect_tail_index(ks, [1, 1, 1, 1, 1, 1, 0]) is None


def test_center_step_index_shifted():
    path = viscosity_path(shifted_1d(), STRONG, (1, 1000))
    assert center_step_index(path, 1.1 * STRONG.p) == 1


def test_center_step_index_needs_consecutive_k():
    path = viscosity_path(shifted_1d(), STRONG, [1, 2, 4])
    with pytest.raises(ValueError):
        center_step_index(path, 1.5)


def test_strong_convexity_gap_examples():
    prob = half_sq_norm(1)
    assert strong_convexity_gap(prob, 1.0, np.zeros(1), np.zeros(1)) == 0.0
    # Closed form (1 + eps)/2 * ||x||^2 = 4 at eps = 1, x = 2.
    assert strong_convexity_gap(prob, 1.0, np.array([2.0]), np.zeros(1)) == pytest.approx(4.0)


def test_strong_convexity_gap_catches_wrong_center():
    prob = shifted_1d()
    with pytest.raises(ArithmeticError):
        strong_convexity_gap(prob, 1.0, np.array([0.5]), np.array([3.0]))


def test_strong_convexity_margin_on_random_points():
    prob = make_problem("quadratic_rank_deficient", 5, 0)
    rng = np.random.default_rng(3)
    for eps in (1.0, 1e-2, 1e-4):
        c = tikhonov_center(prob, eps)
        for x in rng.standard_normal((20, 5)) * 3:
            g = strong_convexity_gap(prob, eps, x, c)
            assert g >= 0.5 * eps * float((x - c) @ (x - c)) - 1e-10


def test_value_split():
    prob = make_problem("quadratic_rank_deficient", 5, 0)
    X = np.random.default_rng(4).standard_normal((30, 5))
    for eps in (1.0, 1e-3):
        assert value_split_violation(prob, eps, X) <= 1e-10


def test_write_path_csv(tmp_path):
    prob = shifted_1d()
    out = tmp_path / "p.csv"
    write_path_csv(viscosity_path(prob, STRONG, (1, 3)), prob, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "k,eps,center_norm,dist_xstar"
    k, eps, cn, dist = map(float, lines[1].split(","))
    assert (k, eps, cn, dist) == (1.0, 1.0, 0.5, 0.5)
