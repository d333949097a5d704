"""Self-contained validation suites behind ``piatr validate``.

Every suite builds its own fixed-seed problems and returns a list of
:class:`Check` results. Nothing here reads user input, so two invocations
produce identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .diagnostics import (
    default_energy_config,
    energy_strong,
    energy_weak,
    pi_growth_limit,
    pi_growth_ratio,
    pi_sequence,
    pi_weighted_sum_check,
    telescoping_violation,
)
from .params import ParamSchedule, RegimeKind, classify_regime
from .prox_catalog import (
    QuadraticProblem,
    make_problem,
    min_norm_minimizer,
    prox_optimality_violation,
    subgradient_violation,
)
from .solver import run
from .tikhonov_path import (
    PATH_TOL,
    check_viscosity_inequalities,
    center_step_index,
    strong_convexity_gap,
    value_split_violation,
    viscosity_path,
)

__all__ = [
    "Check",
    "SUITES",
    "run_suite",
    "format_report",
    "kkt_min_norm",
    "random_rank_deficient",
    "prox_suite_problems",
    "prox_property_checks",
    "subgradient_checks",
    "suite_prox",
    "suite_viscosity_path",
    "suite_product_sequence",
    "suite_energy_weak",
    "suite_energy_strong",
    "suite_subgrad",
]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def format_report(title, checks):
    n_ok = sum(c.passed for c in checks)
    out = [f"== {title} ==", *(c.line() for c in checks), f"-- {n_ok}/{len(checks)} checks passed"]
    return "\n".join(out)


# --- oracles and problem sets ---------------------------------------------


def kkt_min_norm(A, b):
    """Minimum-norm solution of the normal equations through a KKT system.

    Minimizes ``||x||^2`` subject to ``A^T A x = A^T b``. Redundant
    constraints are dropped with a column-pivoted QR before solving the
    (then nonsingular) saddle-point system. Independent of the SVD route.
    """
    A = np.asarray(A, dtype=float)
    M = A.T @ A
    rhs = A.T @ b
    _, R, piv = sla.qr(M.T, pivoting=True, mode="economic")
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > 1e-10 * diag[0])) if diag.size and diag[0] > 0 else 0
    if rank == 0:
        return np.zeros(A.shape[1])
    rows = piv[:rank]
    C = M[rows]
    d = rhs[rows]
    n = A.shape[1]
    K = np.block([[np.eye(n), C.T], [C, np.zeros((rank, rank))]])
    sol = np.linalg.solve(K, np.concatenate([np.zeros(n), d]))
    return sol[:n]


def random_rank_deficient(rng):
    """Random ``m x n`` Gaussian-product matrix of rank below ``min(m, n)``."""
    m = int(rng.integers(3, 9))
    n = int(rng.integers(4, 11))
    r = int(rng.integers(1, min(m, n)))
    A = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
    return A, rng.standard_normal(m)


def prox_suite_problems(dim=5, seed=0):
    kinds = ("quadratic", "quadratic_rank_deficient", "quadratic_logspectrum", "l1", "box", "l2norm")
    return [make_problem(k, dim, seed) for k in kinds]


def _probes(problem, center, rng, n):
    """Probe points near ``center``; half are drawn from the problem's domain."""
    Z = center + rng.standard_normal((n, problem.dim)) * (1.0 + np.abs(center))
    if np.isinf(problem.eval_rows(Z)).any():
        half = n // 2
        Z[:half] = np.array([problem.prox(1.0, z) for z in Z[:half]])
    return Z


def prox_property_checks(problem, n_triples=1000, n_probes=100, seed=0):
    """Nonexpansiveness, optimality and argmin fixed-point checks for one problem.

    Returns ``(max_expansion, max_optimality_violation, fixed_point_error)``.
    """
    rng = np.random.default_rng(seed)
    worst_exp = -math.inf
    worst_opt = -math.inf
    for _ in range(n_triples):
        s = float(np.exp(rng.uniform(np.log(1e-3), np.log(1e3))))
        scale = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        x = rng.standard_normal(problem.dim) * scale
        y = rng.standard_normal(problem.dim) * scale
        px, py = problem.prox(s, x), problem.prox(s, y)
        worst_exp = max(worst_exp, np.linalg.norm(px - py) - np.linalg.norm(x - y))
        Z = _probes(problem, px, rng, n_probes)
        worst_opt = max(worst_opt, prox_optimality_violation(problem, s, x, Z))
    gt = problem.ground_truth
    fp_err = 0.0
    if gt is not None:
        for s in (1e-2, 1.0, 1e2):
            fp_err = max(fp_err, abs(problem(problem.prox(s, gt.xstar)) - problem(gt.xstar)))
    return float(worst_exp), float(worst_opt), float(fp_err)


def subgradient_checks(problem, sched, iters=10_000, n_sample=1000, n_probes=100, seed=0):
    """Worst subgradient-inequality violation of recovered ``u_k`` along a run.

    Also returns the largest ``||u_k - grad f(x_k)||`` for smooth problems
    (NaN otherwise).
    """
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal(problem.dim)
    tr = run(problem, sched, x0, x0, iters, dense=True)
    D = tr.dense
    ks = np.unique(np.linspace(2, iters, n_sample).astype(int))
    worst = -math.inf
    grad_err = math.nan
    if hasattr(problem, "gradient"):
        grad_err = 0.0
    for k in ks:
        x, u = D.xs[k], D.us[k]
        Z = x + rng.standard_normal((n_probes, problem.dim)) * max(1.0, float(np.linalg.norm(x)))
        worst = max(worst, subgradient_violation(problem, x, u, Z))
        if hasattr(problem, "gradient"):
            grad_err = max(grad_err, float(np.linalg.norm(u - problem.gradient(x))))
    return float(worst), grad_err, len(ks)


# --- suites ------------------------------------------------------------------


def suite_prox(n_triples=1000):
    checks = []
    for prob in prox_suite_problems():
        exp, opt, fp = prox_property_checks(prob, n_triples=n_triples)
        checks.append(Check(f"{prob.name} nonexpansive", exp <= 1e-10, f"max expansion {exp:.3e} over {n_triples} pairs (tol 1e-10)"))
        checks.append(Check(f"{prob.name} prox optimality", opt <= 1e-9, f"max violation {opt:.3e} (tol 1e-9)"))
        checks.append(Check(f"{prob.name} argmin fixed point", fp <= 1e-9, f"|f(prox(x*)) - f(x*)| = {fp:.3e}"))
    rng = np.random.default_rng(2024)
    worst = 0.0
    worst_norm = -math.inf
    for _ in range(20):
        A, b = random_rank_deficient(rng)
        xs = min_norm_minimizer(A, b)
        worst = max(worst, float(np.linalg.norm(xs - kkt_min_norm(A, b))))
        prob = QuadraticProblem(A, b)
        ys = prob.sample_argmin(rng, 50)
        worst_norm = max(worst_norm, float(np.linalg.norm(xs) - np.linalg.norm(ys, axis=1).min()))
    checks.append(Check("min-norm vs KKT oracle", worst <= 1e-8, f"max deviation {worst:.3e} over 20 instances (tol 1e-8)"))
    checks.append(Check("min-norm is shortest solution", worst_norm <= 1e-10, f"max ||x*|| - ||y|| = {worst_norm:.3e}"))
    return checks


def _path_suite_problems():
    shifted = QuadraticProblem(np.eye(1), np.ones(1), name="shifted-quadratic-1d")
    return [shifted, make_problem("quadratic_rank_deficient", 5, 0)]


def suite_viscosity_path(k_max=10_000):
    checks = []
    rng = np.random.default_rng(7)
    for prob in _path_suite_problems():
        for p in (1.2, 1.5):
            sched = ParamSchedule(alpha=2.0, q=0.5, c=1.0, p=p, lambda0=1.0, delta=0.0)
            path = viscosity_path(prob, sched, (1, k_max))
            rep = check_viscosity_inequalities(path)
            tag = f"{prob.name} p={p}"
            for name in rep.CHECKS:
                bad = rep.violations[name]
                checks.append(Check(f"{tag} {name}", not bad, f"{len(bad)} violations over {rep.n_pairs} pairs, worst {rep.worst[name]:.2e} (tol {PATH_TOL:g})"))
            xs_norm = float(np.linalg.norm(prob.ground_truth.xstar))
            over = max(pt.center_norm for pt in path) - xs_norm
            checks.append(Check(f"{tag} ||xbar_k|| <= ||x*||", over <= PATH_TOL, f"max excess {over:.2e}"))
            res = max(
                float(np.linalg.norm(prob.gradient(pt.center) + pt.eps * pt.center))
                for pt in path[:: max(1, k_max // 200)]
            )
            checks.append(Check(f"{tag} center optimality", res <= 1e-10, f"max ||grad f + eps xbar|| = {res:.2e}"))
            idx = center_step_index(path, 1.1 * p)
            checks.append(Check(f"{tag} step bound with p1=1.1p", idx is not None, f"holds from k = {idx}"))
            worst = -math.inf
            worst_sc = math.inf
            for pt in path[:: max(1, k_max // 50)]:
                X = prob.ground_truth.xstar + rng.standard_normal((20, prob.dim)) * 2.0
                worst = max(worst, value_split_violation(prob, pt.eps, X, pt.center))
                for x in X[:5]:
                    try:
                        strong_convexity_gap(prob, pt.eps, x, pt.center)
                    except ArithmeticError:
                        worst_sc = -1.0
            checks.append(Check(f"{tag} value splitting bound", worst <= 1e-10, f"max violation {worst:.2e}"))
            checks.append(Check(f"{tag} strong convexity of f_k", worst_sc > 0, "lower bound held on all samples" if worst_sc > 0 else "violated"))
    return checks


def suite_product_sequence(n=1_000_000, n_tele=100_000, n_sequences=100):
    checks = []
    seq = pi_sequence(2.0, 1.0, 3, n)
    ratio = pi_growth_ratio(seq, n)
    closed = (2 * math.log(n) - math.log(2.0)) / math.log(n)
    checks.append(Check("H=2 beta=1 pi increasing", seq.is_increasing(), f"K0={seq.K0}"))
    checks.append(
        Check(
            "H=2 beta=1 log pi_n / log n in [1.96, 2.04]",
            1.96 <= ratio <= 2.04,
            f"value {ratio:.6f} at n={n} (closed form 2 - log 2/log n = {closed:.6f}, limit {pi_growth_limit(seq):g})",
        )
    )
    seq2 = pi_sequence(1.0, 0.5, 2, n)
    r2 = pi_growth_ratio(seq2, n)
    checks.append(Check("H=1 beta=0.5 pi increasing", seq2.is_increasing(), f"K0={seq2.K0}"))
    checks.append(Check("H=1 beta=0.5 log pi_n / n^0.5 in [1.9, 2.1]", 1.9 <= r2 <= 2.1, f"value {r2:.6f} at n={n} (limit {pi_growth_limit(seq2):g})"))
    for gamma in (0.0, -0.5):
        rep = pi_weighted_sum_check(seq2, gamma)
        ok = rep.converged() and rep.relative_error < 0.10
        checks.append(
            Check(
                f"weighted sum ratio gamma={gamma:g}",
                ok,
                f"ratio {rep.limit_estimate:.5f} at n={int(rep.ns[-1])}, expected 1/H = {rep.expected_limit:g}, last-decade variation {rep.last_decade_variation:.3%}",
            )
        )
    rng = np.random.default_rng(11)
    worst = -math.inf
    for seq_t in (pi_sequence(2.0, 1.0, 3, n_tele), pi_sequence(1.0, 0.5, 2, n_tele)):
        m = seq_t.ns.size
        for i in range(n_sequences):
            if i % 2 == 0:
                a = np.cumsum(rng.exponential(size=m))
            else:
                t = np.arange(m)
                a = np.abs(rng.standard_normal(m)) * (1.5 + np.sin(t * rng.uniform(0.01, 1.0)))
            worst = max(worst, telescoping_violation(seq_t, a))
    checks.append(Check("telescoping bound", worst <= 1e-9, f"max relative excess {worst:.2e} over {2 * n_sequences} sequences"))
    return checks


WEAK_SCHEDULES = (
    ParamSchedule(alpha=2.0, q=0.5, c=1.0, p=1.8, lambda0=1.0, delta=0.0),
    ParamSchedule(alpha=2.0, q=0.5, c=1.0, p=2.0, lambda0=1.0, delta=0.5),
    ParamSchedule(alpha=5.0, q=1.0, c=1.0, p=2.5, lambda0=1.0, delta=0.5),
)


def suite_energy_weak(iters=20_000):
    checks = []
    prob = make_problem("quadratic", 5, 0)
    x0 = np.zeros(prob.dim)
    for sched in WEAK_SCHEDULES:
        assert classify_regime(sched).kind is RegimeKind.WEAK_FAST
        tr = run(prob, sched, x0, x0, iters, dense=True)
        for r in ((sched.q + 1) / 2, (sched.q + 1) / 2 - 0.05):
            cfg = default_energy_config(sched, "weak", r=r)
            es = energy_weak(tr, cfg, prob.ground_truth.xstar)
            tag = f"q={sched.q:g} p={sched.p:g} delta={sched.delta:g} r={r:g}"
            k0 = es.max_sign_index()
            checks.append(Check(f"{tag} coefficient signs", k0 is not None, f"indices {es.sign_indices}"))
            if k0 is None:
                continue
            ok = es.ledger.holds_from(k0)
            worst = float(np.max((es.ledger.lhs - es.ledger.bound)[es.ledger.ks >= k0]))
            checks.append(Check(f"{tag} per-step descent from k={k0}", ok, f"max lhs - bound {worst:.3e}"))
            tail = es.E[es.ks >= k0]
            bound = float(tail[0] + np.sum(es.ledger.bound[es.ledger.ks >= k0]))
            checks.append(Check(f"{tag} energy bounded", float(tail.max()) <= bound * (1 + 1e-9), f"max E {tail.max():.4e} <= {bound:.4e}"))
    return checks


STRONG_SCHEDULES = (
    ParamSchedule(alpha=2.0, q=0.5, c=1.0, p=1.2, lambda0=1.0, delta=0.0),
    ParamSchedule(alpha=2.0, q=0.5, c=1.0, p=1.2, lambda0=0.9, delta=0.0),
    ParamSchedule(alpha=2.0, q=0.5, c=1.0, p=1.5, lambda0=0.9, delta=0.0),
)


def suite_energy_strong(iters=20_000):
    checks = []
    prob = make_problem("quadratic_rank_deficient", 5, 0)
    x0 = np.random.default_rng(1).standard_normal(prob.dim)
    x0 /= np.linalg.norm(x0)
    for sched in STRONG_SCHEDULES:
        tr = run(prob, sched, x0, x0, iters, dense=True)
        path = viscosity_path(prob, sched, (1, iters))
        cfg = default_energy_config(sched, "strong")
        es = energy_strong(tr, cfg, path, prob)
        tag = f"p={sched.p:g} lambda={sched.lambda0:g}"
        needed = ("xi", "m", "n", "eta", "t")
        idx = {k: es.sign_indices[k] for k in needed}
        ok_signs = all(v is not None for v in idx.values())
        checks.append(Check(f"{tag} coefficient signs", ok_signs, f"indices {idx}, sigma {es.sign_indices['sigma']}"))
        li = es.ledger.index
        checks.append(Check(f"{tag} descent ledger", li is not None, f"holds from k={li}, C2 = {es.ledger.extras['C2']:.4g}"))
        # Strong convexity bound on every iterate.
        D = tr.dense
        worst = -math.inf
        for pt in path:
            x = D.xs[pt.k]
            g = strong_convexity_gap(prob, pt.eps, x, pt.center, tol=math.inf)
            worst = max(worst, float((x - pt.center) @ (x - pt.center)) - 2.0 / pt.eps * g)
        checks.append(Check(f"{tag} ||x_k - xbar_k||^2 <= (2k^p/c) gap", worst <= 1e-9, f"max excess {worst:.2e}"))
    return checks


def suite_subgrad(iters=10_000):
    checks = []
    sched = ParamSchedule(alpha=2.0, q=0.5, c=1.0, p=1.8, lambda0=1.0, delta=0.0)
    for prob in (make_problem("quadratic", 5, 0), make_problem("l1", 5, 0)):
        worst, gerr, n = subgradient_checks(prob, sched, iters=iters)
        checks.append(Check(f"{prob.name} subgradient inequality", worst < 1e-9, f"max violation {worst:.3e} at {n} sampled k x 100 probes"))
        if not math.isnan(gerr):
            checks.append(Check(f"{prob.name} u_k equals gradient", gerr < 1e-9, f"max ||u_k - grad f(x_k)|| = {gerr:.3e}"))
    return checks


SUITES = {
    "prox": suite_prox,
    "lemmaA1": suite_viscosity_path,
    "lemmaA2": suite_product_sequence,
    "energy_weak": suite_energy_weak,
    "energy_strong": suite_energy_strong,
    "subgrad": suite_subgrad,
}


def run_suite(name):
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name]()
