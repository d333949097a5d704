"""Tikhonov centers and checks along the viscosity path.

The center at level ``eps`` is the unique minimizer of
``f(x) + (eps/2)*||x||^2``, equal to ``prox_{f/eps}(0)``. Along
``eps_k = c/k**p`` the centers converge to the minimum-norm minimizer.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .params import ParamSchedule

__all__ = [
    "PathPoint",
    "ViscosityReport",
    "tikhonov_center",
    "viscosity_path",
    "check_viscosity_inequalities",
    "detect_tail_index",
    "center_step_index",
    "strong_convexity_gap",
    "value_split_violation",
    "write_path_csv",
    "PATH_COLUMNS",
    "PATH_TOL",
]

PATH_COLUMNS = ("k", "eps", "center_norm", "dist_xstar")

#: Absolute tolerance on inequality slack along the path.
PATH_TOL = 1e-9


@dataclass(frozen=True)
class PathPoint:
    k: int
    eps: float
    center: np.ndarray
    center_norm: float


def tikhonov_center(problem, eps):
    """Minimizer of ``f + (eps/2)||.||^2``, computed as ``prox_{f/eps}(0)``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return problem.prox(1.0 / eps, np.zeros(problem.dim))


def _k_values(k_range):
    if isinstance(k_range, tuple) and len(k_range) == 2:
        ks = range(int(k_range[0]), int(k_range[1]) + 1)
    else:
        ks = k_range
    ks = [int(k) for k in ks]
    if not ks:
        raise ValueError("empty k range")
    if min(ks) < 1:
        raise ValueError("k must be >= 1")
    return ks


def viscosity_path(problem, sched: ParamSchedule, k_range):
    """Centers at ``eps_k = c/k**p`` for every ``k`` in ``k_range``.

    ``k_range`` is either an inclusive ``(k_lo, k_hi)`` pair or an iterable
    of integers.
    """
    if sched.c <= 0:
        raise ValueError("a viscosity path needs c > 0")
    out = []
    for k in _k_values(k_range):
        eps = float(sched.c_k(k))
        x = tikhonov_center(problem, eps)
        out.append(PathPoint(k, eps, x, math.sqrt(float(x @ x))))
    return out


@dataclass
class ViscosityReport:
    """Outcome of :func:`check_viscosity_inequalities`.

    ``violations`` maps each check name to the list of ``k`` (first index of
    the pair) at which it failed; ``worst`` holds the largest violation.
    """

    n_pairs: int
    violations: dict = field(default_factory=dict)
    worst: dict = field(default_factory=dict)
    tol: float = PATH_TOL

    CHECKS = (
        "a_norm_increment",
        "b_lower",
        "b_upper",
        "c_step_bound",
        "inner_nonnegative",
        "norm_monotone",
    )

    @property
    def ok(self):
        return all(not v for v in self.violations.values())

    def lines(self):
        out = []
        for name in self.CHECKS:
            bad = self.violations.get(name, [])
            status = "PASS" if not bad else "FAIL"
            msg = f"{status}  {name:<18} pairs={self.n_pairs} violations={len(bad)} worst={self.worst.get(name, 0.0):.3e}"
            if bad:
                msg += f" first_k={bad[0]}"
            out.append(msg)
        return out


def check_viscosity_inequalities(path, tol=PATH_TOL):
    """Check the consecutive-center inequalities along a path.

    For each consecutive pair with ``e0 = eps_k > e1 = eps_{k+1}`` and
    ``d = ||xbar_{k+1} - xbar_k||``:

    * ``||xbar_{k+1}||^2 - ||xbar_k||^2 >= (e0+e1)/(e0-e1) * d^2``
    * ``||xbar_k||^2 + e1/(e0-e1) d^2 <= <xbar_{k+1}, xbar_k>
      <= ||xbar_{k+1}||^2 - e0/(e0-e1) d^2``
    * ``d <= min((e0-e1)/e1 ||xbar_k||, (e0-e1)/e0 ||xbar_{k+1}||)``
    * ``<xbar_{k+1}, xbar_k> >= 0`` and ``||xbar_{k+1}|| >= ||xbar_k||``

    all with absolute slack ``tol``.
    """
    if len(path) < 2:
        raise ValueError("path needs at least two points")
    eps = np.array([pt.eps for pt in path])
    if np.any(np.diff(eps) >= 0):
        raise ValueError("path eps must be strictly decreasing")
    X = np.array([pt.center for pt in path])
    x0, x1 = X[:-1], X[1:]
    e0, e1 = eps[:-1], eps[1:]
    de = e0 - e1
    n0 = np.einsum("ij,ij->i", x0, x0)
    n1 = np.einsum("ij,ij->i", x1, x1)
    inner = np.einsum("ij,ij->i", x1, x0)
    diff = x1 - x0
    d2 = np.einsum("ij,ij->i", diff, diff)
    d = np.sqrt(d2)
    # Each entry is "amount by which the inequality fails" (<= 0 means holds).
    excess = {
        "a_norm_increment": (e0 + e1) / de * d2 - (n1 - n0),
        "b_lower": n0 + e1 / de * d2 - inner,
        "b_upper": inner - (n1 - e0 / de * d2),
        "c_step_bound": d - np.minimum(de / e1 * np.sqrt(n0), de / e0 * np.sqrt(n1)),
        "inner_nonnegative": -inner,
        "norm_monotone": np.sqrt(n0) - np.sqrt(n1),
    }
    ks = np.array([pt.k for pt in path[:-1]])
    rep = ViscosityReport(n_pairs=len(path) - 1, tol=tol)
    for name, ex in excess.items():
        bad = ex > tol
        rep.violations[name] = ks[bad].tolist()
        rep.worst[name] = float(max(ex.max(), 0.0))
    return rep


def detect_tail_index(ks, holds):
    """First ``k`` after which ``holds`` is true for the rest of the range.

    Returns ``None`` when the predicate fails at the last sample.
    """
    holds = np.asarray(holds, dtype=bool)
    ks = np.asarray(ks)
    if holds.size == 0 or not holds[-1]:
        return None
    bad = np.flatnonzero(~holds)
    return int(ks[0]) if bad.size == 0 else int(ks[bad[-1] + 1])


def center_step_index(path, p1):
    """Index after which ``||xbar_{k+1}-xbar_k|| <= (p1/k)||xbar_k||`` holds.

    Consecutive path points must have consecutive ``k``. Returns ``None`` if
    the bound fails at the end of the path.
    """
    ks = np.array([pt.k for pt in path])
    if np.any(np.diff(ks) != 1):
        raise ValueError("center_step_index needs consecutive k values")
    X = np.array([pt.center for pt in path])
    step = np.linalg.norm(np.diff(X, axis=0), axis=1)
    norms = np.linalg.norm(X[:-1], axis=1)
    holds = step <= p1 / ks[:-1] * norms + PATH_TOL
    return detect_tail_index(ks[:-1], holds)


def _tikhonov_value_gap(problem, eps, x, center):
    # f_eps(x) - f_eps(center) without forming f* twice.
    if problem.ground_truth is not None:
        fx = problem.gap(x)
        fc = problem.gap(center)
    else:
        fx = problem(x)
        fc = problem(center)
    if math.isinf(fx):
        return math.inf
    return (fx - fc) + 0.5 * eps * (float(x @ x) - float(center @ center))


def strong_convexity_gap(problem, eps, x, center, tol=1e-10):
    """``f_eps(x) - f_eps(center)`` with ``f_eps = f + (eps/2)||.||^2``.

    Raises
    ------
    ArithmeticError
        If the value falls below ``(eps/2)||x - center||^2 - tol``, which would
        contradict strong convexity (and signals a wrong center).
    """
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    g = _tikhonov_value_gap(problem, eps, x, center)
    lower = 0.5 * eps * float((x - center) @ (x - center))
    if g < lower - tol:
        raise ArithmeticError(f"strong convexity bound violated: gap {g:.6e} < {lower:.6e}")
    return max(g, 0.0)


def value_split_violation(problem, eps, xs, center=None):
    """Largest violation of ``f(x) - f* <= f_eps(x) - f_eps(xbar) + (eps/2)||x*||^2``.

    ``xs`` holds sample points as rows. A nonpositive return means the bound
    held for every sample.
    """
    gt = problem.ground_truth
    if gt is None:
        raise ValueError("needs ground truth")
    if center is None:
        center = tikhonov_center(problem, eps)
    xstar_sq = float(gt.xstar @ gt.xstar)
    worst = -math.inf
    for x in np.atleast_2d(xs):
        lhs = problem.gap(x)
        if math.isinf(lhs):
            continue
        rhs = _tikhonov_value_gap(problem, eps, x, center) + 0.5 * eps * xstar_sq
        worst = max(worst, lhs - rhs)
    return worst


def write_path_csv(path, problem, out):
    """Write ``k,eps,center_norm,dist_xstar`` rows for a list of path points."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    xstar = problem.ground_truth.xstar if problem.ground_truth is not None else None
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PATH_COLUMNS)
        for pt in path:
            dist = float(np.linalg.norm(pt.center - xstar)) if xstar is not None else math.nan
            w.writerow([pt.k, "%.17g" % pt.eps, "%.17g" % pt.center_norm, "%.17g" % dist])
    return out
