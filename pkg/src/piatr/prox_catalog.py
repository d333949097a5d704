"""Convex test objectives with exact proximal maps.

Each problem exposes ``f(x)`` (possibly ``+inf``), ``prox(s, x)`` for
``prox_{s f}`` and, when known, the optimal value together with the
minimum-norm minimizer. A small fixed-seed corpus is built by
:func:`make_problem`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg as sla

__all__ = [
    "prox_quadratic",
    "prox_l1",
    "prox_box",
    "prox_l2norm",
    "min_norm_minimizer",
    "GroundTruth",
    "ProxProblem",
    "QuadraticProblem",
    "L1Problem",
    "BoxProblem",
    "L2NormProblem",
    "PROBLEM_KINDS",
    "make_problem",
    "load_matrix_csv",
    "random_orthogonal",
    "matrix_with_singular_values",
    "PINV_RCOND",
    "subgradient_violation",
    "prox_optimality_violation",
]

#: Relative singular-value cutoff for the pseudoinverse.
PINV_RCOND = 1e-10


def _vec(x, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {x.shape}")
    return x


def _check_s(s):
    if not (s > 0 and math.isfinite(s)):
        raise ValueError(f"prox parameter must be positive and finite, got {s}")


def prox_quadratic(s, x, A, b):
    """Proximal map of ``f(y) = 0.5*||A y - b||^2``.

    Solves ``(I + s A^T A) z = x + s A^T b`` with a Cholesky factorization.

    Parameters
    ----------
    s : float
        Positive step.
    x : array_like, shape (n,)
    A : array_like, shape (m, n)
    b : array_like, shape (m,)
    """
    _check_s(s)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    x = _vec(x)
    b = _vec(b, "b")
    m, n = A.shape
    if x.shape[0] != n:
        raise ValueError(f"x has length {x.shape[0]} but A has {n} columns")
    if b.shape[0] != m:
        raise ValueError(f"b has length {b.shape[0]} but A has {m} rows")
    M = np.eye(n) + s * (A.T @ A)
    factor = sla.cho_factor(M)
    return sla.cho_solve(factor, x + s * (A.T @ b))


def prox_l1(s, x):
    """Soft thresholding, the proximal map of ``||.||_1``."""
    _check_s(s)
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - s, 0.0)


def prox_box(s, x, lo, hi):
    """Projection onto ``[lo, hi]``; the prox of a box indicator ignores ``s``."""
    _check_s(s)
    x = np.asarray(x, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != hi.shape or (lo.ndim and lo.shape != x.shape):
        raise ValueError("box bounds must match the point's shape")
    if np.any(lo > hi) or np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
        raise ValueError("box bounds must satisfy lo <= hi")
    return np.minimum(np.maximum(x, lo), hi)


def prox_l2norm(s, x):
    """Block soft thresholding, the proximal map of the Euclidean norm."""
    _check_s(s)
    x = np.asarray(x, dtype=float)
    nrm = np.linalg.norm(x)
    if nrm <= s:
        return np.zeros_like(x)
    return (1.0 - s / nrm) * x


def min_norm_minimizer(A, b, rcond=PINV_RCOND):
    """Minimum-norm least-squares solution ``A^+ b`` via the SVD.

    Singular values below ``rcond * sigma_max`` are treated as zero.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = _vec(b, "b")
    if b.shape[0] != A.shape[0]:
        raise ValueError("b length must equal the number of rows of A")
    U, sv, Vt = np.linalg.svd(A, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return np.zeros(A.shape[1])
    keep = sv > rcond * sv[0]
    coef = (U[:, keep].T @ b) / sv[keep]
    return Vt[keep].T @ coef


@dataclass(frozen=True)
class GroundTruth:
    fstar: float
    xstar: np.ndarray
    argmin_description: str


class ProxProblem:
    """Base class for closed convex objectives with an exact prox.

    Subclasses implement :meth:`__call__` and :meth:`prox`. Problems are
    immutable after construction.
    """

    name = "problem"

    def __init__(self, dim, ground_truth=None):
        if int(dim) < 1:
            raise ValueError("dim must be a positive integer")
        self.dim = int(dim)
        self.ground_truth = ground_truth

    def __call__(self, x):
        raise NotImplementedError

    def prox(self, s, x):
        raise NotImplementedError

    def _prox_unchecked(self, s, x):
        # Hot-loop entry point; subclasses may skip argument validation.
        return self.prox(s, x)

    def gap(self, x):
        """``f(x) - f*``; requires ground truth."""
        if self.ground_truth is None:
            raise ValueError(f"{self.name} has no ground truth")
        return self(x) - self.ground_truth.fstar

    def eval_rows(self, Z):
        """Evaluate ``f`` at every row of ``Z``."""
        return np.array([self(z) for z in np.atleast_2d(Z)])

    def sample_argmin(self, rng, n):
        """Draw ``n`` points of ``argmin f`` (rows of the returned array)."""
        raise NotImplementedError

    def _check_dim(self, x):
        x = _vec(x)
        if x.shape[0] != self.dim:
            raise ValueError(f"{self.name}: expected dimension {self.dim}, got {x.shape[0]}")
        return x

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r}, dim={self.dim})"


class QuadraticProblem(ProxProblem):
    """Least squares ``f(x) = 0.5*||A x - b||^2``.

    The prox is evaluated through a cached eigendecomposition of ``A^T A``,
    so every step size costs two matrix-vector products.
    """

    def __init__(self, A, b, name="quadratic"):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = _vec(b, "b")
        if b.shape[0] != A.shape[0]:
            raise ValueError(f"b has length {b.shape[0]} but A has {A.shape[0]} rows")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("A and b must be finite")
        xstar = min_norm_minimizer(A, b)
        r = A @ xstar - b
        fstar = 0.5 * float(r @ r)
        rank = int(np.linalg.matrix_rank(A, tol=PINV_RCOND * max(np.linalg.norm(A, 2), 1e-300)))
        if rank < A.shape[1]:
            desc = f"affine set xstar + null(A), null space dimension {A.shape[1] - rank}"
        else:
            desc = "single point xstar"
        super().__init__(A.shape[1], GroundTruth(fstar, xstar, desc))
        self.name = name
        self.A = A
        self.b = b
        self.Atb = A.T @ b
        w, V = np.linalg.eigh(A.T @ A)
        self._eigvals = np.maximum(w, 0.0)
        self._eigvecs = V
        self.rank = rank
        self._null_basis = np.linalg.svd(A, full_matrices=True)[2][rank:].T
        for arr in (self.A, self.b, self.Atb, self._eigvals, self._eigvecs):
            arr.setflags(write=False)

    def __call__(self, x):
        x = self._check_dim(x)
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def eval_rows(self, Z):
        R = np.atleast_2d(Z) @ self.A.T - self.b
        return 0.5 * np.einsum("ij,ij->i", R, R)

    def gradient(self, x):
        x = self._check_dim(x)
        return self.A.T @ (self.A @ x - self.b)

    def gap(self, x):
        # Exact form avoids cancellation between f(x) and f*.
        d = self.A @ (self._check_dim(x) - self.ground_truth.xstar)
        return 0.5 * float(d @ d)

    def prox(self, s, x):
        _check_s(s)
        return self._prox_unchecked(s, self._check_dim(x))

    def _prox_unchecked(self, s, x):
        V = self._eigvecs
        return V @ ((V.T @ (x + s * self.Atb)) / (1.0 + s * self._eigvals))

    def sample_argmin(self, rng, n):
        xs = self.ground_truth.xstar
        if self._null_basis.shape[1] == 0:
            return np.tile(xs, (n, 1))
        coef = 3.0 * rng.standard_normal((n, self._null_basis.shape[1]))
        return xs + coef @ self._null_basis.T


class L1Problem(ProxProblem):
    """``f(x) = ||x - shift||_1``."""

    def __init__(self, dim, shift=None, name="l1"):
        shift = np.zeros(int(dim)) if shift is None else _vec(shift, "shift").copy()
        if shift.shape[0] != int(dim):
            raise ValueError("shift length must equal dim")
        super().__init__(dim, GroundTruth(0.0, shift.copy(), "single point shift"))
        self.name = name
        self.shift = shift
        self.shift.setflags(write=False)

    def __call__(self, x):
        return float(np.sum(np.abs(self._check_dim(x) - self.shift)))

    def eval_rows(self, Z):
        return np.abs(np.atleast_2d(Z) - self.shift).sum(axis=1)

    def prox(self, s, x):
        return self.shift + prox_l1(s, self._check_dim(x) - self.shift)

    def sample_argmin(self, rng, n):
        return np.tile(self.shift, (n, 1))


class BoxProblem(ProxProblem):
    """Indicator of the box ``[lo, hi]``; ``+inf`` outside."""

    def __init__(self, lo, hi, name="box"):
        lo = _vec(lo, "lo").copy()
        hi = _vec(hi, "hi").copy()
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box bounds must satisfy lo <= hi with equal shapes")
        xstar = np.clip(0.0, lo, hi)
        super().__init__(lo.shape[0], GroundTruth(0.0, xstar, "the box [lo, hi]"))
        self.name = name
        self.lo, self.hi = lo, hi
        self.lo.setflags(write=False)
        self.hi.setflags(write=False)

    def __call__(self, x):
        x = self._check_dim(x)
        if np.all(x >= self.lo) and np.all(x <= self.hi):
            return 0.0
        return math.inf

    def eval_rows(self, Z):
        Z = np.atleast_2d(Z)
        inside = np.all((Z >= self.lo) & (Z <= self.hi), axis=1)
        return np.where(inside, 0.0, math.inf)

    def prox(self, s, x):
        _check_s(s)
        return np.minimum(np.maximum(self._check_dim(x), self.lo), self.hi)

    def sample_argmin(self, rng, n):
        return self.lo + rng.random((n, self.dim)) * (self.hi - self.lo)


class L2NormProblem(ProxProblem):
    """``f(x) = ||x - shift||`` (Euclidean norm)."""

    def __init__(self, dim, shift=None, name="l2norm"):
        shift = np.zeros(int(dim)) if shift is None else _vec(shift, "shift").copy()
        if shift.shape[0] != int(dim):
            raise ValueError("shift length must equal dim")
        super().__init__(dim, GroundTruth(0.0, shift.copy(), "single point shift"))
        self.name = name
        self.shift = shift
        self.shift.setflags(write=False)

    def __call__(self, x):
        return float(np.linalg.norm(self._check_dim(x) - self.shift))

    def eval_rows(self, Z):
        return np.linalg.norm(np.atleast_2d(Z) - self.shift, axis=1)

    def prox(self, s, x):
        return self.shift + prox_l2norm(s, self._check_dim(x) - self.shift)

    def sample_argmin(self, rng, n):
        return np.tile(self.shift, (n, 1))


def subgradient_violation(problem, x, u, Z):
    """Largest violation of ``f(z) >= f(x) + <u, z - x>`` over the rows of ``Z``.

    Probes where ``f(z) = +inf`` satisfy the inequality trivially. A
    nonpositive return means ``u`` passed every probe.
    """
    Z = np.atleast_2d(Z)
    fz = problem.eval_rows(Z)
    fx = problem(x)
    rhs = fx + (Z - x) @ u
    with np.errstate(invalid="ignore"):
        excess = np.where(np.isinf(fz), -np.inf, rhs - fz)
    return float(np.max(excess))


def prox_optimality_violation(problem, s, x, Z):
    """Subgradient test of ``p = prox_{s f}(x)`` with ``u = (x - p)/s``."""
    p = problem.prox(s, x)
    return subgradient_violation(problem, p, (np.asarray(x) - p) / s, Z)


def random_orthogonal(n, rng):
    """Haar-distributed orthogonal ``n x n`` matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def matrix_with_singular_values(m, n, svals, rng):
    """Random ``m x n`` matrix whose nonzero singular values are ``svals``."""
    svals = np.asarray(svals, dtype=float)
    r = svals.shape[0]
    if r > min(m, n):
        raise ValueError("too many singular values for the requested shape")
    U = random_orthogonal(m, rng)[:, :r]
    V = random_orthogonal(n, rng)[:, :r]
    return (U * svals) @ V.T


def load_matrix_csv(path):
    """Read a row-major comma-separated numeric file into a 2-D array."""
    path = Path(path)
    try:
        arr = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot parse {path}: {exc}") from exc
    if arr.size == 0:
        raise ValueError(f"{path} contains no numbers")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{path} contains non-finite entries")
    return arr


PROBLEM_KINDS = (
    "quadratic",
    "quadratic_rank_deficient",
    "quadratic_logspectrum",
    "l1",
    "box",
    "l2norm",
    "custom_csv",
)


def make_problem(kind, dim=5, seed=0, matrix_path=None, b_path=None):
    """Build a corpus problem deterministically from ``(kind, dim, seed)``.

    Kinds
    -----
    quadratic
        Square full-rank least squares, singular values log-spaced in
        ``[10**-1.5, 1]``.
    quadratic_rank_deficient
        ``ceil(3*dim/5) x dim`` least squares of full row rank, so the
        minimizer set is an affine subspace.
    quadratic_logspectrum
        Square consistent least squares whose Hessian eigenvalues are
        log-spaced over ``[1e-12, 1]`` and whose minimizer has equal
        weight on every eigendirection.
    l1, l2norm
        Norms centred at a random shift.
    box
        Indicator of a random box not containing the origin.
    custom_csv
        Least squares with ``A`` and ``b`` read from ``matrix_path`` and
        ``b_path``.
    """
    dim = int(dim)
    if dim < 1:
        raise ValueError("dim must be positive")
    rng = np.random.default_rng(seed)
    if kind == "quadratic":
        A = matrix_with_singular_values(dim, dim, np.logspace(0, -1.5, dim), rng)
        b = rng.standard_normal(dim)
        return QuadraticProblem(A, b, name=f"quadratic-{dim}-s{seed}")
    if kind == "quadratic_rank_deficient":
        m = max(1, math.ceil(3 * dim / 5))
        if m >= dim:
            raise ValueError("quadratic_rank_deficient needs dim >= 3")
        A = matrix_with_singular_values(m, dim, np.linspace(1.0, 0.4, m), rng)
        b = rng.standard_normal(m)
        return QuadraticProblem(A, b, name=f"quadratic_rank_deficient-{m}x{dim}-s{seed}")
    if kind == "quadratic_logspectrum":
        Q = random_orthogonal(dim, rng)
        sv = np.sqrt(np.logspace(0, -12, dim))
        A = sv[:, None] * Q.T
        xs = Q @ np.full(dim, 1.0 / math.sqrt(dim))
        return QuadraticProblem(A, A @ xs, name=f"quadratic_logspectrum-{dim}-s{seed}")
    if kind == "l1":
        return L1Problem(dim, rng.standard_normal(dim), name=f"l1-{dim}-s{seed}")
    if kind == "l2norm":
        return L2NormProblem(dim, rng.standard_normal(dim), name=f"l2norm-{dim}-s{seed}")
    if kind == "box":
        lo = rng.uniform(-1.0, 1.0, dim)
        lo[0] = abs(lo[0]) + 0.25
        hi = lo + rng.uniform(0.5, 1.5, dim)
        return BoxProblem(lo, hi, name=f"box-{dim}-s{seed}")
    if kind == "custom_csv":
        if matrix_path is None or b_path is None:
            raise ValueError("custom_csv needs matrix_path and b_path")
        A = load_matrix_csv(matrix_path)
        b = load_matrix_csv(b_path).ravel()
        if b.shape[0] != A.shape[0]:
            raise ValueError(f"dimension mismatch: A is {A.shape[0]}x{A.shape[1]} but b has length {b.shape[0]}")
        return QuadraticProblem(A, b, name=f"custom_csv-{Path(matrix_path).name}")
    raise ValueError(f"unknown problem kind {kind!r}; expected one of {PROBLEM_KINDS}")
