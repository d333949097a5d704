"""The product sequence ``pi_n = 1 / prod_{i=K0}^{n} (1 - H/i**beta)``.

Everything is kept in log space since ``pi_n`` grows like ``n**H`` for
``beta = 1`` and like ``exp(C n**(1-beta))`` for ``beta < 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PiSequence",
    "WeightedSumReport",
    "pi_sequence",
    "pi_growth_ratio",
    "pi_growth_limit",
    "pi_weighted_sum_check",
    "telescoping_violation",
]


@dataclass(frozen=True)
class PiSequence:
    """``log pi_n`` for ``n = K0..n_max``."""

    H: float
    beta: float
    K0: int
    ns: np.ndarray
    log_pi: np.ndarray

    @property
    def values(self):
        """``(n, pi_n)`` pairs; overflows to ``inf`` for huge ``pi_n``."""
        with np.errstate(over="ignore"):
            return list(zip(self.ns.tolist(), np.exp(self.log_pi).tolist()))

    def log_pi_at(self, n):
        i = int(n) - self.K0
        if not 0 <= i < self.ns.size:
            raise IndexError(f"n={n} outside {self.K0}..{int(self.ns[-1])}")
        return float(self.log_pi[i])

    def is_increasing(self):
        return bool(np.all(np.diff(self.log_pi) > 0))


def pi_sequence(H, beta, K0, n_max):
    """Compute ``log pi_n`` via a cumulative sum of ``-log1p(-H/i**beta)``.

    Raises
    ------
    ValueError
        If ``K0 <= H**(1/beta)`` (some factor would be nonpositive) or
        ``n_max <= K0``.
    """
    if not H > 0:
        raise ValueError("H must be positive")
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    K0, n_max = int(K0), int(n_max)
    if not K0 > H ** (1.0 / beta) or 1.0 - H / K0**beta <= 0:
        raise ValueError(f"K0 must exceed H**(1/beta) = {H ** (1.0 / beta):g}")
    if n_max <= K0:
        raise ValueError("n_max must exceed K0")
    ns = np.arange(K0, n_max + 1, dtype=np.int64)
    log_pi = np.cumsum(-np.log1p(-H / ns.astype(float) ** beta))
    return PiSequence(float(H), float(beta), K0, ns, log_pi)


def pi_growth_ratio(seq: PiSequence, n):
    """``log pi_n / log n`` for ``beta = 1``, else ``log pi_n / n**(1-beta)``."""
    lp = seq.log_pi_at(n)
    if seq.beta == 1:
        return lp / math.log(n)
    return lp / float(n) ** (1 - seq.beta)


def pi_growth_limit(seq: PiSequence):
    """Limit of :func:`pi_growth_ratio`: ``H`` or ``H/(1-beta)``."""
    return seq.H if seq.beta == 1 else seq.H / (1 - seq.beta)


@dataclass(frozen=True)
class WeightedSumReport:
    gamma: float
    ns: np.ndarray
    ratios: np.ndarray
    limit_estimate: float
    last_decade_variation: float
    expected_limit: float

    @property
    def relative_error(self):
        return abs(self.limit_estimate - self.expected_limit) / self.expected_limit

    def converged(self, tol=0.10):
        return bool(self.last_decade_variation < tol and np.isfinite(self.limit_estimate) and self.limit_estimate > 0)


def pi_weighted_sum_check(seq: PiSequence, gamma, n_grid=200):
    """Ratio ``sum_{k<=n} k**gamma pi_k / (n**(gamma+beta) pi_n)`` on a log grid.

    The cumulative sum is accumulated with ``logaddexp`` (a running-max
    rescaling), so no ``pi_k`` is ever formed. The expected limit is ``1/H``.
    """
    if seq.beta >= 1:
        raise ValueError("the weighted-sum check needs beta < 1")
    ns = seq.ns.astype(float)
    log_terms = gamma * np.log(ns) + seq.log_pi
    log_cum = np.logaddexp.accumulate(log_terms)
    log_ratio = log_cum - (gamma + seq.beta) * np.log(ns) - seq.log_pi
    idx = np.unique(np.geomspace(1, ns.size, n_grid).astype(np.int64) - 1)
    grid_n = seq.ns[idx]
    ratios = np.exp(log_ratio[idx])
    n_max = grid_n[-1]
    tail = ratios[grid_n >= n_max / 10]
    variation = float((tail.max() - tail.min()) / tail.mean())
    return WeightedSumReport(
        gamma=float(gamma),
        ns=grid_n,
        ratios=ratios,
        limit_estimate=float(ratios[-1]),
        last_decade_variation=variation,
        expected_limit=1.0 / seq.H,
    )


def telescoping_violation(seq: PiSequence, a):
    """Largest relative excess of ``sum_{k=K0+1}^n pi_k (a_k - a_{k-1})`` over ``a_n pi_n``.

    ``a[i]`` is ``a_{K0+i}``. Both sides are divided by ``pi_n``; positive
    and negative increments are accumulated separately in log space. The
    excess is relative to ``max(a)``, so a nonpositive return means the bound
    held for every ``n``.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != seq.ns.shape:
        raise ValueError("a must have one entry per n in the sequence")
    if np.any(a < 0):
        raise ValueError("a must be nonnegative")
    lp = seq.log_pi[1:]
    da = np.diff(a)
    with np.errstate(divide="ignore"):
        log_pos = np.logaddexp.accumulate(np.log(np.maximum(da, 0.0)) + lp)
        log_neg = np.logaddexp.accumulate(np.log(np.maximum(-da, 0.0)) + lp)
    T = np.exp(log_pos - lp) - np.exp(log_neg - lp)
    scale = max(float(np.max(a)), 1e-300)
    return float(np.max((T - a[1:]) / scale))
