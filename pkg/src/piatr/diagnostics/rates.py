"""Empirical decay exponents and summability verdicts from sampled series."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RateFit",
    "BelowNoiseFloor",
    "SumVerdict",
    "fit_rate",
    "sum_estimate",
    "decimation_weights",
    "NOISE_FLOOR",
    "MIN_FIT_POINTS",
    "LAST_DECADE_THRESHOLD",
]

NOISE_FLOOR = 1e-15
MIN_FIT_POINTS = 20
LAST_DECADE_THRESHOLD = 0.05


@dataclass(frozen=True)
class RateFit:
    """Least-squares line ``log v = slope * log k + intercept`` on a window."""

    slope: float
    intercept: float
    window: tuple
    max_abs_residual: float
    n_points: int


@dataclass(frozen=True)
class BelowNoiseFloor:
    """Returned by :func:`fit_rate` when too little of the series is above the floor."""

    floor: float
    n_above: int
    reason: str

    slope = math.nan


def _as_arrays(series):
    if isinstance(series, tuple) and len(series) == 2 and np.ndim(series[0]) == 1:
        ks, vals = series
    else:
        arr = np.asarray(series, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("series must be (k, value) pairs or a (ks, values) tuple")
        ks, vals = arr[:, 0], arr[:, 1]
    ks = np.asarray(ks, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if ks.shape != vals.shape:
        raise ValueError("k and value arrays differ in length")
    if ks.size and np.any(np.diff(ks) <= 0):
        raise ValueError("k must be strictly increasing")
    return ks, vals


def fit_rate(series, window_fraction=0.5, floor=NOISE_FLOOR, min_points=MIN_FIT_POINTS, n_samples=64):
    """Fit a power law to the tail of a positive series.

    Parameters
    ----------
    series : sequence of (k, value) or tuple of arrays
    window_fraction : float
        Fraction of the usable range, measured in ``log k``, that forms the
        fitting window (its upper end is kept).
    floor : float
        Values at or below ``floor`` are noise. Leading floored values are
        skipped and the usable range ends just before the next one.
    min_points : int
        Minimum number of samples required in the window.
    n_samples : int
        Target number of log-spaced samples taken from the window.

    Returns
    -------
    RateFit or BelowNoiseFloor
    """
    if not 0 < window_fraction < 1:
        raise ValueError("window_fraction must lie in (0, 1)")
    ks, vals = _as_arrays(series)
    ok = np.isfinite(vals)
    ks, vals = ks[ok], vals[ok]
    if ks.size == 0:
        raise ValueError("empty series")
    if np.any(vals < 0):
        raise ValueError("series must be nonnegative")
    # Skip a leading run of floored values (e.g. zero velocity from a
    # stationary start), then stop at the first value that drops to the floor.
    above = np.flatnonzero(vals > floor)
    if above.size == 0:
        return BelowNoiseFloor(floor, 0, "no value above the noise floor")
    start = above[0]
    low = np.flatnonzero(vals[start:] <= floor)
    end = start + low[0] if low.size else ks.size
    if end - start < min_points:
        return BelowNoiseFloor(floor, int(end - start), "fewer usable points above the noise floor than required")
    ks, vals = ks[start:end], vals[start:end]
    lk = np.log(ks)
    lo = lk[-1] - window_fraction * (lk[-1] - lk[0])
    sel = np.flatnonzero(lk >= lo)
    if sel.size < min_points:
        raise ValueError(f"window holds {sel.size} points, need at least {min_points}")
    if sel.size > n_samples:
        targets = np.linspace(lk[sel[0]], lk[sel[-1]], n_samples)
        pick = np.unique(np.searchsorted(lk[sel], targets).clip(0, sel.size - 1))
        if pick.size >= min_points:
            sel = sel[pick]
    x = lk[sel]
    y = np.log(vals[sel])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        window=(int(round(ks[sel[0]])), int(round(ks[sel[-1]]))),
        max_abs_residual=float(np.max(np.abs(resid))),
        n_points=int(sel.size),
    )


def decimation_weights(ks):
    """Number of indices each sample stands for: ``k_i - k_{i-1}`` (first is 1)."""
    ks = np.asarray(ks, dtype=float)
    w = np.empty_like(ks)
    if ks.size:
        w[0] = 1.0
        w[1:] = np.diff(ks)
    return w


@dataclass(frozen=True)
class SumVerdict:
    """Outcome of :func:`sum_estimate`.

    The verdict is a heuristic label, not a proof: the last decade of the
    range contributing less than ``threshold`` of the total is read as
    consistent with a convergent series.
    """

    gamma: float
    total: float
    last_decade_fraction: float
    verdict: str
    threshold: float = LAST_DECADE_THRESHOLD

    @property
    def summable(self):
        return self.verdict == "summable-consistent"


def sum_estimate(series, gamma, threshold=LAST_DECADE_THRESHOLD):
    """Summability verdict for ``sum_k k**gamma * value_k``.

    Each sample is weighted by the number of indices it represents, so
    decimated traces approximate the full sum.
    """
    ks, vals = _as_arrays(series)
    ok = np.isfinite(vals)
    ks, vals = ks[ok], vals[ok]
    if ks.size == 0:
        raise ValueError("empty series")
    terms = decimation_weights(ks) * ks**gamma * vals
    total = float(terms.sum())
    if total <= 0:
        return SumVerdict(gamma, total, 0.0, "summable-consistent", threshold)
    last = float(terms[ks > ks[-1] / 10].sum())
    frac = last / total
    verdict = "summable-consistent" if frac < threshold else "diverging-consistent"
    return SumVerdict(gamma, total, frac, verdict, threshold)
