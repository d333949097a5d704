"""Discrete Lyapunov energies evaluated along dense traces.

Both energies use the weights ``a_k = a*k**(r-1)`` and ``b_k = k**r``.

The weak energy measures distance to a fixed minimizer ``x*``::

    E_k = mu_{k-1} (f(x_{k-1}) - f*)
          + ||a_{k-1}(x_{k-1}-x*) + b_{k-1}(x_k - x_{k-1} + lambda_{k-1} u_k)||^2
          + nu_{k-1} ||x_{k-1}-x*||^2 + sigma_{k-1} ||x_{k-1}||^2

The strong energy replaces ``x*`` by the Tikhonov center ``xbar_{k-1}`` and
the gap by ``f_{k-1}(x_{k-1}) - f_{k-1}(xbar_{k-1})`` where
``f_k = f + (c_k/2)||.||^2``.

Each series comes with its per-step descent ledger: a left-hand side built
from ``E_{k+1} - E_k`` and nonnegative-weighted terms, and the bound it must
stay under.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..params import ParamSchedule
from ..tikhonov_path import detect_tail_index

__all__ = [
    "EnergyConfig",
    "EnergySeries",
    "DescentLedger",
    "default_energy_config",
    "weak_coefficients",
    "strong_coefficients",
    "energy_weak",
    "energy_strong",
    "write_energy_csv",
    "LEDGER_RTOL",
]

#: Relative slack allowed in the descent ledgers, scaled by the magnitude of
#: the terms being combined.
LEDGER_RTOL = 1e-9


@dataclass(frozen=True)
class EnergyConfig:
    """Energy variant with its weight parameters.

    ``s`` is the scale of ``s_{k-1} = s/(k-1)**(p-q)`` used by the strong
    variant; ignored for the weak one.
    """

    variant: str
    r: float
    a: float
    s: float | None = None

    def validate(self, sched: ParamSchedule):
        v = self.variant.lower()
        q = sched.q
        if not 0.5 < self.r <= (q + 1) / 2 + 1e-15:
            raise ValueError(f"r must lie in (1/2, (q+1)/2], got {self.r}")
        if self.a <= 0:
            raise ValueError("a must be positive")
        if v == "weak":
            if not 2 * self.r + sched.delta < self.a:
                raise ValueError("weak energy needs 2r + delta < a")
            if math.isclose(q, 1.0) and not self.a < sched.alpha - 1:
                raise ValueError("weak energy with q = 1 needs a < alpha - 1")
        elif v == "strong":
            if not self.a > 1 + q:
                raise ValueError("strong energy needs a > 1 + q")
            if sched.c <= 0:
                raise ValueError("strong energy needs c > 0")
            if self.s is None or not 0 < self.s < sched.c / sched.alpha:
                raise ValueError("strong energy needs 0 < s < c/alpha")
        else:
            raise ValueError(f"unknown energy variant {self.variant!r}")


def default_energy_config(sched: ParamSchedule, variant: str, r=None, a=None, s=None):
    """Centered defaults: ``r = (q+1)/2`` and ``a`` half a unit inside its range."""
    variant = variant.lower()
    r = (sched.q + 1) / 2 if r is None else r
    if variant == "weak":
        a = 2 * r + sched.delta + 0.5 if a is None else a
        return EnergyConfig("weak", r, a)
    if variant == "strong":
        a = 1 + sched.q + 0.5 if a is None else a
        s = 0.5 * sched.c / sched.alpha if s is None else s
        return EnergyConfig("strong", r, a, s)
    raise ValueError(f"unknown energy variant {variant!r}")


@dataclass
class DescentLedger:
    """Per-step inequality ``lhs_k <= bound_k`` for ``k`` in ``ks``.

    ``index`` is the first ``k`` after which the inequality holds (within
    ``tol_k``) for the rest of the range, or ``None``.
    """

    ks: np.ndarray
    lhs: np.ndarray
    bound: np.ndarray
    tol: np.ndarray
    index: int | None
    extras: dict = field(default_factory=dict)

    @property
    def slack(self):
        return self.bound - self.lhs

    def holds_from(self, k0):
        """True when the inequality holds at every ``k >= k0``."""
        sel = self.ks >= k0
        return bool(np.all(self.lhs[sel] <= self.bound[sel] + self.tol[sel]))


@dataclass
class EnergySeries:
    """Energy values, coefficient sequences and the descent ledger.

    ``coefficients`` maps names to arrays aligned with ``ks`` (the
    coefficient at index ``k``). ``sign_indices`` gives, per coefficient, the
    first ``k`` after which it is nonnegative for the rest of the range.
    """

    variant: str
    ks: np.ndarray
    E: np.ndarray
    coefficients: dict
    sign_indices: dict
    ledger: DescentLedger
    config: EnergyConfig

    @property
    def values(self):
        return list(zip(self.ks.tolist(), self.E.tolist()))

    def max_sign_index(self):
        idx = [v for v in self.sign_indices.values()]
        if any(v is None for v in idx):
            return None
        return max(idx) if idx else int(self.ks[0])


def _weights(cfg, sched, k):
    # Index 0 appears only in entries that are never used; silence it.
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return _weights_raw(cfg, sched, k)


def _weights_raw(cfg, sched, k):
    a_k = cfg.a * k ** (cfg.r - 1)
    b_k = k**cfg.r
    return a_k, b_k, sched.alpha_k(k), sched.c_k(k), sched.lambda_k(k)


def weak_coefficients(sched: ParamSchedule, cfg: EnergyConfig, k):
    """Weak-energy coefficient sequences at integer array ``k >= 2``."""
    k = np.asarray(k, dtype=float)
    a0, b0, al0, c0, l0 = _weights(cfg, sched, k)
    am, bm, _, _, lm = _weights(cfg, sched, k - 1)
    ap, bp, alp, cp, _ = _weights(cfg, sched, k + 1)
    with np.errstate(invalid="ignore"):
        return _weak_dict(a0, b0, al0, c0, l0, am, bm, lm, ap, bp, alp, cp)


def _weak_dict(a0, b0, al0, c0, l0, am, bm, lm, ap, bp, alp, cp):
    return {
        "mu": (2 * b0**2 - 2 * a0 * b0) * l0,
        "nu": -alp * ap * bp - a0**2 + a0 * b0,
        "sigma": alp * bp**2 * cp,
        "m": 2 * bm**2 * lm - 2 * b0**2 * l0 + 2 * a0 * b0 * l0,
        "n": -(al0 * a0 * b0 - a0 * b0 * c0 - am * bm - alp * ap * bp + a0 * b0),
        "eta": -(al0**2) * b0**2 - al0 * a0 * b0 + al0 * b0**2 * c0 + bm**2 - am * bm,
        "s": -(b0**2 * c0**2 + alp * bp**2 * cp - al0 * b0**2 * c0 - a0 * b0 * c0),
        "xi": bm**2 * lm**2,
    }


def strong_coefficients(sched: ParamSchedule, cfg: EnergyConfig, k):
    """Strong-energy coefficient sequences at integer array ``k >= 3``."""
    k = np.asarray(k, dtype=float)
    a0, b0, al0, c0, l0 = _weights(cfg, sched, k)
    a1, b1, al1, c1, l1 = _weights(cfg, sched, k - 1)
    a2, b2, _, _, l2 = _weights(cfg, sched, k - 2)
    s_km1 = cfg.s / (k - 1) ** (sched.p - sched.q)
    return {
        "mu": 2 * b1**2 * l1,
        "nu": -(a0**2) - al0 * a0 * b0 + a0 * b0 * c0 + a1 * b1,
        "sigma": -(b0**2) * c0**2 + al0 * b0**2 * c0 + a0 * b0 * c0 - b1**2 * l1 * c0,
        "xi": b1**2 * l1**2,
        "m": 2 * a1 * b1 * l1 + 2 * b2**2 * l2 - 2 * b1**2 * l1,
        "n": -al1 * a1 * b1 + a1 * b1 * c1 + a2 * b2 - (1 + s_km1) * (a1 * b1 - al0 * a0 * b0),
        "eta": -(al0**2) * b0**2 - al0 * a0 * b0 + al0 * b0**2 * c0 + b1**2 - 3 * a1 * b1,
        "t": (
            -(b1**2) * c1**2
            + al1 * b1**2 * c1
            + a1 * b1 * c1
            - b2**2 * l2 * c1
            - a1 * b1 * l1 * c1
            + b1**2 * l1 * c1
            - al0 * b0**2 * c0
        ),
        "s_km1": s_km1,
    }


def _sign_indices(ks, coeffs, names):
    return {name: detect_tail_index(ks, coeffs[name] >= 0) for name in names}


def _rowdot(A, B):
    return np.einsum("ij,ij->i", A, B)


def _require_dense(trace):
    if trace.dense is None:
        raise ValueError("energy evaluation needs a dense trace (run with dense=True)")
    return trace.dense


def energy_weak(trace, cfg: EnergyConfig, xstar) -> EnergySeries:
    """Weak energy and its descent ledger along a dense trace.

    The ledger at ``k`` compares::

        E_{k+1} - E_k + m_k gap_k + eta_k ||x_k - x_{k-1}||^2
            + b_{k-1}^2 lambda_{k-1}^2 ||u_k||^2 + n_k ||x_k - x*||^2 + s_k ||x_k||^2

    against ``a_k b_k c_k ||x*||^2``.
    """
    sched = trace.schedule
    cfg.validate(sched)
    D = _require_dense(trace)
    X, U, gaps = D.xs, D.us, D.gaps
    K = D.k_max
    if K < 4:
        raise ValueError("trace too short for the energy")
    if np.any(np.isnan(gaps[1:])):
        raise ValueError("weak energy needs the optimality gap (ground truth)")
    xstar = np.asarray(xstar, dtype=float)

    ks_e = np.arange(2, K + 1)  # E_k for k = 2..K
    cprev = weak_coefficients(sched, cfg, ks_e - 1)
    a_m, b_m, _, _, l_m = _weights(cfg, sched, ks_e - 1)
    Xk, Xm, Uk = X[ks_e], X[ks_e - 1], U[ks_e]
    dm = Xm - xstar
    w = a_m[:, None] * dm + b_m[:, None] * (Xk - Xm + l_m[:, None] * Uk)
    parts = [
        cprev["mu"] * gaps[ks_e - 1],
        _rowdot(w, w),
        cprev["nu"] * _rowdot(dm, dm),
        cprev["sigma"] * _rowdot(Xm, Xm),
    ]
    E = sum(parts)
    E_scale = sum(np.abs(p) for p in parts)

    # Ledger for k = 2..K-1 (needs E_{k+1}).
    ks_l = ks_e[:-1]
    co = weak_coefficients(sched, cfg, ks_l)
    Xk = X[ks_l]
    vel2 = _rowdot(Xk - X[ks_l - 1], Xk - X[ks_l - 1])
    dk = Xk - xstar
    terms = [
        co["m"] * gaps[ks_l],
        co["eta"] * vel2,
        co["xi"] * _rowdot(U[ks_l], U[ks_l]),
        co["n"] * _rowdot(dk, dk),
        co["s"] * _rowdot(Xk, Xk),
    ]
    lhs = E[1:] - E[:-1] + sum(terms)
    a0, b0, _, c0, _ = _weights(cfg, sched, ks_l)
    bound = a0 * b0 * c0 * float(xstar @ xstar)
    scale = E_scale[1:] + E_scale[:-1] + sum(np.abs(t) for t in terms) + np.abs(bound)
    tol = LEDGER_RTOL * scale
    ledger = DescentLedger(ks_l, lhs, bound, tol, detect_tail_index(ks_l, lhs <= bound + tol))

    coeffs = weak_coefficients(sched, cfg, ks_l)
    names = ("mu", "nu", "sigma", "m", "n", "eta", "s")
    return EnergySeries(
        variant="weak",
        ks=ks_e,
        E=E,
        coefficients={name: coeffs[name] for name in names + ("xi",)} | {"k": ks_l},
        sign_indices=_sign_indices(ks_l, coeffs, names),
        ledger=ledger,
        config=cfg,
    )


def _path_centers(path, K):
    by_k = {pt.k: pt for pt in path}
    missing = [k for k in range(1, K + 1) if k not in by_k]
    if missing:
        raise ValueError(f"path does not cover k = {missing[0]} (needs 1..{K})")
    eps = np.array([by_k[k].eps for k in range(1, K + 1)])
    C = np.array([by_k[k].center for k in range(1, K + 1)])
    return eps, C


def energy_strong(trace, cfg: EnergyConfig, path, problem) -> EnergySeries:
    """Strong energy and its descent ledger along a dense trace.

    ``path`` must contain the Tikhonov centers for every ``k`` in
    ``1..K`` and ``problem`` is used to evaluate ``f`` at the centers.

    The ledger at ``k >= 3`` compares::

        E_{k+1} - E_k + xi_k ||u_k||^2 + m_k G_{k-1} + n_k ||x_{k-1} - xbar_{k-1}||^2
            + eta_k ||x_k - x_{k-1}||^2 + t_k ||x_{k-1}||^2

    (``G_k = f_k(x_k) - f_k(xbar_k)``) against the exact bound ``R_k``
    made of center terms. ``R_k`` splits as ``S_k`` (the center-increment
    part with the ``(1 + 1/s_{k-1})`` weight) plus a remainder, and
    ``ledger.extras["C2"]`` is the largest ratio of the positive part of the
    remainder to ``k**(2r-1-p)`` past the ledger index.
    """
    sched = trace.schedule
    cfg.validate(sched)
    D = _require_dense(trace)
    X, U = D.xs, D.us
    K = D.k_max
    if K < 6:
        raise ValueError("trace too short for the energy")
    if problem.ground_truth is None:
        raise ValueError("strong energy needs ground truth to evaluate gaps")
    eps, C = _path_centers(path, K)
    cks = np.asarray(sched.c_k(np.arange(1, K + 1)))
    if not np.allclose(eps, cks, rtol=1e-12, atol=0):
        raise ValueError("path eps does not match the schedule's c_k")
    # Row k of Cb is xbar_k (row 0 unused).
    Cb = np.vstack([np.full((1, problem.dim), np.nan), C])
    epsb = np.concatenate([[np.nan], eps])
    gap_x = np.array([problem.gap(X[k]) for k in range(K + 1)])
    gap_c = np.concatenate([[np.nan], [problem.gap(C[i]) for i in range(K)]])
    nx = _rowdot(X, X)
    nc = _rowdot(Cb, Cb)
    G = np.full(K + 1, np.nan)
    G[1:] = gap_x[1:] - gap_c[1:] + 0.5 * epsb[1:] * (nx[1:] - nc[1:])

    ks_e = np.arange(3, K + 1)  # E_k for k = 3..K
    # mu, nu, sigma at index k-1 only reach back to weights at k-2 >= 1.
    km = (ks_e - 1).astype(float)
    a1, b1, al1, c1, l1 = _weights(cfg, sched, km)
    a2, b2, _, _, l2 = _weights(cfg, sched, km - 1)
    mu_p = 2 * b2**2 * l2
    nu_p = -(a1**2) - al1 * a1 * b1 + a1 * b1 * c1 + a2 * b2
    sig_p = -(b1**2) * c1**2 + al1 * b1**2 * c1 + a1 * b1 * c1 - b2**2 * l2 * c1
    Xk, Xm, Uk, Cm = X[ks_e], X[ks_e - 1], U[ks_e], Cb[ks_e - 1]
    dm = Xm - Cm
    w = a1[:, None] * dm + b1[:, None] * (Xk - Xm + l1[:, None] * Uk)
    parts = [mu_p * G[ks_e - 1], _rowdot(w, w), nu_p * _rowdot(dm, dm), sig_p * _rowdot(Xm, Xm)]
    E = sum(parts)
    E_scale = sum(np.abs(p) for p in parts)

    ks_l = ks_e[:-1]  # ledger k = 3..K-1
    co = strong_coefficients(sched, cfg, ks_l)
    Xk, Xm = X[ks_l], X[ks_l - 1]
    dm = Xm - Cb[ks_l - 1]
    vel2 = _rowdot(Xk - Xm, Xk - Xm)
    terms = [
        co["xi"] * _rowdot(U[ks_l], U[ks_l]),
        co["m"] * G[ks_l - 1],
        co["n"] * _rowdot(dm, dm),
        co["eta"] * vel2,
        co["t"] * _rowdot(Xm, Xm),
    ]
    lhs = E[1:] - E[:-1] + sum(terms)

    a0, b0, al0, c0, _ = _weights(cfg, sched, ks_l)
    a1, b1, _, c1, l1 = _weights(cfg, sched, ks_l - 1)
    dC = Cb[ks_l] - Cb[ks_l - 1]
    dc2 = _rowdot(dC, dC)
    young = (1 + 1 / co["s_km1"]) * (a1 * b1 - al0 * a0 * b0) + 0.5 * a1 * b1
    S = young * dc2
    rest = (
        (b1**2 * l1 * (c1 - c0) + a0 * b0 * c0) * nc[ks_l]
        - a1 * b1 * l1 * c1 * nc[ks_l - 1]
        - b1**2 * l1 * c1 * dc2
    )
    bound = S + rest
    scale = (
        E_scale[1:]
        + E_scale[:-1]
        + sum(np.abs(t) for t in terms)
        + np.abs(S)
        + np.abs(b1**2 * l1 * (c1 - c0) + a0 * b0 * c0) * nc[ks_l]
        + np.abs(a1 * b1 * l1 * c1) * nc[ks_l - 1]
    )
    tol = LEDGER_RTOL * scale
    index = detect_tail_index(ks_l, lhs <= bound + tol)
    power = ks_l.astype(float) ** (2 * cfg.r - 1 - sched.p)
    sel = ks_l >= (index if index is not None else ks_l[-1])
    C2 = float(np.max(np.maximum(rest[sel], 0.0) / power[sel])) if np.any(sel) else math.nan
    ledger = DescentLedger(ks_l, lhs, bound, tol, index, extras={"S": S, "C2": C2, "power": power})

    names = ("mu", "nu", "sigma", "xi", "m", "n", "eta", "t")
    return EnergySeries(
        variant="strong",
        ks=ks_e,
        E=E,
        coefficients={name: co[name] for name in names + ("s_km1",)} | {"k": ks_l},
        sign_indices=_sign_indices(ks_l, co, names),
        ledger=ledger,
        config=cfg,
    )


def write_energy_csv(series: EnergySeries, out):
    """Write ``k,E,mu,nu,sigma,...,lhs,bound`` rows (ledger range)."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    names = [n for n in series.coefficients if n != "k"]
    ks = series.ledger.ks
    E_by_k = dict(zip(series.ks.tolist(), series.E.tolist()))
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "E"] + names + ["ledger_lhs", "ledger_bound"])
        for i, k in enumerate(ks.tolist()):
            row = [k, "%.17g" % E_by_k[k]]
            row += ["%.17g" % series.coefficients[n][i] for n in names]
            row += ["%.17g" % series.ledger.lhs[i], "%.17g" % series.ledger.bound[i]]
            w.writerow(row)
    return out
