"""Parameter schedules, regime classification and predicted decay exponents.

The iteration is driven by three power-law sequences::

    alpha_k  = 1 - alpha / k**q        (extrapolation)
    c_k      = c / k**p                (Tikhonov weight)
    lambda_k = lambda0 * k**delta      (proximal step size)

``classify_regime`` maps a schedule onto the parameter regimes for which
convergence guarantees are known, and ``predicted_rates`` returns the decay
exponents guaranteed in each regime.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ParamSchedule",
    "RegimeKind",
    "Regime",
    "ConvergenceMode",
    "RatePrediction",
    "classify_regime",
    "predicted_rates",
    "EQUALITY_RTOL",
    "DEFAULT_S_MARGIN",
]

#: Relative tolerance used when testing the exact boundaries ``p = q+1``,
#: ``p = 2``, ``q = 1`` and ``lambda0 = 1``.
EQUALITY_RTOL = 1e-12

#: Default gap between the free exponent ``s`` and the upper end of its range.
DEFAULT_S_MARGIN = 0.05


def _close(a, b):
    return math.isclose(a, b, rel_tol=EQUALITY_RTOL, abs_tol=EQUALITY_RTOL)


@dataclass(frozen=True)
class ParamSchedule:
    """Power-law schedule ``(alpha, q, c, p, lambda0, delta)``.

    Parameters
    ----------
    alpha : float
        Inertial constant, ``alpha > 0``.
    q : float
        Inertial exponent in ``(0, 1]``.
    c : float
        Tikhonov constant, ``c >= 0``. ``c = 0`` switches regularization off.
    p : float
        Tikhonov exponent, ``p > 0``.
    lambda0 : float
        Step-size constant, ``lambda0 > 0``.
    delta : float
        Step-size exponent (any real).

    Notes
    -----
    The accessors accept an integer or an integer array ``k >= 1`` and are
    applied verbatim. In particular ``alpha_k`` is negative for small ``k``
    whenever ``alpha > 1``; no clamping is done because the guarantees are
    asymptotic.
    """

    alpha: float
    q: float
    c: float
    p: float
    lambda0: float
    delta: float

    def __post_init__(self):
        vals = (self.alpha, self.q, self.c, self.p, self.lambda0, self.delta)
        if not all(math.isfinite(float(v)) for v in vals):
            raise ValueError("schedule parameters must be finite")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.q <= 1:
            raise ValueError(f"q must lie in (0, 1], got {self.q}")
        if self.c < 0:
            raise ValueError(f"c must be nonnegative, got {self.c}")
        if self.p <= 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if self.lambda0 <= 0:
            raise ValueError(f"lambda0 must be positive, got {self.lambda0}")
        for name in ("alpha", "q", "c", "p", "lambda0", "delta"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @staticmethod
    def _as_k(k):
        if np.ndim(k) == 0:
            return float(k)
        return np.asarray(k, dtype=float)

    def alpha_k(self, k):
        """Extrapolation coefficient ``1 - alpha/k**q``."""
        return 1.0 - self.alpha * self._as_k(k) ** (-self.q)

    def c_k(self, k):
        """Tikhonov weight ``c/k**p``."""
        return self.c * self._as_k(k) ** (-self.p)

    def lambda_k(self, k):
        """Step size ``lambda0 * k**delta``."""
        return self.lambda0 * self._as_k(k) ** self.delta

    def as_dict(self):
        return {
            "alpha": self.alpha,
            "q": self.q,
            "c": self.c,
            "p": self.p,
            "lambda": self.lambda0,
            "delta": self.delta,
        }


class RegimeKind(str, enum.Enum):
    WEAK_FAST = "WeakFast"
    CRITICAL = "Critical"
    STRONG_VISCOSITY = "StrongViscosity"
    CLASSICAL_NO_TIKHONOV = "ClassicalNoTikhonov"
    OUT_OF_THEORY = "OutOfTheory"

    def __str__(self):
        return self.value


class ConvergenceMode(str, enum.Enum):
    WEAK_TO_MINIMIZER = "WeakToMinimizer"
    STRONG_TO_MIN_NORM = "StrongToMinNorm"
    LIMINF_TO_MIN_NORM = "LiminfToMinNorm"
    NONE_CLAIMED = "NoneClaimed"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Regime:
    """Result of :func:`classify_regime`.

    ``satisfied_hypotheses`` names the conditions that place the schedule in
    ``kind``. For ``OutOfTheory`` the ``violated_hypotheses`` list explains
    which conditions failed for the nearest regime.
    """

    kind: RegimeKind
    satisfied_hypotheses: tuple = ()
    violated_hypotheses: tuple = ()
    # Which guarantees back a Critical classification: "fast" for the
    # no-log rate family, "log" for the family carrying a ln k factor.
    critical_branches: tuple = ()


@dataclass(frozen=True)
class RatePrediction:
    """Decay exponents ``gamma`` in bounds of the form ``O(k**gamma)``.

    ``velocity_exponent`` refers to ``||x_k - x_{k-1}||`` and
    ``subgrad_exponent`` to ``||u_k||`` (not their squares).
    ``sum_estimates`` holds ``(series, weight)`` pairs meaning that
    ``sum_k k**weight * series_k`` is finite; series names are ``"fgap"``,
    ``"vel2"``, ``"subgrad2"`` and ``"tikhonov_gap"``.
    """

    fgap_exponent: float
    velocity_exponent: float
    subgrad_exponent: float
    has_log_factor: bool
    sum_estimates: tuple = ()
    convergence_mode: ConvergenceMode = ConvergenceMode.NONE_CLAIMED
    notes: tuple = field(default=())

    def exponent_for(self, series):
        """Return the exponent for ``"fgap"``, ``"vel"`` or ``"subgrad"``."""
        table = {
            "fgap": self.fgap_exponent,
            "vel": self.velocity_exponent,
            "subgrad": self.subgrad_exponent,
        }
        return table[series]


def _classical_hypotheses(s):
    """Hypotheses shared by the fast-rate family, excluding conditions on p.

    Returns ``(ok, satisfied, violated)``.
    """
    sat, vio = [], []
    if s.q < 1 and not _close(s.q, 1.0):
        sat.append("0<q<1")
        (sat if s.delta >= 0 else vio).append("δ≥0")
    else:
        sat.append("q=1")
        (sat if s.alpha > 3 else vio).append("α>3 for q=1")
        (sat if 0 <= s.delta < s.alpha - 3 else vio).append("0≤δ<α−3")
    return not vio, sat, vio


def classify_regime(sched: ParamSchedule) -> Regime:
    """Classify a schedule into its convergence regime.

    Parameters
    ----------
    sched : ParamSchedule

    Returns
    -------
    Regime
        Exactly one kind. ``p`` is compared with ``q+1`` using relative
        tolerance :data:`EQUALITY_RTOL`. Precedence is
        Critical > WeakFast > StrongViscosity.
    """
    s = sched
    q_is_one = _close(s.q, 1.0)
    base_ok, base_sat, base_vio = _classical_hypotheses(s)

    if s.c == 0:
        if base_ok:
            return Regime(RegimeKind.CLASSICAL_NO_TIKHONOV, tuple(["c=0"] + base_sat))
        return Regime(
            RegimeKind.OUT_OF_THEORY,
            tuple(["c=0"] + base_sat),
            tuple(base_vio),
        )

    critical = _close(s.p, s.q + 1.0)

    if critical:
        branches = []
        sat = ["p=q+1"]
        if base_ok:
            branches.append("fast")
            sat += base_sat
        log_ok = (not q_is_one) and (s.delta < 0 or (s.delta == 0 and s.lambda0 < 1 and not _close(s.lambda0, 1.0)))
        if log_ok:
            branches.append("log")
            sat.append("δ<0" if s.delta < 0 else "λ∈(0,1) at δ=0")
        if branches:
            return Regime(RegimeKind.CRITICAL, tuple(dict.fromkeys(sat)), (), tuple(branches))
        vio = list(base_vio)
        if q_is_one:
            vio.append("0<q<1 for the regularized branch")
        elif s.delta == 0:
            vio.append("λ∈(0,1) at δ=0")
        return Regime(RegimeKind.OUT_OF_THEORY, tuple(sat), tuple(dict.fromkeys(vio)))

    if s.p > s.q + 1:
        sat = list(base_sat)
        vio = list(base_vio)
        if q_is_one:
            (sat if s.p > 2 else vio).append("p>2")
        else:
            p_is_two = _close(s.p, 2.0)
            (sat if (s.p <= 2 or p_is_two) else vio).append("q+1<p≤2")
            if p_is_two:
                (sat if s.c > s.q * (1 - s.q) else vio).append("c>q(1−q) at p=2")
        if not vio:
            return Regime(RegimeKind.WEAK_FAST, tuple(sat))
        return Regime(RegimeKind.OUT_OF_THEORY, tuple(sat), tuple(vio))

    # p < q + 1: strong (viscosity) family.
    sat, vio = [], []
    if q_is_one:
        vio.append("0<q<1")
        vio += base_vio
    else:
        sat.append("0<q<1")
    (sat if s.p > 1 else vio).append("1<p<q+1")
    if s.delta < 0:
        (sat if s.p - s.q - 1 < s.delta else vio).append("p−q−1<δ")
    elif s.delta == 0:
        if _close(s.lambda0, 1.0):
            sat.append("λ=1, δ=0")
        elif s.lambda0 < 1:
            sat.append("λ∈(0,1) at δ=0")
        else:
            vio.append("λ∈(0,1) at δ=0")
    else:
        vio.append("δ≤0")
    if not vio:
        return Regime(RegimeKind.STRONG_VISCOSITY, tuple(sat))
    return Regime(RegimeKind.OUT_OF_THEORY, tuple(sat), tuple(vio))


def _free_exponent(upper, margin):
    """Pick ``s`` in ``(1/2, upper)``, ``margin`` below the top when possible."""
    s = upper - margin
    if s <= 0.5:
        s = 0.5 * (0.5 + upper)
    return s


def _neg(x):
    # Bounds with a positive exponent carry no decay information.
    return min(-x, 0.0)


def predicted_rates(sched: ParamSchedule, regime: Regime, s_margin: float = DEFAULT_S_MARGIN) -> RatePrediction:
    """Decay exponents guaranteed for ``sched`` in ``regime``.

    Parameters
    ----------
    sched : ParamSchedule
    regime : Regime
        Output of :func:`classify_regime` for ``sched``.
    s_margin : float, optional
        Distance of the free exponent ``s`` below the top of its admissible
        interval, used by the Critical family and the ergodic sums of the
        strong family.

    Raises
    ------
    ValueError
        If ``regime.kind`` is ``OutOfTheory``.
    """
    if s_margin <= 0:
        raise ValueError("s_margin must be positive")
    kind = regime.kind
    q, p, d = sched.q, sched.p, sched.delta

    if kind is RegimeKind.OUT_OF_THEORY:
        raise ValueError("no rates are available for an OutOfTheory schedule")

    if kind in (RegimeKind.WEAK_FAST, RegimeKind.CLASSICAL_NO_TIKHONOV):
        return RatePrediction(
            fgap_exponent=-(q + d + 1),
            velocity_exponent=-(q + 1) / 2,
            subgrad_exponent=-((q + 1) / 2 + d),
            has_log_factor=False,
            sum_estimates=(("fgap", q + d), ("vel2", 1.0), ("subgrad2", q + 2 * d + 1)),
            convergence_mode=ConvergenceMode.WEAK_TO_MINIMIZER,
        )

    if kind is RegimeKind.CRITICAL:
        branches = regime.critical_branches or ("fast",)
        has_log = "log" in branches
        if "fast" in branches:
            s = _free_exponent((q + 1) / 2, s_margin)
            notes = ()
            if has_log:
                notes = (f"sharper bound O(k^{-(p + d):g} ln k) for fgap also holds",)
            return RatePrediction(
                fgap_exponent=_neg(2 * s + d),
                velocity_exponent=_neg(s),
                subgrad_exponent=_neg(s + d),
                has_log_factor=has_log,
                sum_estimates=(("fgap", 2 * s + d - 1), ("vel2", 2 * s - q), ("subgrad2", 2 * s + 2 * d)),
                convergence_mode=ConvergenceMode.NONE_CLAIMED,
                notes=notes,
            )
        s = _free_exponent(p / 2, s_margin)
        return RatePrediction(
            fgap_exponent=_neg(p + d),
            velocity_exponent=_neg(p / 2),
            subgrad_exponent=_neg(p / 2 + d),
            has_log_factor=True,
            sum_estimates=(("fgap", 2 * s + d - 1), ("vel2", 2 * s - q), ("subgrad2", 2 * s + 2 * d)),
            convergence_mode=ConvergenceMode.NONE_CLAIMED,
        )

    # StrongViscosity
    if d == 0 and _close(sched.lambda0, 1.0):
        if p <= 2 * q:
            vel2 = q - p - 1
            fgap = -p
        elif p <= (3 * q + 1) / 2:
            vel2 = -(q + 1)
            fgap = -p
        else:
            vel2 = 2 * p - 4 * q - 2
            fgap = -p if p < (4 * q + 2) / 3 else 2 * p - 4 * q - 2
        sums = ()
        if p > 2 * q:
            sums = (("tikhonov_gap", q), ("subgrad2", 2 * q), ("vel2", q))
        return RatePrediction(
            fgap_exponent=fgap,
            velocity_exponent=vel2 / 2,
            subgrad_exponent=vel2 / 2,
            has_log_factor=False,
            sum_estimates=sums,
            convergence_mode=ConvergenceMode.STRONG_TO_MIN_NORM,
        )

    s = _free_exponent(p / 2, s_margin)
    return RatePrediction(
        fgap_exponent=_neg(p + d),
        velocity_exponent=_neg(p / 2),
        subgrad_exponent=_neg(p / 2 + d),
        has_log_factor=False,
        sum_estimates=(("fgap", 2 * s + d - 1), ("vel2", 2 * s - q), ("subgrad2", 2 * s + 2 * d)),
        convergence_mode=ConvergenceMode.LIMINF_TO_MIN_NORM,
    )
