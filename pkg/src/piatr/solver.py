"""The inertial proximal iteration with vanishing Tikhonov regularization.

One step reads::

    y_k     = x_k + alpha_k (x_k - x_{k-1})
    x_{k+1} = prox_{lambda_k f}(y_k - c_k x_k)

Indexing starts at ``k = 1`` with ``x_0`` and ``x_1`` given. The implicit
step selects a subgradient ``u_{k+1}`` of ``f`` at ``x_{k+1}``, recovered
exactly from three consecutive iterates by :func:`recover_subgradient`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .params import ParamSchedule

__all__ = [
    "SolverState",
    "IterateRecord",
    "DenseIterates",
    "Trace",
    "NonFiniteIterateError",
    "step",
    "recover_subgradient",
    "default_record_ks",
    "run",
    "TRACE_COLUMNS",
    "FGAP_FLOOR",
    "DENSE_MAX_ITERS",
    "DENSE_MAX_DIM",
    "write_trace_csv",
    "read_trace_csv",
    "sidecar_path",
]

TRACE_COLUMNS = ("k", "fgap", "vel", "subgrad", "xnorm", "dist_xstar")

#: Gap values below this are replaced by the floor before taking logs.
FGAP_FLOOR = 1e-15

#: Tolerance on negative gaps before they are clipped to zero.
FGAP_NEG_TOL = 1e-12

DENSE_MAX_ITERS = 100_000
DENSE_MAX_DIM = 100


@dataclass(frozen=True)
class SolverState:
    """Iteration index ``k`` with ``x_k`` and ``x_{k-1}``."""

    k: int
    x_curr: np.ndarray
    x_prev: np.ndarray
    schedule: ParamSchedule

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValueError("k must be >= 1")
        if np.shape(self.x_curr) != np.shape(self.x_prev) or np.ndim(self.x_curr) != 1:
            raise ValueError("x_curr and x_prev must be vectors of equal length")


@dataclass(frozen=True)
class IterateRecord:
    """Scalar diagnostics at iteration ``k``.

    ``fgap`` and ``dist_xstar`` are NaN when the problem has no ground truth.
    ``subgrad`` is NaN at ``k = 1`` where ``u_1`` is undefined.
    """

    k: int
    fgap: float
    vel: float
    subgrad: float
    xnorm: float
    dist_xstar: float


@dataclass
class DenseIterates:
    """Full vectors kept by a dense run; row ``k`` holds iteration ``k``.

    ``us[k]`` is NaN for ``k < 2``. ``gaps[k]`` is ``f(x_k) - f*`` (NaN
    without ground truth).
    """

    xs: np.ndarray
    us: np.ndarray
    gaps: np.ndarray

    @property
    def k_max(self):
        return self.xs.shape[0] - 1


@dataclass
class Trace:
    """Ordered record stream of one run."""

    records: list
    schedule: ParamSchedule
    config_snapshot: dict = field(default_factory=dict)
    problem_id: str = ""
    seed: int | None = None
    fgap_floor: float = FGAP_FLOOR
    dense: DenseIterates | None = None
    aborted_at: int | None = None

    def __post_init__(self):
        ks = [r.k for r in self.records]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("trace records must be strictly increasing in k")

    def __len__(self):
        return len(self.records)

    @property
    def ks(self):
        return np.array([r.k for r in self.records], dtype=np.int64)

    def column(self, name):
        """Column ``name`` (one of :data:`TRACE_COLUMNS`) as an array."""
        if name not in TRACE_COLUMNS:
            raise KeyError(name)
        if name == "k":
            return self.ks
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def series(self, name, floor=False):
        """``(k, value)`` arrays, optionally with the gap floor applied."""
        vals = self.column(name)
        if floor:
            vals = np.maximum(vals, self.fgap_floor)
        return self.ks, vals


class NonFiniteIterateError(RuntimeError):
    """Raised when an iterate stops being finite.

    ``last_valid_k`` is the last iteration with a finite iterate and
    ``trace`` holds the records collected up to it.
    """

    def __init__(self, last_valid_k, trace):
        super().__init__(f"non-finite iterate after k={last_valid_k}")
        self.last_valid_k = last_valid_k
        self.trace = trace


def step(state: SolverState, problem) -> SolverState:
    """Advance the iteration by one step."""
    s = state.schedule
    k = state.k
    x, xp = state.x_curr, state.x_prev
    v = x + s.alpha_k(k) * (x - xp) - s.c_k(k) * x
    x_next = problem.prox(s.lambda_k(k), v)
    return SolverState(k + 1, x_next, x, s)


def recover_subgradient(x_k, x_km1, x_km2, sched: ParamSchedule, k: int):
    """Subgradient ``u_k`` of ``f`` at ``x_k`` selected by the prox step.

    ``u_k = (alpha_{k-1}(x_{k-1}-x_{k-2}) + (1-c_{k-1}) x_{k-1} - x_k) / lambda_{k-1}``
    for ``k >= 2``.
    """
    if k < 2:
        raise ValueError("u_k is defined for k >= 2")
    x_k = np.asarray(x_k, dtype=float)
    x_km1 = np.asarray(x_km1, dtype=float)
    x_km2 = np.asarray(x_km2, dtype=float)
    if not (x_k.shape == x_km1.shape == x_km2.shape):
        raise ValueError("iterates must share one shape")
    j = k - 1
    # Same arithmetic as the prox argument in ``step``.
    v = x_km1 + sched.alpha_k(j) * (x_km1 - x_km2) - sched.c_k(j) * x_km1
    return (v - x_k) / sched.lambda_k(j)


def default_record_ks(iters):
    """Every ``k`` up to 1000, then every 10th, plus the final ``k``."""
    ks = list(range(1, min(iters, 1000) + 1))
    if iters > 1000:
        ks.extend(range(1010, iters + 1, 10))
    if ks[-1] != iters:
        ks.append(iters)
    return ks


def _record_ks(iters, record_every):
    if record_every is None:
        return default_record_ks(iters)
    ks = list(range(1, iters + 1, record_every))
    if ks[-1] != iters:
        ks.append(iters)
    return ks


def _norm(v):
    return math.sqrt(float(v @ v))


def run(
    problem,
    sched: ParamSchedule,
    x0,
    x1,
    iters: int,
    record_every: int | None = None,
    dense: bool = False,
    config_snapshot: dict | None = None,
    seed: int | None = None,
) -> Trace:
    """Run ``iters`` iterations and record diagnostics.

    Parameters
    ----------
    problem : ProxProblem
    sched : ParamSchedule
    x0, x1 : array_like
        Starting points ``x_0`` and ``x_1``.
    iters : int
        Final index ``K``; iterates ``x_1, ..., x_K`` are produced.
    record_every : int, optional
        Record every ``record_every``-th index starting at 1. By default
        every index up to 1000 is recorded, then every 10th. The final index
        is always recorded.
    dense : bool
        Keep every iterate and subgradient in ``trace.dense``. Limited to
        ``iters <= 1e5`` and ``dim <= 100``.

    Raises
    ------
    NonFiniteIterateError
        If an iterate becomes non-finite; carries the partial trace.
    """
    iters = int(iters)
    if iters < 2:
        raise ValueError("iters must be at least 2")
    if record_every is not None and int(record_every) < 1:
        raise ValueError("record_every must be at least 1")
    x0 = np.array(x0, dtype=float)
    x1 = np.array(x1, dtype=float)
    if x0.shape != (problem.dim,) or x1.shape != (problem.dim,):
        raise ValueError(f"starting points must have shape ({problem.dim},)")
    if dense and (iters > DENSE_MAX_ITERS or problem.dim > DENSE_MAX_DIM):
        raise ValueError(f"dense mode is limited to iters <= {DENSE_MAX_ITERS} and dim <= {DENSE_MAX_DIM}")

    gt = problem.ground_truth
    xstar = gt.xstar if gt is not None else None
    record_set = _record_ks(iters, None if record_every is None else int(record_every))
    records = []
    dense_data = None
    if dense:
        dense_data = DenseIterates(
            xs=np.full((iters + 1, problem.dim), np.nan),
            us=np.full((iters + 1, problem.dim), np.nan),
            gaps=np.full(iters + 1, np.nan),
        )
        dense_data.xs[0] = x0
        dense_data.xs[1] = x1

    def gap_of(x):
        if gt is None:
            return math.nan
        g = problem.gap(x)
        if g < -FGAP_NEG_TOL:
            raise RuntimeError(f"negative gap {g} beyond tolerance")
        return max(g, 0.0)

    def make_record(k, xk, xkm1, u):
        return IterateRecord(
            k=k,
            fgap=gap_of(xk),
            vel=_norm(xk - xkm1),
            subgrad=_norm(u) if u is not None else math.nan,
            xnorm=_norm(xk),
            dist_xstar=_norm(xk - xstar) if xstar is not None else math.nan,
        )

    def finish(aborted_at=None):
        return Trace(
            records=records,
            schedule=sched,
            config_snapshot=dict(config_snapshot or {}),
            problem_id=problem.name,
            seed=seed,
            dense=dense_data,
            aborted_at=aborted_at,
        )

    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(x1))):
        raise NonFiniteIterateError(0, finish(0))

    ri = 0
    if record_set[0] == 1:
        records.append(make_record(1, x1, x0, None))
        ri = 1
    if dense:
        dense_data.gaps[0] = gap_of(x0) if gt is not None else math.nan
        dense_data.gaps[1] = gap_of(x1) if gt is not None else math.nan

    alpha_c, q = sched.alpha, sched.q
    c_c, p = sched.c, sched.p
    lam, delta = sched.lambda0, sched.delta
    prox = problem._prox_unchecked
    x_prev, x_curr = x0, x1
    # Overflow is caught by the finiteness check below.
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, iters):
            kf = float(k)
            lam_k = lam * kf**delta
            v = x_curr + (1.0 - alpha_c * kf**-q) * (x_curr - x_prev) - (c_c * kf**-p) * x_curr
            x_next = prox(lam_k, v)
            if not np.all(np.isfinite(x_next)):
                raise NonFiniteIterateError(k, finish(k))
            kn = k + 1
            want_record = ri < len(record_set) and record_set[ri] == kn
            if dense or want_record:
                u = (v - x_next) / lam_k
                if dense:
                    dense_data.xs[kn] = x_next
                    dense_data.us[kn] = u
                    if gt is not None:
                        dense_data.gaps[kn] = gap_of(x_next)
                if want_record:
                    u = recover_subgradient(x_next, x_curr, x_prev, sched, kn)
                    records.append(make_record(kn, x_next, x_curr, u))
                    ri += 1
            x_prev, x_curr = x_curr, x_next
    return finish()


def sidecar_path(csv_path):
    """Path of the configuration snapshot stored next to a trace CSV."""
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".config.toml")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if math.isnan(v):
        return "nan"
    return "%.17g" % v


def write_trace_csv(trace: Trace, path, sidecar: bool = True):
    """Write ``k,fgap,vel,subgrad,xnorm,dist_xstar`` rows and a config sidecar."""
    from .config import dump_flat_config

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace.records:
            w.writerow([_fmt(r.k)] + [_fmt(getattr(r, c)) for c in TRACE_COLUMNS[1:]])
    if sidecar:
        snap = dict(trace.config_snapshot)
        for key, val in trace.schedule.as_dict().items():
            snap.setdefault(f"schedule.{key}", val)
        snap["trace.problem_id"] = trace.problem_id
        if trace.seed is not None:
            snap["trace.seed"] = int(trace.seed)
        snap["trace.fgap_floor"] = trace.fgap_floor
        if trace.aborted_at is not None:
            snap["trace.aborted_at"] = int(trace.aborted_at)
        sidecar_path(path).write_text(dump_flat_config(snap))
    return path


def read_trace_csv(path, schedule: ParamSchedule | None = None) -> Trace:
    """Load a trace CSV, taking the schedule from its sidecar when present."""
    from .config import load_flat_config

    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(h.strip() for h in rows[0]) != TRACE_COLUMNS:
        raise ValueError(f"{path}: header must be {','.join(TRACE_COLUMNS)}")
    records = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(TRACE_COLUMNS):
            raise ValueError(f"{path}:{i}: expected {len(TRACE_COLUMNS)} fields")
        try:
            vals = [float(v) for v in row[1:]]
            records.append(IterateRecord(int(row[0]), *vals))
        except ValueError as exc:
            raise ValueError(f"{path}:{i}: {exc}") from exc
    snap = {}
    side = sidecar_path(path)
    if side.exists():
        snap = load_flat_config(side)
    if schedule is None:
        try:
            schedule = ParamSchedule(
                alpha=snap["schedule.alpha"],
                q=snap["schedule.q"],
                c=snap["schedule.c"],
                p=snap["schedule.p"],
                lambda0=snap["schedule.lambda"],
                delta=snap["schedule.delta"],
            )
        except KeyError as exc:
            raise ValueError(f"{path}: no schedule given and sidecar lacks {exc}") from exc
    return Trace(
        records=records,
        schedule=schedule,
        config_snapshot=snap,
        problem_id=str(snap.get("trace.problem_id", "")),
        seed=snap.get("trace.seed"),
        fgap_floor=float(snap.get("trace.fgap_floor", FGAP_FLOOR)),
        aborted_at=snap.get("trace.aborted_at"),
    )
