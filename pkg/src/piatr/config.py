"""Run configuration stored as flat dotted-key TOML.

Example::

    problem.kind = "quadratic"
    problem.dim = 5
    schedule.q = 0.5
    schedule.p = 1.8
    run.iters = 100000
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .params import ParamSchedule
from .prox_catalog import PROBLEM_KINDS, make_problem

__all__ = [
    "ConfigError",
    "ProblemConfig",
    "RunOptions",
    "DiagnosticsConfig",
    "RunConfig",
    "load_flat_config",
    "dump_flat_config",
    "X_INIT_CHOICES",
]

X_INIT_CHOICES = ("zero", "random_unit")


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


def _flatten(d, prefix=""):
    out = {}
    for key, val in d.items():
        full = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(_flatten(val, full + "."))
        else:
            out[full] = val
    return out


def load_flat_config(path):
    """Parse a TOML file into a ``{"section.key": value}`` dict."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return _flatten(data)


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (str, Path)):
        return json.dumps(str(v), ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dump_flat_config(flat):
    """Serialize a flat dict as sorted ``key = value`` lines.

    ``None`` values are omitted.
    """
    lines = [f"{key} = {_toml_value(val)}" for key, val in sorted(flat.items()) if val is not None]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ProblemConfig:
    kind: str = "quadratic"
    dim: int = 5
    seed: int = 0
    matrix_path: str | None = None
    b_path: str | None = None

    def build(self):
        try:
            prob = make_problem(self.kind, self.dim, self.seed, self.matrix_path, self.b_path)
        except (ValueError, OSError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.kind == "custom_csv" and prob.dim != self.dim:
            raise ConfigError(f"dimension mismatch: problem.dim = {self.dim} but the matrix has {prob.dim} columns")
        return prob


@dataclass(frozen=True)
class RunOptions:
    iters: int = 1000
    record_every: int | None = None
    dense_iterates: bool = False
    x_init: str = "random_unit"
    x_seed: int | None = None

    def starting_points(self, dim, problem_seed):
        if self.x_init == "zero":
            x = np.zeros(dim)
        else:
            seed = problem_seed if self.x_seed is None else self.x_seed
            rng = np.random.default_rng([int(seed), 1])
            x = rng.standard_normal(dim)
            x /= np.linalg.norm(x)
        return x.copy(), x.copy()


@dataclass(frozen=True)
class DiagnosticsConfig:
    energy_variant: str | None = None
    r: float | None = None
    a: float | None = None
    s: float | None = None
    window_fraction: float = 0.5
    s_margin: float = 0.05


_SCHEDULE_DEFAULTS = {"alpha": 2.0, "q": 0.5, "c": 1.0, "p": 1.8, "lambda": 1.0, "delta": 0.0}

_KEYS = {
    "problem.kind": str,
    "problem.dim": int,
    "problem.seed": int,
    "problem.matrix_path": str,
    "problem.b_path": str,
    **{f"schedule.{k}": float for k in _SCHEDULE_DEFAULTS},
    "run.iters": int,
    "run.record_every": int,
    "run.dense_iterates": bool,
    "run.x_init": str,
    "run.x_seed": int,
    "diagnostics.energy_variant": str,
    "diagnostics.r": float,
    "diagnostics.a": float,
    "diagnostics.s": float,
    "diagnostics.window_fraction": float,
    "diagnostics.s_margin": float,
}


def _coerce(key, val, typ):
    if typ is bool:
        if isinstance(val, bool):
            return val
        if isinstance(val, str) and val.lower() in ("true", "false"):
            return val.lower() == "true"
        raise ConfigError(f"{key} must be a boolean")
    if typ is int:
        if isinstance(val, bool):
            raise ConfigError(f"{key} must be an integer")
        if isinstance(val, float) and val.is_integer():
            return int(val)
        try:
            return int(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be an integer, got {val!r}") from None
    if typ is float:
        if isinstance(val, bool):
            raise ConfigError(f"{key} must be a number")
        try:
            return float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number, got {val!r}") from None
    return str(val)


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig
    schedule: ParamSchedule
    run: RunOptions = field(default_factory=RunOptions)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)

    @classmethod
    def from_flat(cls, flat, base_dir=None):
        """Validate a flat dict; relative paths resolve against ``base_dir``."""
        vals = {}
        for key, val in flat.items():
            if key.startswith("trace."):
                continue
            if key not in _KEYS:
                raise ConfigError(f"unknown configuration key {key!r}")
            vals[key] = _coerce(key, val, _KEYS[key])

        kind = vals.get("problem.kind", "quadratic")
        if kind not in PROBLEM_KINDS:
            raise ConfigError(f"problem.kind must be one of {PROBLEM_KINDS}, got {kind!r}")
        paths = {}
        for key in ("problem.matrix_path", "problem.b_path"):
            if key in vals:
                p = Path(vals[key])
                if base_dir is not None and not p.is_absolute():
                    p = Path(base_dir) / p
                if not p.exists():
                    raise ConfigError(f"{key}: file {p} does not exist")
                paths[key] = str(p)
        if kind == "custom_csv" and len(paths) != 2:
            raise ConfigError("custom_csv requires problem.matrix_path and problem.b_path")
        dim = vals.get("problem.dim", 5)
        if dim < 1:
            raise ConfigError("problem.dim must be positive")
        problem = ProblemConfig(
            kind=kind,
            dim=dim,
            seed=vals.get("problem.seed", 0),
            matrix_path=paths.get("problem.matrix_path"),
            b_path=paths.get("problem.b_path"),
        )
        sched_vals = {k: vals.get(f"schedule.{k}", d) for k, d in _SCHEDULE_DEFAULTS.items()}
        try:
            schedule = ParamSchedule(
                alpha=sched_vals["alpha"],
                q=sched_vals["q"],
                c=sched_vals["c"],
                p=sched_vals["p"],
                lambda0=sched_vals["lambda"],
                delta=sched_vals["delta"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

        iters = vals.get("run.iters", 1000)
        if iters < 2:
            raise ConfigError("run.iters must be at least 2")
        rec = vals.get("run.record_every")
        if rec is not None and rec < 1:
            raise ConfigError("run.record_every must be at least 1")
        x_init = vals.get("run.x_init", "random_unit")
        if x_init not in X_INIT_CHOICES:
            raise ConfigError(f"run.x_init must be one of {X_INIT_CHOICES}")
        run = RunOptions(
            iters=iters,
            record_every=rec,
            dense_iterates=vals.get("run.dense_iterates", False),
            x_init=x_init,
            x_seed=vals.get("run.x_seed"),
        )

        variant = vals.get("diagnostics.energy_variant")
        if variant is not None and variant.lower() not in ("weak", "strong"):
            raise ConfigError("diagnostics.energy_variant must be 'weak' or 'strong'")
        wf = vals.get("diagnostics.window_fraction", 0.5)
        if not 0 < wf < 1:
            raise ConfigError("diagnostics.window_fraction must lie in (0, 1)")
        sm = vals.get("diagnostics.s_margin", 0.05)
        if sm <= 0:
            raise ConfigError("diagnostics.s_margin must be positive")
        diag = DiagnosticsConfig(
            energy_variant=None if variant is None else variant.lower(),
            r=vals.get("diagnostics.r"),
            a=vals.get("diagnostics.a"),
            s=vals.get("diagnostics.s"),
            window_fraction=wf,
            s_margin=sm,
        )
        return cls(problem, schedule, run, diag)

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_flat(load_flat_config(path), base_dir=path.parent)

    def to_flat(self):
        """Flat snapshot suitable for :func:`dump_flat_config`."""
        flat = {
            "problem.kind": self.problem.kind,
            "problem.dim": self.problem.dim,
            "problem.seed": self.problem.seed,
            "problem.matrix_path": self.problem.matrix_path,
            "problem.b_path": self.problem.b_path,
            "run.iters": self.run.iters,
            "run.record_every": self.run.record_every,
            "run.dense_iterates": self.run.dense_iterates,
            "run.x_init": self.run.x_init,
            "run.x_seed": self.run.x_seed,
            "diagnostics.energy_variant": self.diagnostics.energy_variant,
            "diagnostics.r": self.diagnostics.r,
            "diagnostics.a": self.diagnostics.a,
            "diagnostics.s": self.diagnostics.s,
            "diagnostics.window_fraction": self.diagnostics.window_fraction,
            "diagnostics.s_margin": self.diagnostics.s_margin,
        }
        for key, val in self.schedule.as_dict().items():
            flat[f"schedule.{key}"] = val
        return flat
