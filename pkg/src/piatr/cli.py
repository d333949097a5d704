"""Command line entry point: ``piatr {regime,run,rates,validate,path}``.

Exit codes: 0 success or all checks PASS, 1 some check FAILed, 2 invalid
input, 3 runtime abort (non-finite iterates).
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .config import ConfigError, RunConfig, load_flat_config
from .diagnostics import (
    BelowNoiseFloor,
    default_energy_config,
    energy_strong,
    energy_weak,
    fit_rate,
    write_energy_csv,
)
from .params import DEFAULT_S_MARGIN, ParamSchedule, RegimeKind, classify_regime, predicted_rates
from .solver import NonFiniteIterateError, read_trace_csv, run, write_trace_csv
from .suites import SUITES, format_report, run_suite
from .tikhonov_path import check_viscosity_inequalities, viscosity_path, write_path_csv

__all__ = ["main", "build_parser", "OUTPUT_DIR_ENV", "RATE_TOL"]

OUTPUT_DIR_ENV = "PIATR_OUTPUT_DIR"
RATE_TOL = 0.15

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_ABORT = 0, 1, 2, 3


def output_dir():
    return Path(os.environ.get(OUTPUT_DIR_ENV, "piatr_output"))


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


# --- regime -----------------------------------------------------------------


def _fmt_exp(x):
    return f"{x:+.4g}"


def cmd_regime(args):
    try:
        sched = ParamSchedule(
            alpha=args.alpha, q=args.q, c=args.c, p=args.p, lambda0=args.lambda_, delta=args.delta
        )
    except ValueError as exc:
        _err(exc)
        return EXIT_INPUT
    regime = classify_regime(sched)
    print(f"schedule: {', '.join(f'{k}={v:g}' for k, v in sched.as_dict().items())}")
    print(f"regime: {regime.kind}")
    if regime.critical_branches:
        print(f"critical branches: {', '.join(regime.critical_branches)}")
    if regime.satisfied_hypotheses:
        print(f"satisfied: {'; '.join(regime.satisfied_hypotheses)}")
    if regime.violated_hypotheses:
        print(f"violated: {'; '.join(regime.violated_hypotheses)}")
    if regime.kind is RegimeKind.OUT_OF_THEORY:
        print("no rate prediction")
        return EXIT_OK
    pred = predicted_rates(sched, regime, args.s_margin)
    log = " (times ln k)" if pred.has_log_factor else ""
    print(f"fgap exponent: {_fmt_exp(pred.fgap_exponent)}{log}")
    print(f"velocity exponent: {_fmt_exp(pred.velocity_exponent)}")
    print(f"subgrad exponent: {_fmt_exp(pred.subgrad_exponent)}")
    print(f"convergence: {pred.convergence_mode}")
    for series, w in pred.sum_estimates:
        print(f"summable: k^{w:.4g} * {series}")
    for note in pred.notes:
        print(f"note: {note}")
    return EXIT_OK


# --- run --------------------------------------------------------------------


def _parse_overrides(items):
    flat = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        raw = raw.strip()
        try:
            val = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            val = raw
        flat[key.strip()] = val
    return flat


def _load_config(path, overrides=None):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    flat = load_flat_config(path)
    flat.update(_parse_overrides(overrides))
    return RunConfig.from_flat(flat, base_dir=path.parent)


def cmd_run(args):
    try:
        cfg = _load_config(args.config, args.set)
        problem = cfg.problem.build()
    except ConfigError as exc:
        _err(exc)
        return EXIT_INPUT
    out = Path(args.out) if args.out else output_dir() / f"{Path(args.config).stem}.csv"
    variant = cfg.diagnostics.energy_variant
    dense = cfg.run.dense_iterates or variant is not None
    x0, x1 = cfg.run.starting_points(problem.dim, cfg.problem.seed)
    try:
        trace = run(
            problem,
            cfg.schedule,
            x0,
            x1,
            cfg.run.iters,
            record_every=cfg.run.record_every,
            dense=dense,
            config_snapshot=cfg.to_flat(),
            seed=cfg.problem.seed,
        )
    except NonFiniteIterateError as exc:
        write_trace_csv(exc.trace, out)
        _err(f"non-finite iterate after k={exc.last_valid_k}; partial trace written to {out}")
        return EXIT_ABORT
    except ValueError as exc:
        _err(exc)
        return EXIT_INPUT
    write_trace_csv(trace, out)
    last = trace.records[-1]
    print(f"wrote {len(trace)} rows to {out}")
    print(f"k={last.k} fgap={last.fgap:.6g} vel={last.vel:.6g} dist_xstar={last.dist_xstar:.6g}")
    if variant is not None:
        d = cfg.diagnostics
        try:
            ecfg = default_energy_config(cfg.schedule, variant, d.r, d.a, d.s)
            if variant == "weak":
                es = energy_weak(trace, ecfg, problem.ground_truth.xstar)
            else:
                path = viscosity_path(problem, cfg.schedule, (1, cfg.run.iters))
                es = energy_strong(trace, ecfg, path, problem)
        except (ValueError, AttributeError) as exc:
            _err(f"energy diagnostics: {exc}")
            return EXIT_INPUT
        eout = out.with_name(out.stem + ".energy.csv")
        write_energy_csv(es, eout)
        print(f"energy ({variant}): sign indices {es.sign_indices}, ledger holds from k={es.ledger.index}")
        print(f"wrote energy series to {eout}")
    return EXIT_OK


# --- rates ------------------------------------------------------------------

RATE_SERIES = ("fgap", "vel", "subgrad")


def rate_rows(trace, window_fraction, tol=RATE_TOL, s_margin=DEFAULT_S_MARGIN):
    """Rows ``(series, predicted, fitted, status, note)`` comparing slopes."""
    regime = classify_regime(trace.schedule)
    pred = None
    if regime.kind is not RegimeKind.OUT_OF_THEORY:
        pred = predicted_rates(trace.schedule, regime, s_margin)
    rows = []
    for name in RATE_SERIES:
        ks, vals = trace.series(name)
        ok = np.isfinite(vals)
        predicted = math.nan if pred is None else pred.exponent_for(name)
        if not ok.any():
            rows.append((name, predicted, math.nan, "SKIP", "no data (missing ground truth)"))
            continue
        fit = fit_rate((ks[ok], vals[ok]), window_fraction=window_fraction, floor=trace.fgap_floor)
        if isinstance(fit, BelowNoiseFloor):
            rows.append((name, predicted, math.nan, "NOTE", f"noise floor: {fit.reason}"))
            continue
        note = f"window {fit.window[0]}..{fit.window[1]}"
        if pred is None:
            rows.append((name, predicted, fit.slope, "NOTE", note + "; no prediction outside theory"))
            continue
        if name == "fgap" and pred.has_log_factor:
            note += "; bound carries ln k"
        status = "PASS" if fit.slope <= predicted + tol else "FAIL"
        rows.append((name, predicted, fit.slope, status, note))
    return regime, rows


def cmd_rates(args):
    try:
        trace = read_trace_csv(args.trace)
    except (OSError, ValueError) as exc:
        _err(exc)
        return EXIT_INPUT
    wf = args.window_fraction
    if wf is None:
        wf = float(trace.config_snapshot.get("diagnostics.window_fraction", 0.5))
    if not 0 < wf < 1:
        _err("window fraction must lie in (0, 1)")
        return EXIT_INPUT
    regime, rows = rate_rows(trace, wf, args.tol, args.s_margin)
    print(f"trace: {args.trace} ({len(trace)} rows, k up to {trace.records[-1].k})")
    print(f"regime: {regime.kind}  tolerance: {args.tol:g}  window fraction: {wf:g}")
    print(f"{'series':<8} {'predicted':>10} {'fitted':>10}  {'status':<6} note")
    for name, p, f, status, note in rows:
        ps = "n/a" if math.isnan(p) else f"{p:+.4f}"
        fs = "n/a" if math.isnan(f) else f"{f:+.4f}"
        print(f"{name:<8} {ps:>10} {fs:>10}  {status:<6} {note}")
    if args.csv:
        out = Path(args.csv)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["series", "predicted", "fitted", "status", "note"])
            for name, p, f, status, note in rows:
                w.writerow([name, "%.17g" % p, "%.17g" % f, status, note])
    return EXIT_FAIL if any(r[3] == "FAIL" for r in rows) else EXIT_OK


# --- validate ---------------------------------------------------------------


def cmd_validate(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if args.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_suite, names))
    else:
        results = [run_suite(n) for n in names]
    failed = False
    for name, checks in zip(names, results):
        print(format_report(name, checks))
        failed |= not all(c.passed for c in checks)
    return EXIT_FAIL if failed else EXIT_OK


# --- path -------------------------------------------------------------------


def cmd_path(args):
    try:
        cfg = _load_config(args.config, args.set)
        problem = cfg.problem.build()
    except ConfigError as exc:
        _err(exc)
        return EXIT_INPUT
    k_max = args.k_max if args.k_max is not None else cfg.run.iters
    if not 1 <= args.k_min < k_max:
        _err("need 1 <= k-min < k-max")
        return EXIT_INPUT
    try:
        path = viscosity_path(problem, cfg.schedule, (args.k_min, k_max))
    except ValueError as exc:
        _err(exc)
        return EXIT_INPUT
    out = Path(args.out) if args.out else output_dir() / f"{Path(args.config).stem}.path.csv"
    write_path_csv(path, problem, out)
    print(f"wrote {len(path)} path points to {out}")
    rep = check_viscosity_inequalities(path)
    for line in rep.lines():
        print(line)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _schedule_flags(p):
    g = p.add_argument_group("schedule")
    g.add_argument("--alpha", type=float, default=2.0)
    g.add_argument("--q", type=float, default=0.5)
    g.add_argument("--c", type=float, default=1.0)
    g.add_argument("--p", type=float, default=1.8)
    g.add_argument("--lambda", dest="lambda_", type=float, default=1.0)
    g.add_argument("--delta", type=float, default=0.0)


def build_parser():
    parser = argparse.ArgumentParser(prog="piatr", description="Proximal inertial iterations with vanishing Tikhonov regularization.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("regime", help="classify a schedule and print predicted rates")
    _schedule_flags(p)
    p.add_argument("--s-margin", type=float, default=DEFAULT_S_MARGIN)
    p.set_defaults(func=cmd_regime)

    p = sub.add_parser("run", help="run the iteration from a config file and write a trace CSV")
    p.add_argument("config")
    p.add_argument("-o", "--out", help=f"trace CSV path (default: ${OUTPUT_DIR_ENV} or ./piatr_output)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. schedule.q=0.6")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("rates", help="compare fitted decay exponents of a trace with the prediction")
    p.add_argument("trace")
    p.add_argument("--window-fraction", type=float, default=None)
    p.add_argument("--tol", type=float, default=RATE_TOL)
    p.add_argument("--s-margin", type=float, default=DEFAULT_S_MARGIN)
    p.add_argument("--csv", help="also write the table as CSV")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("validate", help="run a built-in validation suite")
    p.add_argument("--suite", required=True, choices=[*SUITES, "all"])
    p.add_argument("--jobs", type=int, default=1, help="worker processes for --suite all")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("path", help="export the regularization path for a config")
    p.add_argument("config")
    p.add_argument("-o", "--out")
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_path)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
