"""Inertial proximal iteration with vanishing Tikhonov regularization.

Modules
-------
params
    Parameter schedules, regime classification, predicted exponents.
prox_catalog
    Test objectives with exact proximal maps and ground truth.
solver
    The iteration, subgradient recovery and trace persistence.
tikhonov_path
    Tikhonov centers and viscosity-path inequalities.
diagnostics
    Lyapunov energies, rate fits, summability and product sequences.
suites
    Fixed-seed validation suites behind ``piatr validate``.
cli
    Command-line driver.
"""

from .params import (
    ConvergenceMode,
    ParamSchedule,
    RatePrediction,
    Regime,
    RegimeKind,
    classify_regime,
    predicted_rates,
)
from .prox_catalog import make_problem, min_norm_minimizer
from .solver import Trace, recover_subgradient, run, step
from .tikhonov_path import PathPoint, tikhonov_center, viscosity_path

__version__ = "0.1.0"

__all__ = [
    "ConvergenceMode",
    "ParamSchedule",
    "RatePrediction",
    "Regime",
    "RegimeKind",
    "classify_regime",
    "predicted_rates",
    "make_problem",
    "min_norm_minimizer",
    "Trace",
    "recover_subgradient",
    "run",
    "step",
    "PathPoint",
    "tikhonov_center",
    "viscosity_path",
]
