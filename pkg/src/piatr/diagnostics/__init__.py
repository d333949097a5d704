"""Energy, rate, summability and product-sequence diagnostics."""

from .energy import (
    LEDGER_RTOL,
    DescentLedger,
    EnergyConfig,
    EnergySeries,
    default_energy_config,
    energy_strong,
    energy_weak,
    strong_coefficients,
    weak_coefficients,
    write_energy_csv,
)
from .pisequence import (
    PiSequence,
    WeightedSumReport,
    pi_growth_limit,
    pi_growth_ratio,
    pi_sequence,
    pi_weighted_sum_check,
    telescoping_violation,
)
from .rates import (
    LAST_DECADE_THRESHOLD,
    MIN_FIT_POINTS,
    NOISE_FLOOR,
    BelowNoiseFloor,
    RateFit,
    SumVerdict,
    decimation_weights,
    fit_rate,
    sum_estimate,
)

__all__ = [
    "LEDGER_RTOL",
    "DescentLedger",
    "EnergyConfig",
    "EnergySeries",
    "default_energy_config",
    "energy_strong",
    "energy_weak",
    "strong_coefficients",
    "weak_coefficients",
    "write_energy_csv",
    "PiSequence",
    "WeightedSumReport",
    "pi_growth_limit",
    "pi_growth_ratio",
    "pi_sequence",
    "pi_weighted_sum_check",
    "telescoping_violation",
    "LAST_DECADE_THRESHOLD",
    "MIN_FIT_POINTS",
    "NOISE_FLOOR",
    "BelowNoiseFloor",
    "RateFit",
    "SumVerdict",
    "decimation_weights",
    "fit_rate",
    "sum_estimate",
]
