"""Explicit dynamics with approximate dual spline bases."""

from ._core import (
    ConfigError,
    NumericalError,
    approximate_dual,
    bessel_zero,
    duality_matrix,
    evaluate,
    quasi_project,
    run_annulus,
    run_experiment,
    run_project,
    run_spectrum,
    run_stability,
    stability_limit,
    string_frequency,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "approximate_dual",
    "bessel_zero",
    "duality_matrix",
    "evaluate",
    "quasi_project",
    "run_annulus",
    "run_experiment",
    "run_project",
    "run_spectrum",
    "run_stability",
    "stability_limit",
    "string_frequency",
]
