"""Experiment harness: error metrics, sweeps, output files, plots and the CLI."""

from .runner import (
    BasisStudyRow,
    ErrorReport,
    Method,
    RunResult,
    basis_study,
    exact_grid,
    l1_error,
    run_scenario,
    sweep,
)

__all__ = [
    "BasisStudyRow",
    "ErrorReport",
    "Method",
    "RunResult",
    "basis_study",
    "exact_grid",
    "l1_error",
    "run_scenario",
    "sweep",
]
