"""Calibration routines, fits, Clifford tables and timing ledgers."""

from .fitting import FitResult
from .routines import DEFAULTS, ROUTINES, Routine, RoutineRun, classify, run_routine, save_run
from .timing import TimingLedger, benchmark_report, t_ideal

__all__ = [
    "DEFAULTS",
    "ROUTINES",
    "FitResult",
    "Routine",
    "RoutineRun",
    "TimingLedger",
    "benchmark_report",
    "classify",
    "run_routine",
    "save_run",
    "t_ideal",
]
