"""Run orchestration, sweeps, serialization, and the command line."""

from .cli import build_parser, main
from .io import (
    REPORT_SCHEMA,
    format_float,
    render_report,
    write_margins_csv,
    write_rate_csv,
    write_report_json,
    write_trajectory_csv,
)
from .runner import RunConfig, RunResult, resolve_run, run_trajectory
from .sweep import (
    DominationReport,
    RatePoint,
    RateReport,
    sweep_rate,
    verify_theorem_bound,
)

__all__ = [
    "RunConfig",
    "RunResult",
    "resolve_run",
    "run_trajectory",
    "RatePoint",
    "RateReport",
    "DominationReport",
    "sweep_rate",
    "verify_theorem_bound",
    "REPORT_SCHEMA",
    "format_float",
    "write_trajectory_csv",
    "write_margins_csv",
    "write_rate_csv",
    "write_report_json",
    "render_report",
    "build_parser",
    "main",
]
