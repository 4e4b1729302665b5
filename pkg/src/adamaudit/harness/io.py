"""CSV/JSON serialization with a bit-exact float round trip.

Trajectory rows are written with ``repr`` floats (shortest string that
parses back to the identical double), so re-running a pinned config must
reproduce the file byte for byte.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from ..audit import AuditReport
from .runner import RunResult
from .sweep import RateReport

__all__ = [
    "REPORT_SCHEMA",
    "format_float",
    "write_trajectory_csv",
    "write_margins_csv",
    "write_rate_csv",
    "write_report_json",
    "render_report",
]

REPORT_SCHEMA = "adamaudit-report/1"

TRAJECTORY_HEADER = ("step", "f", "grad_sq", "noise_sq", "eta_s", "eps_s", "b_min", "b_max", "event_flag")
MARGINS_HEADER = ("step", "margin_name", "value", "status")
RATE_HEADER = ("log2_T", "median_metric", "q10", "q90", "theory_rhs")


def format_float(x: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def write_trajectory_csv(path, rows) -> None:
    """Write per-step scalar rows; floats round-trip bit-exactly."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for row in rows:
            step, f, gsq, nsq, eta_s, eps_s, bmin, bmax, flag = row
            w.writerow(
                (
                    step,
                    format_float(f),
                    format_float(gsq),
                    format_float(nsq),
                    format_float(eta_s),
                    format_float(eps_s),
                    format_float(bmin),
                    format_float(bmax),
                    int(flag),
                )
            )


def write_margins_csv(path, report: AuditReport) -> None:
    """Write every margin row of an audit report."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MARGINS_HEADER)
        for step, name, value, status in report.iter_rows():
            w.writerow((step, name, format_float(value), status))


def write_rate_csv(path, rate: RateReport) -> None:
    """Write one row per horizon of a rate sweep."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RATE_HEADER)
        for pt in rate.points:
            w.writerow(
                (
                    format_float(pt.log2_T),
                    format_float(pt.median_metric),
                    format_float(pt.q10),
                    format_float(pt.q90),
                    format_float(pt.theory_rhs),
                )
            )


def _config_payload(result: RunResult) -> dict:
    cfg = result.config
    return {
        "objective": cfg.objective,
        "noise": cfg.noise,
        "beta1": cfg.beta1,
        "beta2": result.params.beta2,
        "c": cfg.c,
        "C0": cfg.C0,
        "C0_effective": result.params.C0,
        "eps0": cfg.eps0,
        "T": cfg.T,
        "delta": cfg.delta,
        "seed": cfg.seed,
        "trajectory_index": cfg.trajectory_index,
        "x0": cfg.x0,
        "audit_mode": cfg.audit_mode,
        "regime": cfg.regime,
        "E0": cfg.E0,
    }


def write_report_json(path, result: RunResult) -> None:
    """Summarize one run (and its audit, if any) as stable JSON."""
    payload: dict = {
        "schema": REPORT_SCHEMA,
        "config": _config_payload(result),
        "t_end": result.t_end,
        "diverged": result.diverged,
        "rate_metric": result.rate_metric,
        "grad_sq_final": result.grad_sq_final,
    }
    if result.report is not None:
        rep = result.report
        hold, skip, violated = rep.counts()
        payload["audit"] = {
            "n_hold": hold,
            "n_skip": skip,
            "n_violated": violated,
            "events": {k: bool(v) for k, v in rep.events.items()},
            "event_margins": {k: float(v) for k, v in rep.event_margins.items()},
            "checks": {
                name: {
                    "n_hold": s.n_hold,
                    "n_skip": s.n_skip,
                    "n_violated": s.n_violated,
                    "worst": None if s.worst() != s.worst() else s.worst(),
                }
                for name, s in rep.checks.items()
            },
        }
    if result.constants is not None:
        consts = result.constants
        fields = {}
        for key, val in vars(consts).items():
            if isinstance(val, (int, float, str)):
                fields[key] = val
            elif isinstance(val, tuple):
                fields[key] = list(val)
        payload["constants"] = fields
    if result.constants_error:
        payload["constants_error"] = result.constants_error
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def render_report(result: RunResult) -> str:
    """Human-readable run summary (one string, newline separated)."""
    lines = [
        f"objective      {result.config.objective}",
        f"noise          {result.config.noise}",
        f"steps          {result.t_end} / {result.config.T}"
        + ("  [stopped: non-finite]" if result.diverged else ""),
        f"rate metric    {result.rate_metric:.6e}",
        f"final grad^2   {result.grad_sq_final:.6e}",
    ]
    if result.constants_error:
        lines.append(f"constants      unavailable ({result.constants_error})")
    if result.report is not None:
        hold, skip, violated = result.report.counts()
        lines.append(f"audit          {hold} hold / {skip} skip / {violated} violated")
        lines.extend("  " + ln for ln in result.report.summary_lines())
    return "\n".join(lines)
