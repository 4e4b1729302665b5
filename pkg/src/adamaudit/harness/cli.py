"""Command-line interface.

Subcommands::

    run        execute one trajectory (optionally audited), write artifacts
    audit      execute with auditing forced on and gate on zero violations
    sweep      run a horizon grid across seeds, fit the rate slope
    certify    search a generalized-curvature certificate for an objective
    constants  evaluate the closed-form budget chain for a configuration
    report     re-render a previously written run report

Configuration comes from ``--config file.json`` (keys matching
:class:`~adamaudit.harness.runner.RunConfig`, plus ``T_grid``/``seeds``
for sweeps) with individual flags overriding file values.  Audit gates
print one final line —

    [adamaudit] AUDIT PASSED (0 violated / N margins)

— and exit 0 on pass, 2 on any violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..audit import compute_theory_constants
from ..audit.constants import ConstantsOverflow
from ..problems import certify_generalized, resolve_objective
from .io import (
    render_report,
    write_margins_csv,
    write_rate_csv,
    write_report_json,
    write_trajectory_csv,
)
from .runner import RunConfig, resolve_run, run_trajectory
from .sweep import sweep_rate

__all__ = ["main", "build_parser"]

_CONFIG_KEYS = (
    "objective",
    "noise",
    "beta1",
    "beta2",
    "c",
    "C0",
    "eps0",
    "T",
    "delta",
    "seed",
    "trajectory_index",
    "x0",
    "audit_mode",
    "regime",
    "E0",
)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--objective", help="objective spec, e.g. quadratic:1,10:d=10")
    p.add_argument("--noise", help="noise spec, e.g. ball:1.0,0.5,2.0")
    p.add_argument("--beta1", type=float)
    p.add_argument("--beta2", type=float)
    p.add_argument("--c", type=float, help="horizon coupling: beta2 = 1 - c/T")
    p.add_argument("--C0", type=float, help="base step scale")
    p.add_argument("--eps0", type=float, help="base floor scale")
    p.add_argument("--T", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--trajectory-index", type=int, dest="trajectory_index")
    p.add_argument("--x0", type=float)
    p.add_argument("--audit-mode", choices=("off", "standard", "deep"), dest="audit_mode")
    p.add_argument("--regime", choices=("smooth", "generalized"))
    p.add_argument("--E0", type=float, help="generalized step-scale budget")


def _load_config(args: argparse.Namespace, require=("objective",)) -> dict:
    data: dict = {}
    if args.config is not None:
        try:
            data.update(json.loads(Path(args.config).read_text()))
        except OSError as exc:
            raise SystemExit(f"error: cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise SystemExit(f"error: config file is not valid JSON: {exc}") from None
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    for key in require:
        if key not in data:
            raise SystemExit(f"error: missing required config key {key!r}")
    return data


def _build_run_config(data: dict) -> RunConfig:
    extra = {k: v for k, v in data.items() if k not in _CONFIG_KEYS}
    for k in ("T_grid", "seeds"):
        extra.pop(k, None)
    if extra:
        raise SystemExit(f"error: unknown config keys {sorted(extra)}")
    return RunConfig(**{k: v for k, v in data.items() if k in _CONFIG_KEYS})


def _gate_line(report) -> tuple:
    hold, skip, violated = report.counts()
    total = hold + skip + violated
    verdict = "PASSED" if violated == 0 else "FAILED"
    return f"[adamaudit] AUDIT {verdict} ({violated} violated / {total} margins)", violated == 0


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _build_run_config(_load_config(args))
    result = run_trajectory(cfg)
    out = args.out
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(out / "trajectory.csv", result.rows)
        write_report_json(out / "report.json", result)
        if result.report is not None:
            write_margins_csv(out / "margins.csv", result.report)
    print(render_report(result))
    if result.report is not None:
        line, ok = _gate_line(result.report)
        print(line)
        return 0 if ok else 2
    return 0


def _cmd_audit(args: argparse.Namespace) -> int:
    data = _load_config(args)
    data.setdefault("audit_mode", "standard")
    if args.deep:
        data["audit_mode"] = "deep"
    if data["audit_mode"] == "off":
        data["audit_mode"] = "standard"
    cfg = _build_run_config(data)
    result = run_trajectory(cfg)
    out = args.out
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(out / "trajectory.csv", result.rows)
        write_margins_csv(out / "margins.csv", result.report)
        write_report_json(out / "report.json", result)
    print(render_report(result))
    line, ok = _gate_line(result.report)
    print(line)
    return 0 if ok else 2


def _cmd_sweep(args: argparse.Namespace) -> int:
    data = _load_config(args)
    T_grid = data.pop("T_grid", None)
    seeds = data.pop("seeds", None)
    if args.T_grid:
        T_grid = [int(x) for x in args.T_grid.split(",")]
    if args.seeds is not None:
        seeds = list(range(args.seeds))
    if T_grid is None:
        raise SystemExit("error: sweep needs T_grid (config key or --T-grid)")
    if seeds is None:
        seeds = list(range(10))
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    data.pop("T", None)
    cfg = _build_run_config({**data, "T": int(T_grid[0])})
    rate = sweep_rate(cfg, T_grid, seeds)
    if args.out is not None:
        write_rate_csv(args.out, rate)
    for pt in rate.points:
        print(
            f"T=2^{pt.log2_T:<4.1f} median={pt.median_metric:.6e} "
            f"q10={pt.q10:.6e} q90={pt.q90:.6e} cap={pt.theory_rhs:.6e}"
        )
    print(f"[adamaudit] rate slope {rate.slope:+.4f} (r={rate.rvalue:+.4f}, {rate.n_seeds} seeds)")
    return 0


def _cmd_certify(args: argparse.Namespace) -> int:
    obj = resolve_objective(args.objective)
    cert = certify_generalized(
        obj,
        q=args.q,
        pair_budget=args.budget,
        seed=args.seed,
        domain_radius=args.radius,
    )
    status = "CERTIFIED" if cert.ok else "NOT CERTIFIED"
    print(
        f"[adamaudit] {status} q={cert.q:g} L0={cert.L0:g} Lq={cert.Lq:g} "
        f"max_ratio={cert.max_ratio:.6f} pairs={cert.pairs_tested}"
    )
    print(cert.message)
    return 0 if cert.ok else 2


def _cmd_constants(args: argparse.Namespace) -> int:
    cfg = _build_run_config(_load_config(args))
    obj, model, params, x1 = resolve_run(cfg)
    if obj.smoothness is None:
        raise SystemExit("error: objective carries no smoothness certificate")
    try:
        consts = compute_theory_constants(
            params,
            model,
            obj.smoothness,
            cfg.T,
            cfg.delta,
            obj.dim,
            float(obj.value(x1) - obj.f_star),
            float(np.linalg.norm(obj.grad(x1))),
            E0=cfg.E0,
        )
    except ConstantsOverflow as exc:
        print(f"[adamaudit] constants overflow: {exc}")
        return 2
    for key, val in vars(consts).items():
        if isinstance(val, float):
            print(f"{key:22s} {val:.10e}")
        elif isinstance(val, tuple):
            print(f"{key:22s} {', '.join(f'{v:.4e}' for v in val)}")
        elif isinstance(val, (int, str)):
            print(f"{key:22s} {val}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    payload = json.loads(Path(args.path).read_text())
    if payload.get("schema") != "adamaudit-report/1":
        raise SystemExit(f"error: not a run report: {args.path}")
    cfgp = payload["config"]
    print(f"objective      {cfgp['objective']}")
    print(f"noise          {cfgp['noise']}")
    print(f"steps          {payload['t_end']} / {cfgp['T']}")
    print(f"rate metric    {payload['rate_metric']:.6e}")
    audit = payload.get("audit")
    if audit is None:
        print("audit          (not run)")
        return 0
    total = audit["n_hold"] + audit["n_skip"] + audit["n_violated"]
    verdict = "PASSED" if audit["n_violated"] == 0 else "FAILED"
    for name, counts in audit["checks"].items():
        print(
            f"  {name:34s} {counts['n_hold']:7d} hold {counts['n_skip']:6d} skip "
            f"{counts['n_violated']:4d} violated"
        )
    for name, okflag in audit["events"].items():
        print(f"  event {name:28s} {'holds' if okflag else 'fails'}")
    print(f"[adamaudit] AUDIT {verdict} ({audit['n_violated']} violated / {total} margins)")
    return 0 if audit["n_violated"] == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adamaudit",
        description="Run and audit bias-corrected adaptive-moment trajectories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one trajectory")
    _add_config_flags(p_run)
    p_run.add_argument("--out", type=Path, help="directory for trajectory/report artifacts")
    p_run.set_defaults(fn=_cmd_run)

    p_audit = sub.add_parser("audit", help="execute with auditing and gate on violations")
    _add_config_flags(p_audit)
    p_audit.add_argument("--deep", action="store_true", help="include the decomposed event bounds")
    p_audit.add_argument("--out", type=Path, help="directory for artifacts")
    p_audit.set_defaults(fn=_cmd_audit)

    p_sweep = sub.add_parser("sweep", help="horizon grid across seeds; fit rate slope")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--T-grid", dest="T_grid", help="comma-separated horizons")
    p_sweep.add_argument("--seeds", type=int, help="number of seeds (0..n-1)")
    p_sweep.add_argument("--out", type=Path, help="rate CSV path")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_cert = sub.add_parser("certify", help="search a curvature certificate")
    p_cert.add_argument("--objective", required=True)
    p_cert.add_argument("--q", type=float, required=True)
    p_cert.add_argument("--budget", type=int, default=200_000)
    p_cert.add_argument("--seed", type=int, default=0)
    p_cert.add_argument("--radius", type=float, default=None)
    p_cert.set_defaults(fn=_cmd_certify)

    p_const = sub.add_parser("constants", help="evaluate the budget chain")
    _add_config_flags(p_const)
    p_const.set_defaults(fn=_cmd_constants)

    p_rep = sub.add_parser("report", help="re-render a written run report")
    p_rep.add_argument("path", type=Path, help="report.json produced by run/audit")
    p_rep.set_defaults(fn=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
