"""Horizon sweeps and bound-domination checks across seeds.

The empirical rate metric for one run is the average squared *true*
gradient norm over its steps.  :func:`sweep_rate` runs a seed batch per
horizon (with the decay coupling ``beta2 = 1 - c/T`` re-resolved at each
horizon), summarizes the metric's spread, pairs it with the closed-form
cap, and fits the log-log slope.  :func:`verify_theorem_bound` checks, run
by run, that the realized metric and the running true-gradient norms stay
under their budgeted caps whenever the probabilistic events hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import linregress

from .runner import RunConfig, run_trajectory

__all__ = [
    "RatePoint",
    "RateReport",
    "DominationReport",
    "sweep_rate",
    "verify_theorem_bound",
]


@dataclass(frozen=True)
class RatePoint:
    """Seed-batch summary at one horizon."""

    log2_T: float
    T: int
    median_metric: float
    q10: float
    q90: float
    theory_rhs: float


@dataclass(frozen=True)
class RateReport:
    """Fitted decay of the rate metric across horizons."""

    points: tuple
    slope: float            # d log2(median metric) / d log2(T)
    intercept: float
    rvalue: float
    n_seeds: int


@dataclass(frozen=True)
class DominationReport:
    """Per-run comparison of realized quantities against their caps."""

    n_runs: int
    n_events_hold: int      # runs whose probabilistic events all hold
    n_rate_dominated: int   # of those, runs with rate metric <= cap
    n_grad_dominated: int   # of those, runs with every ||gbar_t||^2 <= cap
    rate_margin_min: float  # min over event-holding runs of (cap - metric)/cap
    ok: bool


def sweep_rate(
    base: RunConfig,
    T_grid,
    seeds,
    audit_mode: str = "off",
) -> RateReport:
    """Run a seed batch at every horizon and fit the median's decay.

    ``seeds`` is an iterable of root seeds (each run keeps
    ``trajectory_index`` from ``base``).  The closed-form cap is evaluated
    once per horizon from the re-resolved configuration.
    """
    from ..audit import compute_theory_constants
    from ..audit.constants import ConstantsOverflow
    from .runner import resolve_run

    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    points = []
    for T in T_grid:
        cfg_T = replace(base, T=int(T), audit_mode=audit_mode)
        metrics = []
        for seed in seeds:
            res = run_trajectory(replace(cfg_T, seed=int(seed)))
            metrics.append(res.rate_metric)
        metrics = np.asarray(metrics)
        obj, model, params, x1 = resolve_run(cfg_T)
        try:
            consts = compute_theory_constants(
                params,
                model,
                obj.smoothness,
                cfg_T.T,
                cfg_T.delta,
                obj.dim,
                float(obj.value(x1) - obj.f_star),
                float(np.linalg.norm(obj.grad(x1))),
                E0=cfg_T.E0,
            )
            rhs = consts.rate_rhs
        except (ConstantsOverflow, TypeError):
            rhs = math.inf
        points.append(
            RatePoint(
                log2_T=math.log2(T),
                T=int(T),
                median_metric=float(np.median(metrics)),
                q10=float(np.quantile(metrics, 0.1)),
                q90=float(np.quantile(metrics, 0.9)),
                theory_rhs=float(rhs),
            )
        )
    xs = np.array([pt.log2_T for pt in points])
    ys = np.log2([pt.median_metric for pt in points])
    fit = linregress(xs, ys)
    return RateReport(
        points=tuple(points),
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        rvalue=float(fit.rvalue),
        n_seeds=len(seeds),
    )


def verify_theorem_bound(results) -> DominationReport:
    """Check realized rate metrics and gradient norms against their caps.

    Each result must carry an audited ledger with budget constants (the
    smooth regime's squared-gradient cap and rate cap).  Runs where a
    probabilistic event fails are excluded from domination counting — the
    caps are only claimed on the event intersection.
    """
    results = list(results)
    n_hold = 0
    n_rate = 0
    n_grad = 0
    margins = []
    for res in results:
        if res.report is None or res.constants is None:
            raise ValueError("domination needs audited runs with constants")
        events_ok = all(bool(v) for v in res.report.events.values())
        if not events_ok:
            continue
        n_hold += 1
        cap = res.constants.rate_rhs
        if res.rate_metric <= cap * (1.0 + 1e-9):
            n_rate += 1
        margins.append((cap - res.rate_metric) / cap)
        led = res.ledger
        gsq = led.gbar_norm_all[1 : led.t_end + 2] ** 2
        if float(np.max(gsq)) <= res.constants.grad_cap_sq * (1.0 + 1e-9):
            n_grad += 1
    ok = n_hold > 0 and n_rate == n_hold and n_grad == n_hold
    return DominationReport(
        n_runs=len(results),
        n_events_hold=n_hold,
        n_rate_dominated=n_rate,
        n_grad_dominated=n_grad,
        rate_margin_min=float(min(margins)) if margins else math.nan,
        ok=ok,
    )
