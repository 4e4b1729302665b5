"""Single-trajectory orchestration: configure, run, audit.

A :class:`RunConfig` pins everything that determines a trajectory —
objective, noise law, decay pair (given directly or through the horizon
coupling ``beta2 = 1 - c/T``), step/floor scales, horizon, failure level,
and the seed pair.  :func:`run_trajectory` executes it, always collecting
the per-step scalar rows the trajectory CSV needs, optionally feeding the
full audit ledger, and returns a :class:`RunResult`.

Reproducibility contract: the same config produces bitwise-identical
trajectories and rows (fixed draw order, sequential power accumulation,
seed derived from ``(seed, trajectory_index)``).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..audit import (
    AuditLedger,
    AuditReport,
    compute_theory_constants,
    run_deep_audit,
    run_standard_audit,
)
from ..audit.constants import ConstantsOverflow
from ..noise import (
    NoiseModel,
    derive_rng,
    noise_event_flags,
    resolve_noise,
    sample,
)
from ..optimizer import AdamState, HyperParams, derive_denominator, step
from ..problems import GeneralizedSmooth, LipschitzSmooth, Objective, resolve_objective

__all__ = ["RunConfig", "RunResult", "resolve_run", "run_trajectory"]

AUDIT_MODES = ("off", "standard", "deep")
REGIMES = ("smooth", "generalized")


class RunConfigError(Exception):
    """Inconsistent or incomplete run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Everything that pins one trajectory."""

    objective: str                    # objective spec, e.g. "quadratic:1,10:d=10"
    noise: str = "noiseless"          # noise spec, e.g. "ball:1.0,0.5,2.0"
    beta1: float = 0.9
    beta2: float | None = None        # direct decay; exclusive with c
    c: float | None = None            # horizon coupling beta2 = 1 - c/T
    C0: float = 1.0                   # base step scale
    eps0: float = 1e-8                # base floor scale
    T: int = 1000
    delta: float = 0.1
    seed: int = 0
    trajectory_index: int = 0
    x0: float = 1.0                   # starting point, every coordinate
    audit_mode: str = "off"
    regime: str = "smooth"
    E0: float = 1.0                   # generalized regime step-scale budget

    def __post_init__(self) -> None:
        if self.audit_mode not in AUDIT_MODES:
            raise RunConfigError(f"audit_mode must be one of {AUDIT_MODES}")
        if self.regime not in REGIMES:
            raise RunConfigError(f"regime must be one of {REGIMES}")
        if self.beta2 is not None and self.c is not None:
            raise RunConfigError("give either beta2 or the horizon coupling c, not both")
        if self.T < 1:
            raise RunConfigError(f"horizon must be >= 1, got {self.T}")
        if not (0.0 < self.delta < 1.0):
            raise RunConfigError(f"failure level must be in (0, 1), got {self.delta}")

    def resolved_beta2(self) -> float:
        if self.beta2 is not None:
            return float(self.beta2)
        c = 1.0 if self.c is None else float(self.c)
        beta2 = 1.0 - c / self.T
        if not (0.0 < beta2 < 1.0):
            raise RunConfigError(
                f"horizon coupling gives beta2 = {beta2!r}, outside (0, 1)"
            )
        return beta2


@dataclass
class RunResult:
    """One executed (and possibly audited) trajectory."""

    config: RunConfig
    params: HyperParams
    objective: Objective
    model: NoiseModel
    t_end: int                        # completed steps (== T unless stopped early)
    diverged: bool
    x_final: np.ndarray
    rate_metric: float                # (1/t_end) sum of squared TRUE gradient norms
    grad_sq_final: float
    rows: list = field(default_factory=list)   # per-step scalar tuples
    ledger: AuditLedger | None = None
    report: AuditReport | None = None
    constants: object | None = None
    constants_error: str | None = None
    wall_time: float = 0.0

    ROW_FIELDS = ("step", "f", "grad_sq", "noise_sq", "eta_s", "eps_s", "b_min", "b_max", "event_flag")


def _effective_step_scale(
    config: RunConfig, obj: Objective, model: NoiseModel, beta2: float, x1: np.ndarray
) -> tuple:
    """Base step scale after the generalized regime's admissibility cap.

    Returns ``(C0_eff, constants_or_None, error_or_None)``.  The smooth
    regime never caps.  In the generalized regime the cap comes from the
    budget chain at scale ``E0``, which needs the certificate; objectives
    without one run uncapped with a recorded reason.
    """
    if config.regime != "generalized":
        return config.C0, None, None
    cert = obj.smoothness
    if not isinstance(cert, GeneralizedSmooth):
        return config.C0, None, "objective has no generalized-curvature certificate"
    probe = HyperParams.from_scale(
        beta1=config.beta1, beta2=beta2, C0=config.E0, eps0=config.eps0
    )
    f_gap = float(obj.value(x1) - obj.f_star)
    g1 = float(np.linalg.norm(obj.grad(x1)))
    try:
        consts = compute_theory_constants(
            probe, model, cert, config.T, config.delta, x1.shape[0],
            f_gap, g1, E0=config.E0,
        )
    except ConstantsOverflow as exc:
        return config.C0, None, str(exc)
    return min(config.C0, consts.base_rate_cap), None, None


def resolve_run(config: RunConfig) -> tuple:
    """Resolve a config into ``(objective, model, params, x1)``."""
    obj = resolve_objective(config.objective)
    model = resolve_noise(config.noise)
    beta2 = config.resolved_beta2()
    x1 = np.full(obj.dim, float(config.x0))
    C0_eff, _, _ = _effective_step_scale(config, obj, model, beta2, x1)
    params = HyperParams.from_scale(
        beta1=config.beta1, beta2=beta2, C0=C0_eff, eps0=config.eps0
    )
    return obj, model, params, x1


def _final_constants(
    config: RunConfig,
    obj: Objective,
    model: NoiseModel,
    params: HyperParams,
    x1: np.ndarray,
) -> tuple:
    """Budget constants for the realized tuning, or a recorded reason."""
    cert = obj.smoothness
    want = LipschitzSmooth if config.regime == "smooth" else GeneralizedSmooth
    if not isinstance(cert, want):
        return None, f"objective carries no {want.__name__} certificate"
    f_gap = float(obj.value(x1) - obj.f_star)
    g1 = float(np.linalg.norm(obj.grad(x1)))
    try:
        consts = compute_theory_constants(
            params, model, cert, config.T, config.delta, x1.shape[0],
            f_gap, g1, E0=config.E0,
        )
    except ConstantsOverflow as exc:
        return None, str(exc)
    return consts, None


def run_trajectory(config: RunConfig) -> RunResult:
    """Execute one trajectory, recording rows and (optionally) the ledger.

    A non-finite stochastic gradient or iterate stops the run before the
    offending step is recorded; the audit then covers the sound prefix.
    """
    start = time.perf_counter()
    obj = resolve_objective(config.objective)
    model = resolve_noise(config.noise)
    beta2 = config.resolved_beta2()
    x1 = np.full(obj.dim, float(config.x0))
    C0_eff, _, cap_error = _effective_step_scale(config, obj, model, beta2, x1)
    params = HyperParams.from_scale(
        beta1=config.beta1, beta2=beta2, C0=C0_eff, eps0=config.eps0
    )
    rng = derive_rng(config.seed, config.trajectory_index)
    T, delta = config.T, config.delta

    want_ledger = config.audit_mode != "off"
    led = AuditLedger(x1, T, delta, params, model) if want_ledger else None

    state = AdamState.fresh(x1)
    rows: list = []
    grad_sq_sum = 0.0
    diverged = False
    t_end = 0
    for s in range(1, T + 1):
        x_prev_row = state.x if s == 1 else prev_x
        gbar = obj.grad(state.x)
        samp = sample(model, gbar, rng)
        g = samp.g
        if not np.all(np.isfinite(g)):
            diverged = True
            break
        new = step(state, params, g)
        if not np.all(np.isfinite(new.x)):
            diverged = True
            break
        f_val = float(obj.value(state.x))
        grad_sq = float(gbar @ gbar)
        noise_sq = float(samp.xi @ samp.xi)
        b = derive_denominator(new)
        flag = bool(
            noise_event_flags(
                model,
                np.array([noise_sq]),
                np.array([math.sqrt(grad_sq)]),
                T,
                delta,
                dim=x1.shape[0],
            )[0]
        )
        rows.append(
            (
                s,
                f_val,
                grad_sq,
                noise_sq,
                float(new.last_eta_s),
                float(new.last_eps_s),
                float(np.min(b)),
                float(np.max(b)),
                int(flag),
            )
        )
        grad_sq_sum += grad_sq
        if led is not None:
            led.extend(s, state.x, x_prev_row, g, gbar, new.m, new.v)
        prev_x = state.x
        state = new
        t_end = s

    gbar_final = obj.grad(state.x)
    report = None
    consts = None
    consts_error = cap_error
    if led is not None:
        led.finalize(state.x, gbar_final)
        consts, err = _final_constants(config, obj, model, params, x1)
        consts_error = consts_error or err
        runner = run_deep_audit if config.audit_mode == "deep" else run_standard_audit
        report = runner(led, obj, consts)
        report.meta.update(
            {
                "diverged": diverged,
                "regime": config.regime,
                "constants_error": consts_error,
            }
        )

    rate = grad_sq_sum / t_end if t_end else math.inf
    return RunResult(
        config=config,
        params=params,
        objective=obj,
        model=model,
        t_end=t_end,
        diverged=diverged,
        x_final=state.x,
        rate_metric=rate,
        grad_sq_final=float(gbar_final @ gbar_final),
        rows=rows,
        ledger=led,
        report=report,
        constants=consts,
        constants_error=consts_error,
        wall_time=time.perf_counter() - start,
    )
