"""Margin checks over a finalized trajectory ledger.

Three families:

* unconditional algebraic facts of the update (step-size ratio drift cap,
  momentum-over-denominator cap, logarithmic sum bounds, the offset-sequence
  route consistency) — a violation is always a bug;
* conditional facts whose premise is the high-probability noise event and/or
  the gradient-correlation event — rows where the premise fails are SKIP,
  rows where the premise holds but the conclusion fails are VIOLATED;
* probabilistic events themselves — these may legitimately fail on a given
  run, so they are reported as booleans (and margins) on the report, never
  as VIOLATED rows, and their frequencies are gated across many seeds by
  :func:`check_probabilistic`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..problems import GeneralizedSmooth, LipschitzSmooth, Objective
from .constants import (
    GeneralizedConstants,
    SmoothConstants,
    base_scales,
    martingale_tail_coeff,
    momentum_over_denom_cap,
    ratio_drift_cap,
    reach_factor,
    surrogate_descent_coeffs,
)
from .ledger import (
    HOLD,
    SKIP,
    VIOLATED,
    STATUS_NAMES,
    AuditLedger,
    CheckSeries,
    LedgerError,
    identity_series,
    inequality_series,
)

__all__ = [
    "AuditReport",
    "ProbabilisticReport",
    "check_stepsize_ratio",
    "check_momentum_ratio",
    "check_sum_bounds",
    "check_y_identity",
    "check_proxy_gaps",
    "check_smooth_relations",
    "check_descent_decomposition",
    "check_event_bounds",
    "check_probabilistic",
    "run_standard_audit",
    "run_deep_audit",
]

_TOL = 1e-9


@dataclass
class AuditReport:
    """All margin series of one audited run, plus event outcomes."""

    checks: dict = field(default_factory=dict)
    events: dict = field(default_factory=dict)        # event name -> bool
    event_margins: dict = field(default_factory=dict)  # event name -> min margin
    meta: dict = field(default_factory=dict)

    def add(self, series) -> None:
        if isinstance(series, CheckSeries):
            series = [series]
        for s in series:
            if s.name in self.checks:
                raise LedgerError(f"duplicate check series {s.name!r}")
            self.checks[s.name] = s

    def n_violated(self, names=None) -> int:
        names = self.checks.keys() if names is None else names
        return sum(self.checks[n].n_violated for n in names if n in self.checks)

    def all_hold(self, names=None) -> bool:
        return self.n_violated(names) == 0

    def counts(self) -> tuple[int, int, int]:
        h = sum(s.n_hold for s in self.checks.values())
        k = sum(s.n_skip for s in self.checks.values())
        v = sum(s.n_violated for s in self.checks.values())
        return h, k, v

    def summary_lines(self) -> list:
        lines = []
        for name, s in self.checks.items():
            lines.append(
                f"{name:34s} {s.n_hold:7d} hold {s.n_skip:6d} skip "
                f"{s.n_violated:4d} violated   worst {s.worst():+.3e}"
            )
        for name, ok in self.events.items():
            margin = self.event_margins.get(name)
            extra = "" if margin is None else f"   min margin {margin:+.3e}"
            lines.append(f"event {name:28s} {'holds' if ok else 'fails'}{extra}")
        return lines

    def iter_rows(self):
        """Yield ``(step, margin_name, value, status_name)`` for CSV export."""
        for name, s in self.checks.items():
            for i in range(len(s.step)):
                yield int(s.step[i]), name, float(s.value[i]), STATUS_NAMES[int(s.status[i])]


# ------------------------------------------------------------------ helpers


def _cum(term: np.ndarray) -> np.ndarray:
    """Cumulative sums over rows 1..t of a (t+1,) per-step array."""
    out = np.zeros_like(term)
    np.cumsum(term[1:], out=out[1:])
    return out


def _eval_cache(led: AuditLedger, obj: Objective) -> dict:
    """Objective values/gradients on iterates and offset points, memoized."""
    cache = getattr(led, "_obj_eval_cache", None)
    if cache is not None and cache.get("key") == id(obj):
        return cache
    t = led.t_end
    fx, gx = obj.value_grad(led.x[1 : t + 2])
    fy, gy = obj.value_grad(led.y_def[1 : t + 2])
    cache = {"key": id(obj), "fx": fx, "gx": gx, "fy": fy, "gy": gy}
    led._obj_eval_cache = cache
    return cache


def _curvature_seqs(led: AuditLedger, cert: GeneralizedSmooth) -> tuple[np.ndarray, np.ndarray]:
    """Running local-curvature sequences built from the true-gradient maximum.

    Row ``s`` (1..t+1): the basic sequence ``L0 + Lq * Gmax_s**q`` and the
    offset-point sequence ``L0 + Lq * (Gmax_s + Gmax_s**q + L0/Lq)**q``.
    """
    G = led.grad_max_seq
    lx = cert.L0 + cert.Lq * G ** cert.q
    ly = cert.L0 + cert.Lq * (G + G ** cert.q + cert.L0 / cert.Lq) ** cert.q
    return lx, ly


def _event_skip(led: AuditLedger, rows: np.ndarray) -> np.ndarray:
    """Skip mask for rows gated on the noise-event prefix."""
    limit = len(led.event_prefix) - 1
    idx = np.minimum(rows, limit)
    return ~led.event_prefix[idx]


# ------------------------------------------------ unconditional step checks


def check_stepsize_ratio(led: AuditLedger) -> list:
    """Consecutive effective-step ratio drift and the schedule's rate cap."""
    led.require_finalized()
    t = led.t_end
    p = led.params
    out = []
    if t >= 2:
        rows = np.arange(2, t + 1)
        drift_inf = np.max(np.abs(led.ratio_drift[2 : t + 1]), axis=1)
        cap = ratio_drift_cap(p.beta2)
        out.append(
            inequality_series("stepsize_ratio_drift", rows, drift_inf, np.full(t - 1, cap))
        )
    if t >= 1:
        rows = np.arange(1, t + 1)
        out.append(
            inequality_series(
                "stepsize_rate_cap",
                rows,
                led.eta[1:],
                np.full(t, p.eta / (1.0 - p.beta1)),
            )
        )
    return out


def check_momentum_ratio(led: AuditLedger) -> list:
    """Sup-norm cap on momentum over denominator at every step."""
    led.require_finalized()
    t = led.t_end
    if t < 1:
        return []
    p = led.params
    rows = np.arange(1, t + 1)
    lhs = np.max(np.abs(led.m[1 : t + 1] / led.b[1:]), axis=1)
    rhs = momentum_over_denom_cap(p.beta1, p.beta2, led.beta1_pow[1:])
    return [inequality_series("momentum_ratio", rows, lhs, rhs)]


def check_sum_bounds(led: AuditLedger) -> list:
    """Logarithmic caps on the four running ratio sums.

    All four right-hand sides share the per-coordinate energy
    ``1 + (1/eps^2) * sum g^2`` (eps is the base floor; with ``eps = 0``
    the bound is vacuous and every row is SKIP).
    """
    led.require_finalized()
    t = led.t_end
    if t < 1:
        return []
    p = led.params
    rows = np.arange(1, t + 1)
    if p.eps == 0.0:
        skip = np.ones(t, dtype=bool)
        zero = np.zeros(t)
        return [
            inequality_series(name, rows, zero, zero, skip=skip)
            for name in (
                "grad_over_denom_sum",
                "momentum_over_denom_sum",
                "momentum_over_next_denom_sum",
                "debiased_momentum_sum",
                "debiased_momentum_sum_sq",
            )
        ]
    csum = np.cumsum(led.g[1 : t + 1] ** 2, axis=0)
    log_energy = np.sum(np.log1p(csum / (p.eps * p.eps)), axis=1)  # sum_i log F_i(t)
    budget = log_energy - led.d * rows * math.log(p.beta2)
    one_m_ratio = 1.0 - p.beta1 / p.beta2

    out = [
        inequality_series(
            "grad_over_denom_sum",
            rows,
            _cum(led.gb_sq)[1:],
            budget / (1.0 - p.beta2),
        ),
        inequality_series(
            "momentum_over_denom_sum",
            rows,
            _cum(led.mb_sq)[1:],
            budget * (1.0 - p.beta1) / ((1.0 - p.beta2) * one_m_ratio),
        ),
        inequality_series(
            "debiased_momentum_sum",
            rows,
            _cum(led.mhat_b_norm)[1:],
            budget / ((1.0 - p.beta2) * one_m_ratio),
        ),
        inequality_series(
            "debiased_momentum_sum_sq",
            rows,
            _cum(led.mhat_b_sq)[1:],
            budget / ((1.0 - p.beta2) * one_m_ratio),
        ),
    ]
    if t >= 2:
        # sum_{s<=t'} ||m_s / b_{s+1}||^2 needs b up to t'+1, hence rows to t-1.
        shifted = np.sum((led.m[1:t] / led.b[2 : t + 1]) ** 2, axis=1)
        out.insert(
            2,
            inequality_series(
                "momentum_over_next_denom_sum",
                rows[:-1],
                np.cumsum(shifted),
                budget[:-1] * (1.0 - p.beta1) / (p.beta2 * (1.0 - p.beta2) * one_m_ratio),
            ),
        )
    return out


def check_y_identity(led: AuditLedger) -> list:
    """Route consistency of the momentum-offset points.

    Compares the definition route (built from consecutive iterates) against
    the one-step recursion route, coordinatewise, worst coordinate per
    step.  Both routes commit rounding against the total accumulated motion
    (the recursion is a running sum of increments), so the relative scale
    includes the cumulative absolute increment alongside the values
    themselves — otherwise a coordinate passing through zero would turn
    honest accumulation noise into a spurious relative blow-up.
    """
    led.require_finalized()
    t = led.t_end
    if t < 1:
        return []
    rows = np.arange(2, t + 2)
    yd = led.y_def[2 : t + 2]
    yi = led.y_iter[2 : t + 2]
    travel = np.cumsum(np.abs(led.u[1:]), axis=0)   # row s-1: sum_{j<s} |u_j|
    scale = np.maximum(1e-12, np.maximum(np.abs(yd), np.maximum(np.abs(yi), travel)))
    resid = np.max(np.abs(yd - yi) / scale, axis=1)
    return [identity_series("y_update_identity", rows, resid)]


# ------------------------------------------------ noise-event-gated checks


def check_proxy_gaps(led: AuditLedger) -> list:
    """Caps tying realized quantities to the running stochastic bound.

    All rows are gated on the noise-event prefix: once some step's noise
    breaks its tail bound, later rows are SKIP (the premise of these claims
    is gone), never VIOLATED.
    """
    led.require_finalized()
    t = led.t_end
    if t < 1:
        return []
    p = led.params
    rows = np.arange(1, t + 1)
    skip = _event_skip(led, rows)
    cap = led.cap_seq[1 : t + 1]

    xi_norm_run = np.maximum.accumulate(np.sqrt(led.xi_sq[1:]))
    g_norm_run = np.maximum.accumulate(np.linalg.norm(led.g[1 : t + 1], axis=1))
    v_inf_run = np.maximum.accumulate(np.max(led.v[1 : t + 1], axis=1))

    out = [
        inequality_series("noise_norm_cap", rows, xi_norm_run, cap, skip=skip),
        inequality_series("stoch_grad_norm_cap", rows, g_norm_run, cap, skip=skip),
        inequality_series("second_moment_cap", rows, v_inf_run, cap * cap, skip=skip),
    ]

    a = led.a[1:]
    b = led.b[1:]
    root = math.sqrt(1.0 - p.beta2)
    lhs = np.abs(1.0 / a - 1.0 / b)
    rhs = cap[:, None] * root / (a * b)
    scale = np.maximum(1e-12, np.maximum(np.abs(lhs), np.abs(rhs)))
    margin = np.min((rhs - lhs) / scale, axis=1)
    status = np.where(margin >= -_TOL, HOLD, VIOLATED).astype(np.int8)
    status[skip] = SKIP
    out.append(
        CheckSeries("proxy_gap_same_step", "inequality", rows, margin, status)
    )

    if t >= 2:
        rows2 = rows[1:]
        a2 = led.a[2 : t + 1]
        b_prev = led.b[1:t]
        lhs2 = np.abs(1.0 / a2 - 1.0 / b_prev)
        rhs2 = (led.cap_seq[2 : t + 1, None] + p.eps) * root / (a2 * b_prev)
        scale2 = np.maximum(1e-12, np.maximum(np.abs(lhs2), np.abs(rhs2)))
        margin2 = np.min((rhs2 - lhs2) / scale2, axis=1)
        status2 = np.where(margin2 >= -_TOL, HOLD, VIOLATED).astype(np.int8)
        status2[skip[1:]] = SKIP
        out.append(
            CheckSeries("proxy_gap_prev_step", "inequality", rows2, margin2, status2)
        )

    warm = np.sqrt(1.0 - led.beta2_pow[1:])
    out.append(
        inequality_series(
            "proxy_denom_cap_local",
            rows,
            np.max(led.a[1:], axis=1),
            cap * warm + led.eps_s[1:],
            skip=skip,
        )
    )
    return out


# ------------------------------------------------------- smoothness checks


def check_smooth_relations(led: AuditLedger, obj: Objective) -> list:
    """Certificate-backed relations between iterates and offset points."""
    led.require_finalized()
    t = led.t_end
    if t < 1 or obj.smoothness is None:
        return []
    cache = _eval_cache(led, obj)
    gx, gy = cache["gx"], cache["gy"]
    fx = cache["fx"]
    p = led.params
    C0, _ = base_scales(p)
    rows_all = np.arange(1, t + 2)       # pairs (x_s, y_s), s = 1..t+1
    rows_step = np.arange(1, t + 1)

    gx_norm = np.linalg.norm(gx, axis=1)
    gy_norm = np.linalg.norm(gy, axis=1)
    y_gap = np.linalg.norm(led.y_def[1 : t + 2] - led.x[1 : t + 2], axis=1)
    dy = led.y_def[2 : t + 2] - led.y_def[1 : t + 1]
    dy_norm = np.linalg.norm(dy, axis=1)
    dx_next_norm = np.linalg.norm(led.dx[2 : t + 2], axis=1)

    # The ledger's recorded true gradients must match fresh evaluations at
    # the recorded iterates; a mismatch means corrupted bookkeeping.
    rec = led.gbar[1 : t + 2]
    scale = np.maximum(1e-12, np.maximum(np.abs(rec), np.abs(gx)))
    resid = np.max(np.abs(rec - gx) / scale, axis=1)
    out = [identity_series("recorded_gradient_consistency", rows_all, resid)]

    cert = obj.smoothness
    if isinstance(cert, LipschitzSmooth):
        L = cert.L
        shift = L * C0 * math.sqrt(led.d) / (
            (1.0 - p.beta1) * math.sqrt(1.0 - p.beta1 / p.beta2)
        )
        out.append(
            inequality_series("grad_shift_transfer", rows_all, gx_norm, gy_norm + shift)
        )
        growth = gx_norm[0] + L * C0 * rows_all * math.sqrt(
            led.d / (1.0 - p.beta1 / p.beta2)
        )
        out.append(inequality_series("grad_growth_cap", rows_all, gx_norm, growth))
        out.append(
            inequality_series(
                "smooth_pair_iterates",
                rows_step,
                np.linalg.norm(gx[1:] - gx[:-1], axis=1),
                L * dx_next_norm,
            )
        )
        out.append(
            inequality_series(
                "smooth_pair_offsets",
                rows_step,
                np.linalg.norm(gy[1:] - gy[:-1], axis=1),
                L * dy_norm,
            )
        )
        out.append(
            inequality_series(
                "grad_value_cap",
                rows_all,
                gx_norm * gx_norm,
                2.0 * L * (fx - obj.f_star),
            )
        )
        return out

    # Generalized certificate.
    cert = obj.smoothness
    assert isinstance(cert, GeneralizedSmooth)
    lx_seq, ly_seq = _curvature_seqs(led, cert)
    gap_cap = 1.0 / cert.Lq
    radius = cert.domain_radius
    in_dom_x = np.max(np.abs(led.x[1 : t + 2]), axis=1) <= radius
    in_dom_y = np.max(np.abs(led.y_def[1 : t + 2]), axis=1) <= radius

    F = reach_factor(p.beta1, p.beta2, led.d)
    reach_lhs = np.maximum(dx_next_norm, np.maximum(y_gap[:-1], dy_norm))
    out.append(
        inequality_series("reach_cap", rows_step, reach_lhs, np.full(t, p.eta * F))
    )

    pair_ok = (y_gap <= gap_cap) & in_dom_x & in_dom_y
    skip_pair = ~pair_ok
    out.append(
        inequality_series(
            "grad_transfer_x_to_y",
            rows_all,
            gy_norm,
            cert.L0 / cert.Lq + gx_norm ** cert.q + gx_norm,
            skip=skip_pair,
        )
    )
    out.append(
        inequality_series(
            "grad_transfer_y_to_x",
            rows_all,
            gx_norm,
            cert.L0 / cert.Lq + gy_norm ** cert.q + gy_norm,
            skip=skip_pair,
        )
    )
    out.append(
        inequality_series(
            "local_lipschitz_iterate_pair",
            rows_all,
            np.linalg.norm(gy - gx, axis=1),
            lx_seq[1 : t + 2] * y_gap,
            skip=skip_pair,
        )
    )
    step_ok = (
        (dy_norm <= gap_cap)
        & pair_ok[:-1]
        & in_dom_y[1:]
    )
    out.append(
        inequality_series(
            "local_lipschitz_offset_pair",
            rows_step,
            np.linalg.norm(gy[1:] - gy[:-1], axis=1),
            ly_seq[1 : t + 1] * dy_norm,
            skip=~step_ok,
        )
    )
    if t >= 1:
        rows_mono = np.arange(2, t + 2)
        out.append(
            inequality_series(
                "curvature_x_monotone", rows_mono, lx_seq[1 : t + 1], lx_seq[2 : t + 2]
            )
        )
        out.append(
            inequality_series(
                "curvature_y_monotone", rows_mono, ly_seq[1 : t + 1], ly_seq[2 : t + 2]
            )
        )
    out.append(
        inequality_series("curvature_order", rows_all, lx_seq[1 : t + 2], ly_seq[1 : t + 2])
    )

    gap_val = fx - obj.f_star
    lin = 4.0 * cert.Lq * gap_val
    rhs = np.maximum(
        np.maximum(lin, lin ** (1.0 / (2.0 - cert.q))),
        np.sqrt(4.0 * cert.L0 * gap_val),
    )
    out.append(
        inequality_series(
            "grad_value_bound_general", rows_all, gx_norm, rhs, skip=~in_dom_x
        )
    )
    return out


# ------------------------------------------------- descent decompositions


def check_descent_decomposition(led: AuditLedger, obj: Objective) -> list:
    """Split identities and the per-horizon descent/surrogate bounds.

    The split identities (the gradient term and the momentum term each
    splitting into their averaged and offset parts) hold for any objective.
    The descent inequality and its surrogate need the smoothness
    certificate: the Lipschitz form runs unconditionally, the generalized
    form gates each horizon on every earlier step's reach staying within
    the certificate's pair distance (and domain), SKIPping afterwards.
    """
    led.require_finalized()
    t = led.t_end
    if t < 1:
        return []
    cache = _eval_cache(led, obj)
    gy = cache["gy"][:t]                # rows s=1..t as [0..t-1]
    fy = cache["fy"]
    p = led.params
    f_start = float(cache["fx"][0])

    g_over_b = led.g[1 : t + 1] / led.b[1:]
    drift_dx = led.ratio_drift[1:] * led.dx[1 : t + 1]
    gbar = led.gbar[1 : t + 1]

    term_full_grad = -led.eta[1:] * np.sum(gy * g_over_b, axis=1)
    term_avg_grad = -led.eta[1:] * np.sum(gbar * g_over_b, axis=1)
    term_offset_grad = led.eta[1:] * np.sum((gbar - gy) * g_over_b, axis=1)
    term_full_mom = led.mom_ratio * np.sum(drift_dx * gy, axis=1)
    term_avg_mom = led.mom_ratio * np.sum(drift_dx * gbar, axis=1)
    term_offset_mom = led.mom_ratio * np.sum(drift_dx * (gy - gbar), axis=1)
    curvature_sq = np.sum(led.u[1:] * led.u[1:], axis=1)   # ||y_{s+1} - y_s||^2

    rows = np.arange(1, t + 1)

    def _split_identity(name, total, part1, part2):
        scale = np.maximum(
            1e-12,
            np.maximum(np.abs(total), np.abs(part1) + np.abs(part2)),
        )
        resid = np.abs(total - (part1 + part2)) / scale
        return identity_series(name, rows, resid)

    out = [
        _split_identity(
            "grad_term_split_identity", term_full_grad, term_avg_grad, term_offset_grad
        ),
        _split_identity(
            "momentum_term_split_identity", term_full_mom, term_avg_mom, term_offset_mom
        ),
    ]

    cum_full = np.cumsum(term_full_grad + term_full_mom)
    cum_abs_full = np.cumsum(np.abs(term_full_grad) + np.abs(term_full_mom))
    cum_avg = np.cumsum(term_avg_grad + term_avg_mom)
    cum_abs_avg = np.cumsum(np.abs(term_avg_grad) + np.abs(term_avg_mom))
    cum_gb = np.cumsum(led.gb_sq[1:])
    mhat_shift = np.concatenate(([0.0], np.cumsum(led.mhat_b_sq[1:t])))
    lhs = fy[1 : t + 1]                  # f(y_{t'+1}) for t' = 1..t

    cert = obj.smoothness
    if isinstance(cert, LipschitzSmooth):
        L = cert.L
        cum_curv = np.cumsum(curvature_sq)
        rhs = f_start + cum_full + 0.5 * L * cum_curv
        out.append(
            inequality_series(
                "descent_upper",
                rows,
                lhs,
                rhs,
                extra_scale=abs(f_start) + cum_abs_full + 0.5 * L * cum_curv,
            )
        )
        d6, d7 = surrogate_descent_coeffs(p, L)
        rhs_s = f_start + cum_avg + d6 * mhat_shift + d7 * cum_gb
        out.append(
            inequality_series(
                "surrogate_descent_bound",
                rows,
                lhs,
                rhs_s,
                extra_scale=abs(f_start) + cum_abs_avg + d6 * mhat_shift + d7 * cum_gb,
            )
        )
    elif isinstance(cert, GeneralizedSmooth):
        _, ly_seq = _curvature_seqs(led, cert)
        gap_cap = 1.0 / cert.Lq
        radius = cert.domain_radius
        dy_norm = np.linalg.norm(led.y_def[2 : t + 2] - led.y_def[1 : t + 1], axis=1)
        y_gap = np.linalg.norm(led.y_def[1 : t + 1] - led.x[1 : t + 1], axis=1)
        dom = (
            (np.max(np.abs(led.y_def[1 : t + 1]), axis=1) <= radius)
            & (np.max(np.abs(led.y_def[2 : t + 2]), axis=1) <= radius)
            & (np.max(np.abs(led.x[1 : t + 1]), axis=1) <= radius)
        )
        step_ok = (dy_norm <= gap_cap) & (y_gap <= gap_cap) & dom
        prefix_ok = np.logical_and.accumulate(step_ok)
        skip = ~prefix_ok

        cum_curv = np.cumsum(0.5 * ly_seq[1 : t + 1] * curvature_sq)
        rhs = f_start + cum_full + cum_curv
        out.append(
            inequality_series(
                "descent_upper_general",
                rows,
                lhs,
                rhs,
                skip=skip,
                extra_scale=abs(f_start) + cum_abs_full + cum_curv,
            )
        )
        unit_d6, unit_d7 = surrogate_descent_coeffs(p, 1.0)
        d6_terms = np.concatenate(
            ([0.0], unit_d6 * ly_seq[1:t] * led.mhat_b_sq[1:t])
        )
        cum_d6 = np.cumsum(d6_terms)
        cum_d7 = np.cumsum(unit_d7 * ly_seq[1 : t + 1] * led.gb_sq[1:])
        rhs_s = f_start + cum_avg + cum_d6 + cum_d7
        out.append(
            inequality_series(
                "surrogate_descent_bound_general",
                rows,
                lhs,
                rhs_s,
                skip=skip,
                extra_scale=abs(f_start) + cum_abs_avg + cum_d6 + cum_d7,
            )
        )
    return out


# ------------------------------------------------------ event-gated bounds


def check_event_bounds(
    led: AuditLedger,
    consts,
    obj: Objective | None = None,
    deep: bool = False,
) -> tuple[list, dict, dict]:
    """Probabilistic events and the conclusions they imply.

    Returns ``(series, events, event_margins)``.  The raw events (noise
    tail, gradient-correlation bound) are reported as booleans; conclusion
    series are SKIP wherever the premise events (or, in the generalized
    regime, the deterministic tuning preconditions) fail, and must HOLD
    elsewhere.
    """
    led.require_finalized()
    t = led.t_end
    events: dict = {"noise_tail": led.noise_event_all}
    margins: dict = {}
    series: list = []
    if t < 1:
        return series, events, margins
    p = led.params
    rows = np.arange(1, t + 1)
    rows_ext = np.arange(1, t + 2)
    cum_mart = np.cumsum(led.mart_term[1:])
    cum_eta_ga = np.cumsum(led.eta_ga_sq[1:])
    cum_gb = np.cumsum(led.gb_sq[1:])
    cap_t = led.cap_seq[1 : t + 1]
    gbar_sq = led.gbar_norm_all[1 : t + 2] ** 2

    def _min_margin(lhs, rhs) -> float:
        scale = np.maximum(1e-12, np.maximum(np.abs(lhs), np.abs(rhs)))
        return float(np.min((rhs - lhs) / scale))

    if isinstance(consts, SmoothConstants):
        gcap = consts.stoch_cap
        corr_rhs = cap_t / (4.0 * gcap) * cum_eta_ga + consts.coeff_martingale * gcap
        m = _min_margin(cum_mart, corr_rhs)
        margins["grad_corr"] = m
        events["grad_corr"] = bool(m >= -_TOL)
        both = events["noise_tail"] and events["grad_corr"]
        skip_all = np.full(t, not both)
        skip_ext = np.full(t + 1, not both)
        skip_noise = np.full(t, not events["noise_tail"])

        series.append(
            inequality_series(
                "grad_sq_global_cap",
                rows_ext,
                gbar_sq,
                np.full(t + 1, consts.grad_cap_sq),
                skip=skip_ext,
            )
        )
        series.append(
            inequality_series(
                "stoch_sq_global_cap",
                rows,
                np.sum(led.g[1 : t + 1] ** 2, axis=1),
                np.full(t, gcap * gcap),
                skip=skip_all,
            )
        )
        series.append(
            inequality_series(
                "running_cap_le_global",
                rows_ext,
                led.cap_seq[1 : t + 2],
                np.full(t + 1, gcap),
                skip=skip_ext,
            )
        )
        if consts.L is not None:
            series.append(
                inequality_series(
                    "grad_sq_descent_chain",
                    rows,
                    gbar_sq[1:],
                    consts.grad_cap_sq - consts.L * cum_eta_ga,
                    skip=skip_all,
                )
            )
        if p.eps > 0.0:
            csum = np.cumsum(led.g[1 : t + 1] ** 2, axis=0)
            f_run = 1.0 + np.max(csum, axis=1) / (p.eps * p.eps)
            series.append(
                inequality_series(
                    "running_energy_cap",
                    rows,
                    f_run,
                    np.full(t, consts.grad_energy_cap),
                    skip=skip_noise,
                )
            )
        warm = np.sqrt(1.0 - led.beta2_pow[1:])
        series.append(
            inequality_series(
                "proxy_denom_cap_global",
                rows,
                np.max(led.a[1:], axis=1),
                gcap * warm + led.eps_s[1:],
                skip=skip_all,
            )
        )
        if deep:
            cum_avg_grad = np.cumsum(
                -led.eta[1:] * np.sum(led.gbar[1 : t + 1] * (led.g[1 : t + 1] / led.b[1:]), axis=1)
            )
            rhs_combined = (
                (cap_t / (4.0 * gcap) - 0.75) * cum_eta_ga
                + consts.coeff_martingale * gcap
                + consts.coeff_proxy_err * cap_t * cum_gb
            )
            series.append(
                inequality_series(
                    "grad_corr_combined", rows, cum_avg_grad, rhs_combined, skip=skip_all
                )
            )
            drift_dx = led.ratio_drift[1:] * led.dx[1 : t + 1]
            cum_avg_mom = np.cumsum(
                led.mom_ratio * np.sum(drift_dx * led.gbar[1 : t + 1], axis=1)
            )
            cum_msums = np.cumsum(
                led.m_prev_over_b_sq[1:] + led.m_prev_over_bprev_sq[1:]
            )
            rhs_mom = (
                0.25 * cum_eta_ga
                + (consts.coeff_mom_drift * cap_t + consts.coeff_mom_drift_eps) * cum_msums
                + consts.coeff_mom_tail * led.grad_max_seq[1 : t + 1]
            )
            series.append(
                inequality_series(
                    "momentum_corr_bound", rows, cum_avg_mom, rhs_mom, skip=skip_noise
                )
            )
        return series, events, margins

    assert isinstance(consts, GeneralizedConstants)
    cert = consts.cert
    hcap = consts.stoch_budget
    d1 = martingale_tail_coeff(p, led.d, led.T, led.delta)
    corr_rhs = cap_t / (4.0 * hcap) * cum_eta_ga + d1 * hcap
    m = _min_margin(cum_mart, corr_rhs)
    margins["grad_corr"] = m
    events["grad_corr"] = bool(m >= -_TOL)
    C0_eff, _ = base_scales(p)
    events["rate_cap_respected"] = bool(C0_eff <= consts.base_rate_cap * (1.0 + 1e-9))
    events["reach_within_pair_distance"] = bool(
        p.eta * consts.reach_factor <= (1.0 / cert.Lq) * (1.0 + 1e-9)
    )
    usable = (
        events["noise_tail"]
        and events["grad_corr"]
        and events["rate_cap_respected"]
        and events["reach_within_pair_distance"]
    )
    skip_all = np.full(t, not usable)
    skip_ext = np.full(t + 1, not usable)
    skip_noise = np.full(
        t,
        not (
            events["noise_tail"]
            and events["rate_cap_respected"]
            and events["reach_within_pair_distance"]
        ),
    )

    series.append(
        inequality_series(
            "grad_norm_budget_cap",
            rows_ext,
            led.gbar_norm_all[1 : t + 2],
            np.full(t + 1, consts.grad_budget),
            skip=skip_ext,
        )
    )
    series.append(
        inequality_series(
            "running_cap_le_budget",
            rows_ext,
            led.cap_seq[1 : t + 2],
            np.full(t + 1, hcap),
            skip=skip_ext,
        )
    )
    lx_seq, ly_seq = _curvature_seqs(led, cert)
    series.append(
        inequality_series(
            "curvature_le_budget",
            rows_ext,
            ly_seq[1 : t + 2],
            np.full(t + 1, consts.curvature_budget),
            skip=skip_ext,
        )
    )
    if p.eps > 0.0:
        csum = np.cumsum(led.g[1 : t + 1] ** 2, axis=0)
        f_run = 1.0 + np.max(csum, axis=1) / (p.eps * p.eps)
        msq = led.tail_factor ** 2
        s0sq, s1sq, pexp = led._effective_noise_powers()
        growth = C0_eff * lx_seq[1 : t + 1] * math.sqrt(led.d / (1.0 - p.beta1 / p.beta2))
        first = led.gbar_norm_all[1]
        reach = first + rows * growth
        j_run = 1.0 + (2.0 * msq / (p.eps * p.eps)) * (
            s0sq * rows + s1sq * rows * reach ** pexp + rows * reach ** 2
        )
        series.append(
            inequality_series(
                "running_energy_cap_general", rows, f_run, j_run, skip=skip_noise
            )
        )
        series.append(
            inequality_series(
                "energy_budget_chain",
                rows,
                j_run,
                np.full(t, consts.grad_energy_cap),
                skip=skip_all,
            )
        )
    if obj is not None:
        cache = _eval_cache(led, obj)
        fy = cache["fy"]
        series.append(
            inequality_series(
                "value_gap_budget_cap",
                rows,
                fy[1 : t + 1] - obj.f_star,
                -0.25 * cum_eta_ga + consts.value_budget,
                skip=skip_all,
            )
        )
    return series, events, margins


# ------------------------------------------------------------ orchestration


def _run_audit(led, obj, consts, deep: bool) -> AuditReport:
    report = AuditReport(meta={"t_end": led.t_end, "T": led.T, "deep": deep})
    report.add(check_stepsize_ratio(led))
    report.add(check_momentum_ratio(led))
    report.add(check_sum_bounds(led))
    report.add(check_y_identity(led))
    report.add(check_proxy_gaps(led))
    if obj is not None:
        report.add(check_smooth_relations(led, obj))
        if obj.smoothness is not None:
            report.add(check_descent_decomposition(led, obj))
    if consts is not None:
        series, events, margins = check_event_bounds(led, consts, obj=obj, deep=deep)
        report.add(series)
        report.events.update(events)
        report.event_margins.update(margins)
    else:
        report.events["noise_tail"] = led.noise_event_all
    return report


def run_standard_audit(led: AuditLedger, obj: Objective | None = None, consts=None) -> AuditReport:
    """Unconditional checks, smoothness relations, and event conclusions."""
    return _run_audit(led, obj, consts, deep=False)


def run_deep_audit(led: AuditLedger, obj: Objective | None = None, consts=None) -> AuditReport:
    """Standard audit plus the decomposed correlation/momentum sub-bounds."""
    return _run_audit(led, obj, consts, deep=True)


# ------------------------------------------------------------ across seeds


@dataclass(frozen=True)
class ProbabilisticReport:
    """Binomial gate on event failure frequencies across seeds."""

    n_runs: int
    delta: float
    confidence: float
    failures: dict          # event name -> failure count
    rates: dict             # event name -> empirical failure rate
    p_values: dict          # event name -> P(Bin(n, delta) >= k)
    passed: bool


def check_probabilistic(
    reports,
    delta: float,
    confidence: float = 0.99,
    event_names=("noise_tail", "grad_corr"),
) -> ProbabilisticReport:
    """Gate event failure rates across many seeds at the stated level.

    Accepts :class:`AuditReport` objects (or plain dicts of event booleans).
    For each event, the observed failure count ``k`` out of ``n`` is
    incompatible with a true failure rate ``<= delta`` when
    ``P(Bin(n, delta) >= k) < 1 - confidence``; any incompatible event
    fails the gate.
    """
    from scipy.stats import binom

    outcomes = []
    for r in reports:
        ev = r.events if isinstance(r, AuditReport) else dict(r)
        outcomes.append({name: bool(ev.get(name, True)) for name in event_names})
    n = len(outcomes)
    if n == 0:
        raise LedgerError("no runs to gate")
    failures = {name: sum(1 for o in outcomes if not o[name]) for name in event_names}
    rates = {name: failures[name] / n for name in event_names}
    p_values = {
        name: float(binom.sf(failures[name] - 1, n, delta)) if failures[name] > 0 else 1.0
        for name in event_names
    }
    alpha = 1.0 - confidence
    passed = all(p >= alpha for p in p_values.values())
    return ProbabilisticReport(
        n_runs=n,
        delta=float(delta),
        confidence=float(confidence),
        failures=failures,
        rates=rates,
        p_values=p_values,
        passed=passed,
    )
