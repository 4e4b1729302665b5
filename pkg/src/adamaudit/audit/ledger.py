"""Per-step trajectory ledger feeding the margin checks.

The ledger records the raw trajectory as it is generated — iterates,
stochastic and true gradients, moment accumulators — one step at a time, in
order, and computes every derived quantity the checks need in a single
vectorized :meth:`AuditLedger.finalize` pass:

* the schedule (warm-up powers by sequential products, bitwise identical to
  what the optimizer state carries),
* the realized denominators ``b_s`` and the averaged-gradient proxy
  denominators ``a_s`` built from the running true-gradient maximum,
* the momentum-offset sequence ``y_s`` by *two independent routes* — its
  definition from consecutive iterates and its own one-step recursion — whose
  disagreement is the route-consistency residual the audits gate at 1e-9,
* per-step norms, inner products, and the high-probability noise-event flags.

Margins are reported as :class:`CheckSeries`: per-step relative values with a
``HOLD`` / ``SKIP`` / ``VIOLATED`` status each.  ``SKIP`` marks steps where a
conditional claim's premise fails; it is never an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..noise import NoiseModel, effective_scale_powers, noise_event_flags, tail_factor_sq
from ..optimizer import HyperParams

__all__ = [
    "HOLD",
    "SKIP",
    "VIOLATED",
    "STATUS_NAMES",
    "CheckSeries",
    "LedgerError",
    "LedgerSequenceError",
    "AuditLedger",
    "extend_ledger",
    "identity_series",
    "inequality_series",
]

HOLD = 0
SKIP = 1
VIOLATED = 2
STATUS_NAMES = {HOLD: "HOLD", SKIP: "SKIP", VIOLATED: "VIOLATED"}

IDENTITY_TOL = 1e-9
INEQUALITY_TOL = 1e-9


class LedgerError(Exception):
    """Invalid ledger construction or use."""


class LedgerSequenceError(LedgerError):
    """Steps must arrive as 1, 2, 3, ... with no gaps, repeats, or late rows."""


@dataclass
class CheckSeries:
    """One named margin, evaluated along the trajectory.

    ``value`` holds a relative margin (inequalities: signed slack, positive
    is good) or a relative residual (identities: nonnegative, small is
    good); ``status`` holds one code per row.
    """

    name: str
    kind: str  # "identity" | "inequality"
    step: np.ndarray
    value: np.ndarray
    status: np.ndarray

    def __post_init__(self) -> None:
        if not (len(self.step) == len(self.value) == len(self.status)):
            raise LedgerError(f"{self.name}: ragged series")

    @property
    def n_hold(self) -> int:
        return int(np.sum(self.status == HOLD))

    @property
    def n_skip(self) -> int:
        return int(np.sum(self.status == SKIP))

    @property
    def n_violated(self) -> int:
        return int(np.sum(self.status == VIOLATED))

    def worst(self) -> float:
        """Most adverse non-skipped value (inequalities: min margin; identities: max residual)."""
        live = self.status != SKIP
        if not np.any(live):
            return math.nan
        vals = self.value[live]
        return float(np.max(vals)) if self.kind == "identity" else float(np.min(vals))


def identity_series(
    name: str,
    step: np.ndarray,
    residual: np.ndarray,
    tol: float = IDENTITY_TOL,
    skip: np.ndarray | None = None,
) -> CheckSeries:
    """Series for an exact identity: residual must stay within ``tol``."""
    residual = np.asarray(residual, dtype=np.float64)
    status = np.where(residual <= tol, HOLD, VIOLATED).astype(np.int8)
    if skip is not None:
        status[np.asarray(skip, dtype=bool)] = SKIP
    return CheckSeries(name=name, kind="identity", step=np.asarray(step), value=residual, status=status)


def inequality_series(
    name: str,
    step: np.ndarray,
    lhs: np.ndarray,
    rhs: np.ndarray,
    tol: float = INEQUALITY_TOL,
    skip: np.ndarray | None = None,
    extra_scale: np.ndarray | None = None,
) -> CheckSeries:
    """Series for ``lhs <= rhs`` with relative slack ``(rhs - lhs) / scale``.

    The scale is ``max(1e-12, |lhs|, |rhs|)``, optionally joined by
    ``extra_scale`` (e.g. a sum of absolute per-step contributions) so that
    cancellation cannot manufacture spurious relative error.
    """
    lhs = np.asarray(lhs, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    scale = np.maximum(1e-12, np.maximum(np.abs(lhs), np.abs(rhs)))
    if extra_scale is not None:
        scale = np.maximum(scale, np.abs(np.asarray(extra_scale, dtype=np.float64)))
    margin = (rhs - lhs) / scale
    status = np.where(margin >= -tol, HOLD, VIOLATED).astype(np.int8)
    if skip is not None:
        status[np.asarray(skip, dtype=bool)] = SKIP
    return CheckSeries(name=name, kind="inequality", step=np.asarray(step), value=margin, status=status)


class AuditLedger:
    """Collects one trajectory and derives everything the checks consume.

    Row conventions after :meth:`finalize` (with ``t = t_end`` completed
    steps):

    ==============  =======================================================
    ``x``           iterates, rows ``0 .. t+1`` with ``x[0] = x[1]``
    ``g, gbar, xi`` gradients/noise, rows ``1 .. t`` (``gbar`` also ``t+1``)
    ``m, v``        moment accumulators, rows ``0 .. t`` (row 0 is zero)
    ``eta, eps_s``  schedule, rows ``1 .. t`` (``eta[0]`` = base step)
    ``b, a``        realized / proxy denominators, rows ``1 .. t``
    ``y_def``       momentum-offset points by definition, rows ``1 .. t+1``
    ``y_iter``      same points by their one-step recursion
    ==============  =======================================================
    """

    def __init__(
        self,
        x1: np.ndarray,
        T: int,
        delta: float,
        params: HyperParams,
        model: NoiseModel,
    ) -> None:
        x1 = np.asarray(x1, dtype=np.float64)
        if x1.ndim != 1:
            raise LedgerError("starting point must be 1-d")
        T = int(T)
        if T < 1:
            raise LedgerError(f"horizon must be >= 1, got {T}")
        self.d = x1.shape[0]
        self.T = T                      # planned horizon (tail factor uses this)
        self.delta = float(delta)
        self.params = params
        self.model = model

        self.x = np.zeros((T + 2, self.d))
        self.x[0] = x1
        self.x[1] = x1
        self.g = np.zeros((T + 1, self.d))
        self.gbar = np.zeros((T + 2, self.d))
        self.m = np.zeros((T + 1, self.d))
        self.v = np.zeros((T + 1, self.d))
        self.pos = 0                    # completed steps recorded so far
        self.finalized = False

    # ------------------------------------------------------------------ raw

    def extend(
        self,
        step: int,
        x_curr: np.ndarray,
        x_prev: np.ndarray,
        g: np.ndarray,
        g_bar: np.ndarray,
        m: np.ndarray,
        v: np.ndarray,
    ) -> None:
        """Record step ``step``'s data; steps must arrive in order 1, 2, ...

        ``x_curr`` is the iterate the gradient was drawn at, ``x_prev`` the
        one before it (equal to ``x_curr`` at step 1); ``m``/``v`` are the
        post-update accumulators of this step.
        """
        if self.finalized:
            raise LedgerSequenceError("ledger already finalized")
        if step != self.pos + 1:
            raise LedgerSequenceError(f"expected step {self.pos + 1}, got {step}")
        if step > self.T:
            raise LedgerSequenceError(f"step {step} exceeds planned horizon {self.T}")
        s = step
        self.x[s - 1] = x_prev
        self.x[s] = x_curr
        self.g[s] = g
        self.gbar[s] = g_bar
        self.m[s] = m
        self.v[s] = v
        self.pos = s

    # ------------------------------------------------------------- derived

    def finalize(self, x_final: np.ndarray, g_bar_final: np.ndarray) -> None:
        """Derive schedule, denominators, offsets, norms, and event flags.

        ``x_final`` is the iterate after the last recorded step and
        ``g_bar_final`` the true gradient there.  Works on the recorded
        prefix, so a run that stopped early (divergence, domain exit) is
        audited up to its last sound step.
        """
        if self.finalized:
            raise LedgerSequenceError("ledger already finalized")
        t = self.pos
        self.t_end = t
        self.x[t + 1] = np.asarray(x_final, dtype=np.float64)
        self.gbar[t + 1] = np.asarray(g_bar_final, dtype=np.float64)

        p = self.params
        beta1, beta2 = p.beta1, p.beta2
        # Sequential products keep these bitwise equal to the optimizer's
        # per-step power cache.
        self.beta1_pow = np.concatenate(([1.0], np.cumprod(np.full(t, beta1)))) if t else np.ones(1)
        self.beta2_pow = np.concatenate(([1.0], np.cumprod(np.full(t, beta2)))) if t else np.ones(1)
        warm = np.sqrt(1.0 - self.beta2_pow)
        self.eta = np.empty(t + 1)
        self.eps_s = np.empty(t + 1)
        self.eta[0] = p.eta             # step-0 convention for ratio formulas
        self.eps_s[0] = 0.0
        if t:
            self.eta[1:] = p.eta * warm[1:] / (1.0 - self.beta1_pow[1:])
            self.eps_s[1:] = p.eps * warm[1:]

        self.b = np.zeros((t + 1, self.d))
        if t:
            self.b[1:] = np.sqrt(self.v[1 : t + 1]) + self.eps_s[1:, None]

        xs = self.x[: t + 2]
        self.dx = np.zeros((t + 2, self.d))
        self.dx[1:] = xs[1:] - xs[:-1]          # dx[s] = x[s] - x[s-1]

        mom_ratio = beta1 / (1.0 - beta1)
        self.mom_ratio = mom_ratio
        self.y_def = np.zeros((t + 2, self.d))
        self.y_def[1] = xs[1]
        if t:
            self.y_def[2:] = xs[2:] + mom_ratio * self.dx[2:]

        # Ratio drift of consecutive effective steps (rows >= 2 meaningful;
        # row 1 multiplies the zero displacement dx[1], so its value never
        # enters any margin).
        self.ratio_drift = np.zeros((t + 1, self.d))
        if t:
            self.ratio_drift[1:] = (self.eta[1:, None] * self.b[:-1]) / (
                self.eta[:-1, None] * self.b[1:]
            ) - 1.0

        # Offset recursion route: y[s+1] = y[s] + u[s].
        self.u = np.zeros((t + 1, self.d))
        if t:
            self.u[1:] = (
                -self.eta[1:, None] * (self.g[1 : t + 1] / self.b[1:])
                + mom_ratio * self.ratio_drift[1:] * self.dx[1 : t + 1]
            )
        self.y_iter = np.zeros((t + 2, self.d))
        self.y_iter[1] = xs[1]
        if t:
            self.y_iter[2:] = xs[1] + np.cumsum(self.u[1:], axis=0)

        # Norms and inner products (rows 1..t meaningful unless noted).
        self.xi = np.zeros((t + 1, self.d))
        if t:
            self.xi[1:] = self.g[1 : t + 1] - self.gbar[1 : t + 1]
        self.xi_sq = np.sum(self.xi * self.xi, axis=1)
        self.gbar_norm_all = np.linalg.norm(self.gbar[: t + 2], axis=1)  # rows 1..t+1
        self.grad_max_seq = np.zeros(t + 2)
        if t + 1 >= 1:
            self.grad_max_seq[1:] = np.maximum.accumulate(self.gbar_norm_all[1:])

        msq = tail_factor_sq(self.T, self.delta)
        self.tail_factor = math.sqrt(msq)
        self.cap_seq = np.zeros(t + 2)
        s0sq, s1sq, pexp = self._effective_noise_powers()
        gmax = self.grad_max_seq[1:]
        self.cap_seq[1:] = self.tail_factor * np.sqrt(
            2.0 * s0sq + 2.0 * s1sq * gmax ** pexp + 2.0 * gmax * gmax
        )

        self.a = np.zeros((t + 1, self.d))
        if t:
            self.a[1:] = (
                np.sqrt(beta2 * self.v[:t] + (1.0 - beta2) * self.cap_seq[1 : t + 1, None] ** 2)
                + self.eps_s[1:, None]
            )

        g_rows = self.g[1 : t + 1]
        b_rows = self.b[1:] if t else np.zeros((0, self.d))
        a_rows = self.a[1:] if t else np.zeros((0, self.d))
        gbar_rows = self.gbar[1 : t + 1]
        m_rows = self.m[1 : t + 1]
        m_prev_rows = self.m[:t]

        def _pad(vals: np.ndarray) -> np.ndarray:
            out = np.zeros(t + 1)
            out[1:] = vals
            return out

        self.gb_sq = _pad(np.sum((g_rows / b_rows) ** 2, axis=1)) if t else np.zeros(1)
        self.mb_sq = _pad(np.sum((m_rows / b_rows) ** 2, axis=1)) if t else np.zeros(1)
        if t:
            debias = (1.0 - self.beta1_pow[1:])[:, None]
            mhat_over_b = (m_rows / debias) / b_rows
            self.mhat_b_norm = _pad(np.linalg.norm(mhat_over_b, axis=1))
            self.mhat_b_sq = _pad(np.sum(mhat_over_b ** 2, axis=1))
            self.m_prev_over_b_sq = _pad(np.sum((m_prev_rows / b_rows) ** 2, axis=1))
            # m[s-1]/b[s-1]: row 1 pairs m[0] = 0 with the undefined b[0];
            # the products it feeds vanish, recorded as exactly zero.
            mp_bp = np.zeros(t + 1)
            if t >= 2:
                mp_bp[2:] = np.sum((self.m[1:t] / self.b[1:t]) ** 2, axis=1)
            self.m_prev_over_bprev_sq = mp_bp
            self.ga_sq = _pad(np.sum(gbar_rows * gbar_rows / a_rows, axis=1))
            self.eta_ga_sq = self.eta * self.ga_sq
            self.eta_ga_sq[0] = 0.0
            self.mart_term = _pad(
                -self.eta[1:] * np.sum(gbar_rows * (self.xi[1:] / a_rows), axis=1)
            )
        else:
            z = np.zeros(1)
            self.mhat_b_norm = z.copy()
            self.mhat_b_sq = z.copy()
            self.m_prev_over_b_sq = z.copy()
            self.m_prev_over_bprev_sq = z.copy()
            self.ga_sq = z.copy()
            self.eta_ga_sq = z.copy()
            self.mart_term = z.copy()

        flags = np.ones(t + 1, dtype=bool)
        if t:
            flags[1:] = noise_event_flags(
                self.model,
                self.xi_sq[1:],
                self.gbar_norm_all[1 : t + 1],
                self.T,
                self.delta,
                dim=self.d,
            )
        self.event_flags = flags
        self.event_prefix = np.logical_and.accumulate(flags)
        self.noise_event_all = bool(self.event_prefix[-1]) if t else True

        self.finalized = True

    def _effective_noise_powers(self) -> tuple[float, float, float]:
        """(sigma0^2_eff, sigma1^2, p) entering the running stochastic cap."""
        return effective_scale_powers(self.model, self.d)

    def require_finalized(self) -> None:
        if not self.finalized:
            raise LedgerError("ledger must be finalized before auditing")


def extend_ledger(
    ledger: AuditLedger,
    step: int,
    x_curr: np.ndarray,
    x_prev: np.ndarray,
    g: np.ndarray,
    g_bar: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
) -> None:
    """Free-function form of :meth:`AuditLedger.extend`."""
    ledger.extend(step, x_curr, x_prev, g, g_bar, m, v)
