"""Bias-corrected adaptive-moment update with a rescaled step/floor schedule.

The iteration maintained here, for a gradient estimate ``g_s`` at step
``s = 1, 2, ...``::

    m_s = beta1 * m_{s-1} + (1 - beta1) * g_s
    v_s = beta2 * v_{s-1} + (1 - beta2) * g_s**2
    eta_s = eta * sqrt(1 - beta2**s) / (1 - beta1**s)
    eps_s = eps * sqrt(1 - beta2**s)
    x_{s+1} = x_s - eta_s * m_s / (sqrt(v_s) + eps_s)

with ``m_0 = v_0 = 0``.  The floor ``eps_s`` is added *after* the square
root, and both the step size and the floor carry the ``sqrt(1 - beta2**s)``
warm-up factor, so the schedule is equivalent to the familiar
"divide m and v by their debiasing factors" form.  Base quantities are
usually tied to the averaging horizon through
``eta = C0 * sqrt(1 - beta2)`` and ``eps = eps0 * sqrt(1 - beta2)``
(see :meth:`HyperParams.from_scale`).

``step`` is a pure function: it returns a fresh state and never mutates its
inputs.  Powers ``beta1**s`` and ``beta2**s`` are carried in the state and
advanced by one multiplication per step, so repeated runs are bitwise
reproducible and auditing code can reproduce the exact same floats.

An algebraically equivalent "heavy-ball" form of the same iterate,

    x_{s+1} = x_s - eta_s * (1 - beta1) * g_s / b_s
              + beta1 * (eta_s * b_{s-1}) / (eta_{s-1} * b_s) * (x_s - x_{s-1})

with ``b_s = sqrt(v_s) + eps_s``, is provided by :func:`momentum_form_step`
for cross-checking; the two routes must agree to ~1e-10 relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "OptimizerError",
    "DimensionMismatch",
    "ZeroDenominator",
    "NotSteppedError",
    "ScheduleDomainError",
    "StateMismatch",
    "HyperParams",
    "AdamState",
    "step",
    "derive_denominator",
    "rate_schedule",
    "momentum_form_step",
]

_SCALE_CONSISTENCY_RTOL = 1e-12


class OptimizerError(Exception):
    """Base class for structured optimizer errors."""


class DimensionMismatch(OptimizerError):
    """Gradient shape does not match the iterate shape."""


class ZeroDenominator(OptimizerError):
    """A denominator coordinate is exactly zero (eps = 0 and v-coordinate = 0)."""


class NotSteppedError(OptimizerError):
    """A per-step quantity was requested from a state that has not stepped yet."""


class ScheduleDomainError(OptimizerError):
    """The schedule is only defined for step indices s >= 1."""


class StateMismatch(OptimizerError):
    """The two states handed to the momentum-form update are not consecutive."""


@dataclass(frozen=True)
class HyperParams:
    """Validated hyper-parameters.

    ``beta1`` and ``beta2`` must satisfy ``0 <= beta1 < beta2 < 1`` strictly:
    the momentum horizon is required to be shorter than the variance horizon.
    ``C0``/``eps0`` are optional bookkeeping of the horizon-free scale
    constants; when present they must reproduce ``eta``/``eps``.
    """

    beta1: float  # first-moment averaging factor, in [0, beta2)
    beta2: float  # second-moment averaging factor, in (beta1, 1)
    eta: float    # base step size, > 0
    eps: float    # base denominator floor, >= 0
    C0: float | None = None    # eta / sqrt(1 - beta2) when constructed from scale
    eps0: float | None = None  # eps / sqrt(1 - beta2) when constructed from scale

    def __post_init__(self) -> None:
        beta1 = float(self.beta1)
        beta2 = float(self.beta2)
        object.__setattr__(self, "beta1", beta1)
        object.__setattr__(self, "beta2", beta2)
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "eps", float(self.eps))
        if not (0.0 <= beta1 < beta2 < 1.0):
            raise OptimizerError(
                f"need 0 <= beta1 < beta2 < 1 strictly, got beta1={beta1!r} beta2={beta2!r}"
            )
        if not (self.eta > 0.0 and math.isfinite(self.eta)):
            raise OptimizerError(f"base step size must be positive and finite, got {self.eta!r}")
        if not (self.eps >= 0.0 and math.isfinite(self.eps)):
            raise OptimizerError(f"denominator floor must be >= 0 and finite, got {self.eps!r}")
        for name, base, derived in (("C0", self.C0, self.eta), ("eps0", self.eps0, self.eps)):
            if base is None:
                continue
            want = float(base) * math.sqrt(1.0 - beta2)
            tol = _SCALE_CONSISTENCY_RTOL * max(abs(want), abs(derived), 1e-300)
            if abs(want - derived) > tol:
                raise OptimizerError(
                    f"{name}={base!r} is inconsistent with the stored base value "
                    f"({derived!r} != {want!r})"
                )

    @classmethod
    def from_scale(cls, beta1: float, beta2: float, C0: float, eps0: float) -> "HyperParams":
        """Build parameters from horizon-free scale constants.

        Ties the base step and floor to the variance horizon:
        ``eta = C0 * sqrt(1 - beta2)`` and ``eps = eps0 * sqrt(1 - beta2)``.
        """
        root = math.sqrt(1.0 - float(beta2))
        return cls(
            beta1=beta1,
            beta2=beta2,
            eta=float(C0) * root,
            eps=float(eps0) * root,
            C0=float(C0),
            eps0=float(eps0),
        )


@dataclass(frozen=True)
class AdamState:
    """Immutable snapshot after ``s`` steps.

    ``beta1_pow``/``beta2_pow`` hold ``beta1**s``/``beta2**s`` advanced by one
    multiplication per step (never recomputed via ``pow``), which keeps every
    derived float bitwise reproducible.  ``last_eta_s``/``last_eps_s`` are the
    schedule values used by the most recent step; they are meaningless at
    ``s = 0`` and stored as NaN there.
    """

    x: np.ndarray           # current iterate x_{s+1} (the point after s updates)
    m: np.ndarray           # first-moment accumulator m_s
    v: np.ndarray           # second-moment accumulator v_s
    s: int                  # number of completed steps
    beta1_pow: float        # beta1**s
    beta2_pow: float        # beta2**s
    last_eta_s: float = field(default=math.nan)  # eta_s of the latest step (NaN at s=0)
    last_eps_s: float = field(default=math.nan)  # eps_s of the latest step (NaN at s=0)

    @classmethod
    def fresh(cls, x0: np.ndarray) -> "AdamState":
        """State before the first step: zero moments, unit powers."""
        x = np.array(x0, dtype=np.float64, copy=True)
        if x.ndim != 1 or x.size == 0:
            raise DimensionMismatch(f"iterate must be a nonempty 1-d array, got shape {x.shape}")
        return cls(
            x=x,
            m=np.zeros_like(x),
            v=np.zeros_like(x),
            s=0,
            beta1_pow=1.0,
            beta2_pow=1.0,
        )


def step(state: AdamState, params: HyperParams, g: np.ndarray) -> AdamState:
    """Advance one step with gradient estimate ``g``; returns a new state.

    Raises :class:`DimensionMismatch` if ``g`` has the wrong shape and
    :class:`ZeroDenominator` (naming the coordinate) if some denominator
    coordinate is exactly zero, which can only happen when ``eps = 0`` and
    that coordinate of ``v`` is zero.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.shape != state.x.shape:
        raise DimensionMismatch(
            f"gradient shape {g.shape} does not match iterate shape {state.x.shape}"
        )
    beta1 = params.beta1
    beta2 = params.beta2

    m_new = beta1 * state.m + (1.0 - beta1) * g
    v_new = beta2 * state.v + (1.0 - beta2) * (g * g)
    beta1_pow = state.beta1_pow * beta1
    beta2_pow = state.beta2_pow * beta2

    warm = math.sqrt(1.0 - beta2_pow)
    eta_s = params.eta * warm / (1.0 - beta1_pow)
    eps_s = params.eps * warm

    denom = np.sqrt(v_new) + eps_s
    if not np.all(denom > 0.0):
        bad = int(np.flatnonzero(denom <= 0.0)[0])
        raise ZeroDenominator(
            f"denominator coordinate {bad} is zero at step {state.s + 1} "
            f"(eps={params.eps!r}, v[{bad}]={v_new[bad]!r})"
        )

    x_new = state.x - eta_s * (m_new / denom)
    return AdamState(
        x=x_new,
        m=m_new,
        v=v_new,
        s=state.s + 1,
        beta1_pow=beta1_pow,
        beta2_pow=beta2_pow,
        last_eta_s=eta_s,
        last_eps_s=eps_s,
    )


def derive_denominator(state: AdamState) -> np.ndarray:
    """Denominator ``sqrt(v_s) + eps_s`` of the state's latest step.

    Only defined after at least one step; raises :class:`NotSteppedError`
    at ``s = 0`` (there is no step-0 floor).
    """
    if state.s < 1:
        raise NotSteppedError("denominator is undefined before the first step (s = 0)")
    return np.sqrt(state.v) + state.last_eps_s


def rate_schedule(s: int, params: HyperParams) -> tuple[float, float]:
    """Schedule pair ``(eta_s, eps_s)`` for step index ``s >= 1``.

    Powers are rebuilt by iterative multiplication so the result is bitwise
    identical to what a state reaching step ``s`` carries; cost is O(s).
    """
    s = int(s)
    if s < 1:
        raise ScheduleDomainError(f"schedule is defined for s >= 1, got s={s}")
    b1p = 1.0
    b2p = 1.0
    for _ in range(s):
        b1p *= params.beta1
        b2p *= params.beta2
    warm = math.sqrt(1.0 - b2p)
    return params.eta * warm / (1.0 - b1p), params.eps * warm


def momentum_form_step(
    x_prev: np.ndarray,
    x_curr: np.ndarray,
    state_prev: AdamState,
    state_curr: AdamState,
    params: HyperParams,
    g: np.ndarray | None = None,
) -> np.ndarray:
    """Next iterate via the heavy-ball rewrite of the same update.

    ``state_prev``/``state_curr`` must be consecutive (``state_curr`` is the
    result of stepping ``state_prev``); ``x_prev``/``x_curr`` are the iterates
    before those two states' steps, with the convention ``x_prev = x_curr``
    for the very first step (zero displacement kills the momentum term, so
    the undefined step-0 denominator never enters).  If ``g`` is omitted it
    is recovered from the two first-moment accumulators.

    Returns the same next iterate as :func:`step` up to floating-point
    reassociation (~1e-10 relative agreement on sane scales).
    """
    if state_curr.s != state_prev.s + 1:
        raise StateMismatch(
            f"states must be consecutive, got s={state_prev.s} then s={state_curr.s}"
        )
    s = state_curr.s
    beta1 = params.beta1
    if g is None:
        g = (state_curr.m - beta1 * state_prev.m) / (1.0 - beta1)
    else:
        g = np.asarray(g, dtype=np.float64)

    b_curr = derive_denominator(state_curr)
    eta_curr = state_curr.last_eta_s
    if s >= 2:
        b_prev = derive_denominator(state_prev)
        eta_prev = state_prev.last_eta_s
    else:
        # First step: displacement is zero by convention, any finite ratio works.
        b_prev = np.zeros_like(b_curr)
        eta_prev = params.eta

    x_prev = np.asarray(x_prev, dtype=np.float64)
    x_curr = np.asarray(x_curr, dtype=np.float64)
    carry = (eta_curr * b_prev) / (eta_prev * b_curr)
    return (
        x_curr
        - eta_curr * (1.0 - beta1) * (g / b_curr)
        + beta1 * carry * (x_curr - x_prev)
    )
