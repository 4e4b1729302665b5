"""Closed-form constants of the high-probability analysis.

Everything here is computable before (or without) running a trajectory:
structural caps of the update rule, the per-horizon coefficients entering
the decomposed descent bounds, and the global budgets — the squared
true-gradient cap, the stochastic-norm cap, and (for the generalized
regime) the value/gradient/curvature budget chain with the induced cap on
the base step scale.

All growth-exponent expressions use the convention ``0**0 = 1``.  Any
budget that does not evaluate to a finite float raises
:class:`ConstantsOverflow` naming the offending term; callers should treat
that as "this tuning is outside the analysis", not as a numerical bug.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..noise import NoiseModel, effective_scale_powers, tail_factor_sq
from ..optimizer import HyperParams
from ..problems import GeneralizedSmooth, LipschitzSmooth

__all__ = [
    "ConstantsOverflow",
    "SmoothConstants",
    "GeneralizedConstants",
    "compute_theory_constants",
    "ratio_drift_cap",
    "momentum_over_denom_cap",
    "reach_factor",
    "base_scales",
    "surrogate_descent_coeffs",
    "martingale_tail_coeff",
    "power_with_zero_convention",
]


class ConstantsOverflow(Exception):
    """A theory budget left the finite-float range; carries the term name."""


def _finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise ConstantsOverflow(f"{name} is not finite ({value!r})")
    return float(value)


def power_with_zero_convention(base: float, exponent: float) -> float:
    """``base ** exponent`` with ``0 ** 0 = 1`` (growth exponent p = 0).

    Saturates to ``inf`` instead of raising, so an out-of-range budget is
    reported as :class:`ConstantsOverflow` by the finiteness guard rather
    than leaking a bare ``OverflowError``.
    """
    if base == 0.0 and exponent == 0.0:
        return 1.0
    try:
        return base ** exponent
    except OverflowError:
        return math.inf


def ratio_drift_cap(beta2: float) -> float:
    """Sup-norm cap on the drift of consecutive effective-step ratios."""
    return max(1.0, math.sqrt((1.0 + beta2) / beta2) - 1.0)


def momentum_over_denom_cap(beta1: float, beta2: float, beta1_pow) -> float:
    """Cap on ``||m_s / b_s||_inf`` given ``beta1_pow = beta1**s``.

    Vectorizes over an array of powers.
    """
    return np.sqrt(
        (1.0 - beta1) * (1.0 - np.asarray(beta1_pow))
        / ((1.0 - beta2) * (1.0 - beta1 / beta2))
    )


def reach_factor(beta1: float, beta2: float, dim: int) -> float:
    """Per-step reach of iterates and offset points, in units of the base step."""
    return math.sqrt(
        4.0 * dim / (beta2 * (1.0 - beta1) ** 2 * (1.0 - beta2) * (1.0 - beta1 / beta2))
    )


def base_scales(params: HyperParams) -> tuple:
    """``(C0, eps0)``: the step/floor scales with the warm-up factor removed."""
    root = math.sqrt(1.0 - params.beta2)
    C0 = params.C0 if params.C0 is not None else params.eta / root
    eps0 = params.eps0 if params.eps0 is not None else params.eps / root
    return float(C0), float(eps0)


def surrogate_descent_coeffs(params: HyperParams, L: float) -> tuple:
    """Coefficients of the momentum-energy and gradient-energy sums in the
    curvature part of the surrogate descent bound."""
    smax = ratio_drift_cap(params.beta2)
    denom = 2.0 * (1.0 - params.beta1) ** 2
    d6 = L * params.eta ** 2 * (1.0 + 4.0 * smax * smax) / denom
    d7 = 3.0 * L * params.eta ** 2 / denom
    return d6, d7


def martingale_tail_coeff(params: HyperParams, dim: int, T: int, delta: float) -> float:
    """Additive tail term of the gradient-correlation martingale bound."""
    return (
        3.0
        * params.eta
        * dim
        / ((1.0 - params.beta1) * math.sqrt(1.0 - params.beta2))
        * math.log(dim * T / delta)
    )


@dataclass(frozen=True)
class SmoothConstants:
    """Budgets and coefficients under a global Lipschitz-gradient certificate."""

    L: float                   # gradient Lipschitz constant
    T: int                     # planned horizon
    delta: float               # failure probability
    dim: int
    C0: float                  # base step scale (eta / sqrt(1 - beta2))
    eps0: float                # base floor scale
    tail_factor: float         # sqrt(1 + log(T/delta))
    grad_shift_bound: float    # additive gap between gradients at x_s and y_s
    grad_growth_rate: float    # per-step growth of the true-gradient norm
    grad_energy_cap: float     # global cap on the per-coordinate energy F_i
    log_energy: float          # log(grad_energy_cap) - T log(beta2)
    grad_cap_sq: float         # squared cap G^2 on every true gradient norm
    grad_cap_sq_terms: tuple   # its seven summands, for reporting
    stoch_cap: float           # cap on every stochastic gradient norm
    coeff_martingale: float    # additive tail of the correlation bound
    coeff_proxy_err: float     # proxy-vs-realized denominator error weight
    coeff_mom_drift: float     # momentum-drift weight (scale-dependent part)
    coeff_mom_drift_eps: float  # momentum-drift weight (floor part)
    coeff_mom_tail: float      # additive momentum tail weight
    coeff_curvature: float     # momentum-energy weight in the surrogate bound
    coeff_grad_energy: float   # gradient-energy weight in the surrogate bound
    rate_rhs: float            # high-probability cap on (1/T) sum ||gbar_s||^2


@dataclass(frozen=True)
class GeneralizedConstants:
    """Budget chain under a generalized (gradient-dependent) curvature certificate."""

    cert: GeneralizedSmooth
    T: int
    delta: float
    dim: int
    E0: float                  # step-scale budget the tuning must respect
    C0: float                  # realized base step scale
    eps0: float
    tail_factor: float
    growth_rate: float         # per-step true-gradient growth at budget scale
    grad_energy_cap: float     # cap on the per-coordinate energy at horizon T
    log_energy: float
    value_budget: float        # cap on f(y) - f_star along the run
    grad_budget: float         # cap H on every true gradient norm
    stoch_budget: float        # cap on every stochastic gradient norm
    curvature_budget: float    # cap on the offset-point curvature sequence
    reach_factor: float
    base_rate_cap: float       # admissible cap on the base step scale C0
    rate_rhs: float


def _energy_cap(
    eps: float,
    msq: float,
    T: float,
    s0sq: float,
    s1sq: float,
    pexp: float,
    reach: float,
) -> float:
    """``1 + (2 M^2/eps^2)(s0^2 T + s1^2 T reach^p + T reach^2)``."""
    return 1.0 + (2.0 * msq / (eps * eps)) * (
        s0sq * T
        + s1sq * T * power_with_zero_convention(reach, pexp)
        + T * reach * reach
    )


def compute_theory_constants(
    params: HyperParams,
    model: NoiseModel,
    smoothness,
    T: int,
    delta: float,
    dim: int,
    f_gap: float,
    g1_norm: float,
    E0: float = 1.0,
):
    """Evaluate the full constant/budget chain for one configuration.

    ``f_gap`` is ``f(x1) - f_star`` and ``g1_norm`` the true-gradient norm
    at the start.  Dispatches on the smoothness certificate; raises
    :class:`ConstantsOverflow` when any budget leaves finite floats (e.g.
    growth exponents close to 4).
    """
    if f_gap < 0.0:
        raise ValueError(f"value gap must be >= 0, got {f_gap!r}")
    T = int(T)
    p = params
    beta1, beta2 = p.beta1, p.beta2
    eps = p.eps
    if eps <= 0.0:
        raise ValueError("the budget chain needs a positive stability floor")
    C0, eps0 = base_scales(p)
    msq = tail_factor_sq(T, delta)
    mfac = math.sqrt(msq)
    s0sq, s1sq, pexp = effective_scale_powers(model, dim)
    sigma0 = math.sqrt(s0sq)
    sigma1 = math.sqrt(s1sq)
    one_m1 = 1.0 - beta1
    one_ratio = 1.0 - beta1 / beta2
    log_b2 = math.log(beta2)
    log_dT = math.log(dim * T / delta)

    if isinstance(smoothness, LipschitzSmooth):
        L = smoothness.L
        growth = L * C0 * math.sqrt(dim / one_ratio)
        reach = g1_norm + T * growth
        f_cap = _finite("grad_energy_cap", _energy_cap(eps, msq, T, s0sq, s1sq, pexp, reach))
        log_energy = _finite("log_energy", math.log(f_cap) - T * log_b2)
        log_mix = _finite(
            "log_mixed_energy", math.log(dim * T + f_cap) - math.log(delta) - T * log_b2
        )

        unit = L * C0 * dim
        terms = (
            8.0 * L * f_gap,
            48.0 * mfac * unit * sigma0 / one_m1 * log_dT,
            16.0 * mfac * unit * sigma0 / one_m1 * log_energy,
            8.0
            * (3.0 * L * C0 + 8.0 * (mfac * sigma0 + eps0))
            / beta2
            * unit
            / (one_m1 ** 2 * one_ratio)
            * log_energy,
            (4.0 - pexp)
            / 2.0
            * power_with_zero_convention(pexp, pexp / (4.0 - pexp))
            * power_with_zero_convention(
                72.0 * mfac * sigma1 * unit / (beta2 * one_m1 ** 2 * one_ratio) * log_mix,
                4.0 / (4.0 - pexp),
            ),
            32.0 * (18.0 * mfac * unit / (beta2 * one_m1 ** 2 * one_ratio) * log_mix) ** 2,
            4.0 * L * unit * C0 / (one_m1 ** 2 * one_ratio),
        )
        for i, term in enumerate(terms):
            _finite(f"grad_cap_sq_term_{i + 1}", term)
        grad_cap_sq = _finite("grad_cap_sq", math.fsum(terms))
        G = math.sqrt(grad_cap_sq)
        stoch_base = 2.0 * s0sq + 2.0 * s1sq * power_with_zero_convention(G, pexp) + 2.0 * grad_cap_sq
        stoch_cap = _finite("stoch_cap", mfac * math.sqrt(stoch_base))

        d6, d7 = surrogate_descent_coeffs(p, L)
        rate_rhs = _finite(
            "rate_rhs",
            grad_cap_sq
            / (T * L * C0)
            * (math.sqrt(stoch_base) / math.sqrt(1.0 - beta2) + eps0)
            * mfac,
        )
        return SmoothConstants(
            L=L,
            T=T,
            delta=float(delta),
            dim=int(dim),
            C0=C0,
            eps0=eps0,
            tail_factor=mfac,
            grad_shift_bound=L * C0 * math.sqrt(dim) / (one_m1 * math.sqrt(one_ratio)),
            grad_growth_rate=growth,
            grad_energy_cap=f_cap,
            log_energy=log_energy,
            grad_cap_sq=grad_cap_sq,
            grad_cap_sq_terms=terms,
            stoch_cap=stoch_cap,
            coeff_martingale=martingale_tail_coeff(p, dim, T, delta),
            coeff_proxy_err=p.eta * math.sqrt(1.0 - beta2) / one_m1,
            coeff_mom_drift=2.0 * p.eta * math.sqrt(1.0 - beta2) / one_m1 ** 3,
            coeff_mom_drift_eps=eps * 2.0 * p.eta * math.sqrt(1.0 - beta2) / one_m1 ** 3,
            coeff_mom_tail=2.0
            * p.eta
            * math.sqrt(dim)
            / math.sqrt(one_m1 ** 3 * (1.0 - beta2) * one_ratio),
            coeff_curvature=d6,
            coeff_grad_energy=d7,
            rate_rhs=rate_rhs,
        )

    if not isinstance(smoothness, GeneralizedSmooth):
        raise TypeError(f"unsupported smoothness certificate: {smoothness!r}")

    cert = smoothness
    E0 = float(E0)
    if E0 <= 0.0:
        raise ValueError(f"step-scale budget must be positive, got {E0!r}")
    growth = E0 * math.sqrt(dim / one_ratio)
    reach = g1_norm + T * growth
    j_cap = _finite("grad_energy_cap", _energy_cap(eps, msq, T, s0sq, s1sq, pexp, reach))
    log_energy = _finite("log_energy", math.log(j_cap) - T * log_b2)

    ed = E0 * dim
    value_terms = (
        f_gap,
        3.0 * ed * mfac / one_m1 * log_dT,
        ed * mfac / one_m1 * log_energy,
        4.0 * ed * (mfac + eps) / (beta2 * one_m1 ** 2 * one_ratio) * log_energy,
        2.0 * ed / math.sqrt(one_m1 ** 3 * one_ratio),
        3.0 * E0 * ed / (2.0 * one_m1 ** 2) * log_energy,
        5.0 * E0 * ed / (2.0 * beta2 * one_m1 ** 2 * one_ratio) * log_energy,
    )
    for i, term in enumerate(value_terms):
        _finite(f"value_budget_term_{i + 1}", term)
    value_budget = _finite("value_budget", math.fsum(value_terms))

    q = cert.q
    lin_q = 4.0 * cert.Lq * value_budget
    lin_0 = 4.0 * cert.L0 * value_budget
    grad_budget = _finite(
        "grad_budget",
        cert.L0 / cert.Lq
        + power_with_zero_convention(lin_q, q)
        + power_with_zero_convention(lin_q, q / (2.0 - q))
        + power_with_zero_convention(lin_0, q / 2.0)
        + lin_q
        + power_with_zero_convention(lin_q, 1.0 / (2.0 - q))
        + math.sqrt(lin_0),
    )
    stoch_base = 2.0 * (
        s0sq
        + s1sq * power_with_zero_convention(grad_budget, pexp)
        + grad_budget * grad_budget
    )
    stoch_budget = _finite("stoch_budget", math.sqrt(stoch_base * msq))
    curvature_budget = _finite(
        "curvature_budget",
        cert.L0
        + cert.Lq
        * power_with_zero_convention(
            power_with_zero_convention(grad_budget, q) + grad_budget + cert.L0 / cert.Lq,
            q,
        ),
    )
    F = reach_factor(beta1, beta2, dim)
    base_rate_cap = min(
        E0,
        E0 / stoch_budget,
        E0 / curvature_budget,
        math.sqrt(beta2 * one_m1 ** 2 * one_ratio / (4.0 * cert.Lq ** 2 * dim)),
    )
    rate_rhs = _finite(
        "rate_rhs",
        4.0
        * value_budget
        / (T * C0)
        * (math.sqrt(stoch_base) / math.sqrt(1.0 - beta2) + eps0)
        * mfac,
    )
    return GeneralizedConstants(
        cert=cert,
        T=T,
        delta=float(delta),
        dim=int(dim),
        E0=E0,
        C0=C0,
        eps0=eps0,
        tail_factor=mfac,
        growth_rate=growth,
        grad_energy_cap=j_cap,
        log_energy=log_energy,
        value_budget=value_budget,
        grad_budget=grad_budget,
        stoch_budget=stoch_budget,
        curvature_budget=curvature_budget,
        reach_factor=F,
        base_rate_cap=_finite("base_rate_cap", base_rate_cap),
        rate_rhs=rate_rhs,
    )
