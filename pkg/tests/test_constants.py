"""Closed-form constant and budget-chain tests."""

import math

import numpy as np
import pytest

from adamaudit.audit.constants import (
    ConstantsOverflow,
    GeneralizedConstants,
    SmoothConstants,
    base_scales,
    compute_theory_constants,
    martingale_tail_coeff,
    momentum_over_denom_cap,
    power_with_zero_convention,
    ratio_drift_cap,
    reach_factor,
    surrogate_descent_coeffs,
)
from adamaudit.noise import noiseless, resolve_noise
from adamaudit.optimizer import HyperParams
from adamaudit.problems import LipschitzSmooth, resolve_objective


def test_ratio_drift_cap_frozen_values():
    # Large beta2 keeps the floor of 1; small beta2 is sqrt((1+b2)/b2) - 1.
    assert ratio_drift_cap(0.999) == 1.0
    assert ratio_drift_cap(0.1) == pytest.approx(math.sqrt(11.0) - 1.0, rel=1e-14)
    assert ratio_drift_cap(0.5) == pytest.approx(max(1.0, math.sqrt(3.0) - 1.0), rel=1e-14)


def test_momentum_over_denom_cap_values():
    # No momentum: 1/sqrt(1-beta2) once beta1^s = 0.
    assert momentum_over_denom_cap(0.0, 0.9, 0.0) == pytest.approx(
        1.0 / math.sqrt(0.1), rel=1e-14
    )
    # Long-run value for the default tuning.
    assert momentum_over_denom_cap(0.9, 0.999, 0.0) == pytest.approx(
        31.766191290283892, rel=1e-12
    )
    # Vectorized over the debiasing powers, monotone in s.
    pows = 0.9 ** np.arange(1, 20)
    caps = momentum_over_denom_cap(0.9, 0.999, pows)
    assert caps.shape == (19,)
    assert np.all(np.diff(caps) > 0)


def test_reach_factor_explicit():
    val = reach_factor(0.5, 0.9, 3)
    expected = math.sqrt(4.0 * 3 / (0.9 * 0.25 * 0.1 * (1.0 - 0.5 / 0.9)))
    assert val == pytest.approx(expected, rel=1e-14)


def test_base_scales_round_trip():
    p = HyperParams.from_scale(0.9, 0.99, 2.0, 1e-6)
    C0, eps0 = base_scales(p)
    assert C0 == pytest.approx(2.0, rel=1e-14)
    assert eps0 == pytest.approx(1e-6, rel=1e-14)


def test_power_zero_convention_and_saturation():
    assert power_with_zero_convention(0.0, 0.0) == 1.0
    assert power_with_zero_convention(0.0, 2.0) == 0.0
    assert power_with_zero_convention(3.0, 2.0) == 9.0
    # Saturates instead of raising so the finiteness guard can name the term.
    assert power_with_zero_convention(1e300, 400.0) == math.inf


def test_surrogate_descent_coeffs():
    p = HyperParams.from_scale(0.9, 0.999, 1.0, 1e-8)
    d6, d7 = surrogate_descent_coeffs(p, 1.0)
    # D6 = L eta^2 (1 + 4 S^2)/(2 (1-b1)^2) with S = 1 at beta2 = 0.999.
    assert d6 == pytest.approx(1.0 * p.eta**2 * 5.0 / (2.0 * 0.01), rel=1e-12)
    assert d7 == pytest.approx(3.0 * 1.0 * p.eta**2 / (2.0 * 0.01), rel=1e-12)


def test_martingale_tail_coeff_positive_and_monotone_in_T():
    p = HyperParams.from_scale(0.9, 0.999, 1.0, 1e-8)
    c1 = martingale_tail_coeff(p, 2, 100, 0.1)
    c2 = martingale_tail_coeff(p, 2, 10_000, 0.1)
    assert 0 < c1 < c2


def test_smooth_budget_dominates_initial_gap_term():
    params = HyperParams.from_scale(0.9, 0.999, 1.0, 1e-8)
    model = resolve_noise("ball:1,0.5,2")
    sc = compute_theory_constants(
        params, model, LipschitzSmooth(L=1.0), T=100, delta=0.1, dim=2,
        f_gap=0.5, g1_norm=1.0,
    )
    assert isinstance(sc, SmoothConstants)
    assert sc.grad_cap_sq_terms[0] == pytest.approx(8.0 * 1.0 * 0.5, rel=1e-14)
    assert sc.grad_cap_sq >= 4.0
    assert sc.grad_cap_sq == pytest.approx(math.fsum(sc.grad_cap_sq_terms), rel=1e-15)
    assert len(sc.grad_cap_sq_terms) == 7
    assert all(t >= 0.0 for t in sc.grad_cap_sq_terms)
    assert sc.stoch_cap > math.sqrt(sc.grad_cap_sq)  # includes the noise floor
    assert sc.rate_rhs > 0 and math.isfinite(sc.rate_rhs)


def test_noiseless_smooth_budget_drops_noise_terms():
    params = HyperParams.from_scale(0.5, 0.99, 1.0, 1e-8)
    sc = compute_theory_constants(
        params, noiseless(), LipschitzSmooth(L=2.0), T=50, delta=0.1, dim=1,
        f_gap=1.0, g1_norm=2.0,
    )
    # sigma0 = sigma1 = 0 kills terms 2, 3, and 5 exactly.
    assert sc.grad_cap_sq_terms[1] == 0.0
    assert sc.grad_cap_sq_terms[2] == 0.0
    assert sc.grad_cap_sq_terms[4] == 0.0
    assert sc.grad_cap_sq_terms[3] > 0.0  # mixed term keeps its eps0 part


def test_growth_exponent_near_four_overflows_cleanly():
    params = HyperParams.from_scale(0.9, 0.999, 1.0, 1e-8)
    model = resolve_noise("ball:1,0.5,3.99")
    with pytest.raises(ConstantsOverflow):
        compute_theory_constants(
            params, model, LipschitzSmooth(L=1.0), T=10**6, delta=0.01, dim=10,
            f_gap=1.0, g1_norm=10.0,
        )


def test_generalized_budget_chain_frozen_probe():
    # Quartic probe: d=1, beta1=0, beta2=0.999, E0=1, T=2000, start 0.005.
    params = HyperParams.from_scale(0.0, 0.999, 1.0, 1e-8)
    obj = resolve_objective("quartic:1")
    x1 = np.array([0.005])
    gc = compute_theory_constants(
        params, noiseless(), obj.smoothness, T=2000, delta=0.1, dim=1,
        f_gap=float(obj.value(x1) - obj.f_star),
        g1_norm=float(abs(obj.grad(x1)[0])),
        E0=1.0,
    )
    assert isinstance(gc, GeneralizedConstants)
    assert gc.value_budget == pytest.approx(1570.4819559593145, rel=1e-9)
    assert gc.grad_budget == pytest.approx(48563.52115210026, rel=1e-9)
    assert gc.stoch_budget == pytest.approx(226781.63502888381, rel=1e-9)
    assert gc.curvature_budget == pytest.approx(9488.12492056665, rel=1e-9)
    assert gc.base_rate_cap == pytest.approx(4.409528134289339e-06, rel=1e-9)
    # The binding branch here is E0 / stoch_budget.
    assert gc.base_rate_cap == pytest.approx(1.0 / gc.stoch_budget, rel=1e-12)
    assert 0.0 < gc.base_rate_cap <= gc.E0


def test_generalized_chain_orders_budgets():
    params = HyperParams.from_scale(0.5, 0.99, 1.0, 1e-8)
    obj = resolve_objective("quartic:1")
    gc = compute_theory_constants(
        params, noiseless(), obj.smoothness, T=100, delta=0.1, dim=1,
        f_gap=1.0, g1_norm=1.0, E0=0.5,
    )
    # The gradient cap swallows sqrt(4 L0 Hhat) and 4 Lq Hhat individually.
    assert gc.grad_budget >= math.sqrt(4.0 * obj.smoothness.L0 * gc.value_budget)
    assert gc.grad_budget >= 4.0 * obj.smoothness.Lq * gc.value_budget
    # Noiseless: the stochastic budget is exactly M sqrt(2) H.
    assert gc.stoch_budget == pytest.approx(
        gc.tail_factor * math.sqrt(2.0) * gc.grad_budget, rel=1e-12
    )
    assert gc.curvature_budget >= obj.smoothness.L0


def test_input_validation():
    params = HyperParams.from_scale(0.9, 0.999, 1.0, 1e-8)
    with pytest.raises(ValueError):
        compute_theory_constants(
            params, noiseless(), LipschitzSmooth(L=1.0), T=10, delta=0.1, dim=1,
            f_gap=-0.5, g1_norm=1.0,
        )
    bare = HyperParams(beta1=0.0, beta2=0.9, eta=0.1, eps=0.0)
    with pytest.raises(ValueError):
        compute_theory_constants(
            bare, noiseless(), LipschitzSmooth(L=1.0), T=10, delta=0.1, dim=1,
            f_gap=0.5, g1_norm=1.0,
        )
    with pytest.raises(TypeError):
        compute_theory_constants(
            params, noiseless(), None, T=10, delta=0.1, dim=1, f_gap=0.5, g1_norm=1.0
        )
