"""Update-rule unit tests: frozen values, oracle agreement, invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adamaudit.optimizer import (
    AdamState,
    DimensionMismatch,
    HyperParams,
    NotSteppedError,
    ScheduleDomainError,
    StateMismatch,
    ZeroDenominator,
    derive_denominator,
    momentum_form_step,
    rate_schedule,
    step,
)
from oracles import scalar_adam_reference


def test_first_step_frozen_values():
    # beta2 = 0.999, C0 = 1: base step eta = sqrt(0.001); with a large first
    # gradient the first update is a signed step of size ~eta.
    params = HyperParams.from_scale(beta1=0.9, beta2=0.999, C0=1.0, eps0=1e-8)
    state = AdamState.fresh(np.array([1.0]))
    new = step(state, params, np.array([2.0]))
    eta = 1.0 * math.sqrt(1.0 - 0.999)
    assert new.m[0] == pytest.approx(0.2, rel=1e-15)
    assert new.v[0] == pytest.approx(0.004, rel=1e-15)
    assert new.x[0] == pytest.approx(0.9683772234033162, rel=1e-12)
    assert abs(new.x[0] - (1.0 - eta)) < 1e-7  # ~ x1 - eta * sign(g)
    assert new.last_eta_s == pytest.approx(eta * math.sqrt(0.001) / 0.1, rel=1e-15)
    assert derive_denominator(new)[0] == pytest.approx(
        math.sqrt(0.004) + 1e-8 * math.sqrt(1.0 - 0.999) * math.sqrt(0.001), rel=1e-12
    )


def test_two_step_second_moment():
    params = HyperParams(beta1=0.5, beta2=0.9, eta=0.1, eps=1e-8)
    state = AdamState.fresh(np.zeros(1))
    state = step(state, params, np.array([1.0]))
    state = step(state, params, np.array([-1.0]))
    # v2 = 0.9*0.1 + 0.1*1 = 0.19
    assert state.v[0] == pytest.approx(0.19, rel=1e-15)
    assert state.s == 2


def test_matches_scalar_oracle():
    params = HyperParams(beta1=0.9, beta2=0.99, eta=0.05, eps=1e-6)
    rng = np.random.default_rng(11)
    grads = rng.normal(0.0, 2.0, 60)
    ref = scalar_adam_reference(3.0, grads, 0.9, 0.99, 0.05, 1e-6)
    state = AdamState.fresh(np.array([3.0]))
    for s, g in enumerate(grads, start=1):
        state = step(state, params, np.array([g]))
        assert state.x[0] == pytest.approx(ref["x"][s], rel=1e-14, abs=1e-300)
        assert state.m[0] == pytest.approx(ref["m"][s - 1], rel=1e-14, abs=1e-300)
        assert state.v[0] == pytest.approx(ref["v"][s - 1], rel=1e-14, abs=1e-300)
        assert state.last_eta_s == pytest.approx(ref["eta_s"][s - 1], rel=1e-14)
        assert state.last_eps_s == pytest.approx(ref["eps_s"][s - 1], rel=1e-14)


def test_schedule_matches_state_powers_bitwise():
    params = HyperParams(beta1=0.7, beta2=0.97, eta=0.3, eps=1e-5)
    state = AdamState.fresh(np.zeros(2))
    for s in range(1, 40):
        state = step(state, params, np.full(2, 0.5))
        eta_s, eps_s = rate_schedule(s, params)
        assert eta_s == state.last_eta_s  # bitwise: same left-fold products
        assert eps_s == state.last_eps_s


def test_schedule_domain():
    params = HyperParams(beta1=0.0, beta2=0.5, eta=0.1, eps=0.0)
    with pytest.raises(ScheduleDomainError):
        rate_schedule(0, params)
    with pytest.raises(ScheduleDomainError):
        rate_schedule(-3, params)


def test_hyperparams_validation():
    with pytest.raises(Exception):
        HyperParams(beta1=0.9, beta2=0.9, eta=0.1, eps=0.0)  # beta1 < beta2 strict
    with pytest.raises(Exception):
        HyperParams(beta1=-0.1, beta2=0.9, eta=0.1, eps=0.0)
    with pytest.raises(Exception):
        HyperParams(beta1=0.1, beta2=1.0, eta=0.1, eps=0.0)
    with pytest.raises(Exception):
        HyperParams(beta1=0.1, beta2=0.9, eta=0.0, eps=0.0)
    with pytest.raises(Exception):
        HyperParams(beta1=0.1, beta2=0.9, eta=0.1, eps=-1e-9)
    p = HyperParams.from_scale(beta1=0.0, beta2=0.99, C0=2.0, eps0=1e-6)
    assert p.eta == pytest.approx(2.0 * math.sqrt(0.01), rel=1e-15)
    assert p.eps == pytest.approx(1e-6 * math.sqrt(0.01), rel=1e-15)


def test_dimension_mismatch_and_zero_denominator():
    params = HyperParams(beta1=0.0, beta2=0.5, eta=0.1, eps=0.0)
    state = AdamState.fresh(np.zeros(3))
    with pytest.raises(DimensionMismatch):
        step(state, params, np.zeros(2))
    # eps = 0 and a zero gradient gives b = 0 in that coordinate.
    with pytest.raises(ZeroDenominator):
        step(state, params, np.zeros(3))


def test_step_is_pure():
    params = HyperParams(beta1=0.5, beta2=0.9, eta=0.1, eps=1e-8)
    state = AdamState.fresh(np.ones(2))
    x_before = state.x.copy()
    g = np.array([1.0, -2.0])
    g_before = g.copy()
    new = step(state, params, g)
    assert np.array_equal(state.x, x_before)
    assert state.s == 0 and new.s == 1
    assert np.array_equal(g, g_before)
    assert new is not state


def test_denominator_needs_a_step():
    state = AdamState.fresh(np.ones(2))
    with pytest.raises(NotSteppedError):
        derive_denominator(state)


@settings(max_examples=60, deadline=None)
@given(
    beta1=st.floats(0.0, 0.95),
    gap=st.floats(0.01, 0.2),
    n=st.integers(2, 25),
    seed=st.integers(0, 10_000),
)
def test_momentum_form_agrees_with_direct_step(beta1, gap, n, seed):
    beta2 = min(0.999, beta1 + gap + 0.01)
    params = HyperParams(beta1=beta1, beta2=beta2, eta=0.05, eps=1e-7)
    rng = np.random.default_rng(seed)
    d = 3
    states = [AdamState.fresh(rng.normal(0.0, 1.0, d))]
    xs = [states[0].x]
    grads = []
    for _ in range(n):
        g = rng.normal(0.0, 1.5, d)
        grads.append(g)
        states.append(step(states[-1], params, g))
        xs.append(states[-1].x)
    for s in range(1, n + 1):
        x_prev = xs[s - 2] if s >= 2 else xs[0]
        x_next = momentum_form_step(
            x_prev, xs[s - 1], states[s - 1], states[s], params, g=grads[s - 1]
        )
        scale = np.maximum(1e-9, np.abs(xs[s]))
        assert float(np.max(np.abs(x_next - xs[s]) / scale)) < 1e-9
        # Gradient recovery from the two first moments takes the same path.
        x_next2 = momentum_form_step(x_prev, xs[s - 1], states[s - 1], states[s], params)
        assert float(np.max(np.abs(x_next2 - xs[s]) / scale)) < 1e-8


def test_momentum_form_rejects_nonconsecutive_states():
    params = HyperParams(beta1=0.5, beta2=0.9, eta=0.1, eps=1e-8)
    s0 = AdamState.fresh(np.ones(1))
    s1 = step(s0, params, np.array([1.0]))
    s2 = step(s1, params, np.array([1.0]))
    with pytest.raises(StateMismatch):
        momentum_form_step(s0.x, s0.x, s0, s2, params)
