"""Summation-lemma and concentration self-tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adamaudit.audit.sequences import (
    azuma_mc,
    check_sequence_lemmas,
    geometric_tail_sum,
)
from oracles import geometric_sum_reference, momentum_sum_reference


def test_hand_example_three_unit_increments():
    # alpha = (1,1,1), beta2 = 1, eps = 1:
    # lhs = 1/2 + 1/3 + 1/4 = 13/12; rhs = log(1 + 3) = log 4.
    lhs, rhs, margin = geometric_tail_sum([1.0, 1.0, 1.0], 1.0, 1.0)
    assert lhs == pytest.approx(13.0 / 12.0, rel=1e-14)
    assert rhs == pytest.approx(math.log(4.0), rel=1e-14)
    assert margin > 0
    # Dual route: slow pure-Python recursion agrees term by term.
    lhs_list, rhs_list = geometric_sum_reference([1.0, 1.0, 1.0], 1.0, 1.0)
    assert lhs_list[-1] == pytest.approx(lhs, rel=1e-14)
    assert rhs_list[-1] == pytest.approx(rhs, rel=1e-14)


@settings(max_examples=80, deadline=None)
@given(
    n=st.integers(1, 40),
    beta2=st.floats(0.3, 1.0),
    log_eps=st.floats(-4.0, 2.0),
    seed=st.integers(0, 10_000),
)
def test_geometric_tail_property(n, beta2, log_eps, seed):
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.0, 5.0, n)
    eps = 10.0**log_eps
    lhs, rhs, margin = geometric_tail_sum(alpha, beta2, eps)
    assert margin >= -1e-10
    assert lhs <= rhs + 1e-10 * max(1.0, abs(rhs))
    ref_lhs, ref_rhs = geometric_sum_reference(list(alpha), beta2, eps)
    assert lhs == pytest.approx(ref_lhs[-1], rel=1e-11, abs=1e-12)
    assert rhs == pytest.approx(ref_rhs[-1], rel=1e-11, abs=1e-12)


def test_momentum_reference_beta1_zero_reduces_to_plain_sum():
    alpha = [0.4, 1.2, 0.1, 2.0]
    lhs_raw, lhs_debias, log_part = momentum_sum_reference(alpha, 0.0, 0.9, 0.5)
    # With no momentum the weighted sums collapse to the plain geometric sum
    # over the squared increments.
    base_lhs, _ = geometric_sum_reference([a * a for a in alpha], 0.9, 0.5)
    assert lhs_raw[-1] == pytest.approx(base_lhs[-1], rel=1e-12)
    assert lhs_debias[-1] == pytest.approx(base_lhs[-1], rel=1e-12)
    assert log_part[-1] > 0


def test_randomized_lemma_battery_small():
    rep = check_sequence_lemmas(n_instances=300, seed=11, max_len=60, tol=1e-10)
    assert rep.passed
    assert rep.n_failed == 0
    for name, worst in rep.worst_margins.items():
        assert worst >= -1e-10, name


def test_lemma_battery_is_seed_deterministic():
    a = check_sequence_lemmas(n_instances=50, seed=5, max_len=30)
    b = check_sequence_lemmas(n_instances=50, seed=5, max_len=30)
    assert a.worst_margins == b.worst_margins


def test_geometric_tail_input_validation():
    with pytest.raises(Exception):
        geometric_tail_sum([1.0, -2.0], 0.9, 1.0)  # negative increment
    with pytest.raises(Exception):
        geometric_tail_sum([1.0], 1.5, 1.0)  # beta2 out of range
    with pytest.raises(Exception):
        geometric_tail_sum([1.0], 0.9, 0.0)  # needs a positive floor


def test_azuma_coin_small():
    rep = azuma_mc("coin", T=50, trials=4000, delta=0.1, seed=0)
    assert rep.passed
    assert all(r <= 0.1 + 1e-12 or p >= 0.01 for r, p in zip(rep.rates, rep.p_values))


def test_azuma_gaussian_small():
    rep = azuma_mc("gaussian", T=50, trials=4000, delta=0.1, seed=1)
    assert rep.passed


def test_azuma_rejects_unknown_kind():
    with pytest.raises(Exception):
        azuma_mc("cauchy", T=10, trials=10, delta=0.1)
