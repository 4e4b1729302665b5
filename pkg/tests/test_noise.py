"""Noise-law tests: unbiasedness, Orlicz-ball budget, grammar, reproducibility.

The statistical checks here mirror the heavier acceptance versions at reduced
draw counts so the file stays fast; the full-budget runs live in
test_acceptance.py.
"""

import math

import numpy as np
import pytest

from adamaudit.noise import (
    NoiseError,
    NoiseModel,
    affine,
    bounded,
    derive_rng,
    effective_scale_powers,
    gaussian_affine,
    generalized,
    noise_event_flags,
    noiseless,
    resolve_noise,
    sample,
    sample_many,
    scale_total_sq,
    sub_gaussian,
    tail_factor_sq,
    verify_orlicz_bound,
    violator,
)

E_MINUS_1 = math.e - 1.0


def test_sampling_is_unbiased():
    model = generalized(1.0, 0.5, 2.0)
    g_bar = np.array([0.7, -0.3, 1.1])
    rng = derive_rng(123, 0)
    xs = sample_many(model, g_bar, 20_000, rng)  # noise deviations, mean zero
    mean = xs.mean(axis=0)
    se = xs.std(axis=0, ddof=1) / math.sqrt(xs.shape[0])
    assert np.all(np.abs(mean) <= 4.0 * se + 1e-12)


def test_ball_orlicz_mean_hits_design_value():
    # The ball law is built so E[exp(||xi||^2 / scale^2)] == e exactly;
    # subtracting 1 the Monte Carlo mean must sit within 3 SE of e-1.
    model = generalized(1.0, 0.5, 2.0)
    rng = derive_rng(9, 0)
    rep = verify_orlicz_bound(model, np.array([0.4, -0.2]), draws=20_000, rng=rng)
    assert rep.passed
    assert abs(rep.mean - E_MINUS_1) <= 3.0 * rep.se


def test_bounded_law_never_exceeds_sigma0():
    model = bounded(0.8)
    rng = derive_rng(4, 0)
    xs = sample_many(model, np.zeros(3), 50_000, rng)
    norms = np.linalg.norm(xs, axis=1)
    assert float(norms.max()) <= 0.8 + 1e-12


def test_violator_fails_certificate():
    model = violator(1.0)
    rng = derive_rng(2, 0)
    rep = verify_orlicz_bound(model, np.zeros(2), draws=20_000, rng=rng)
    assert not rep.passed
    assert rep.mean > E_MINUS_1


def test_gaussian_law_passes_certificate():
    model = gaussian_affine(1.0, 0.5)
    rng = derive_rng(17, 0)
    rep = verify_orlicz_bound(model, np.array([1.0]), draws=20_000, rng=rng)
    assert rep.passed


def test_tail_factor_value():
    # 1 + log(T/delta) with T=1, delta=e^{-2}: 1 + 2 = 3.
    assert tail_factor_sq(1, math.exp(-2.0)) == pytest.approx(3.0, rel=1e-12)
    assert tail_factor_sq(100, 0.1) == pytest.approx(1.0 + math.log(1000.0), rel=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0, 2.0, 3.0, 3.9])
def test_scale_total_combines_floor_and_growth(p):
    model = generalized(1.5, 0.5, p)
    g = np.array([3.0, 4.0])  # norm 5
    expected = 1.5**2 + 0.25 * 5.0**p
    assert scale_total_sq(model, g) == pytest.approx(expected, rel=1e-12)


def test_zero_to_the_zero_is_one():
    # p=0 at a stationary point: 0^0 counts as 1, keeping the sigma1 floor.
    model = generalized(1.0, 0.5, 0.0)
    assert scale_total_sq(model, np.zeros(2)) == pytest.approx(1.0 + 0.25, rel=1e-14)


def test_effective_scale_powers():
    assert effective_scale_powers(noiseless(), 7) == (0.0, 0.0, 1.0)
    s0sq, s1sq, p = effective_scale_powers(generalized(1.0, 0.5, 3.0), 4)
    assert (s0sq, s1sq, p) == (1.0, 0.25, 3.0)
    # Coordinatewise laws aggregate the floor over coordinates and pin p=2.
    cw = resolve_noise("ballc:sigma0=1,sigma1=0.5")
    assert cw.coordinatewise
    s0sq, s1sq, p = effective_scale_powers(cw, 4)
    assert s0sq == pytest.approx(4.0)
    assert s1sq == pytest.approx(0.25)
    assert p == 2.0


def test_coordinatewise_rejects_other_growth_exponents():
    with pytest.raises(NoiseError):
        NoiseModel(law="ball", sigma0=1.0, sigma1=0.5, p=3.0, coordinatewise=True)


def test_derive_rng_reproducible_and_trajectory_split():
    a = derive_rng(42, 0).normal(size=5)
    b = derive_rng(42, 0).normal(size=5)
    c = derive_rng(42, 1).normal(size=5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_reproducible_by_seed():
    model = affine(1.0, 0.5)
    g = np.array([0.2, -0.5])
    s1 = sample(model, g, derive_rng(5, 3))
    s2 = sample(model, g, derive_rng(5, 3))
    np.testing.assert_array_equal(s1.g, s2.g)
    np.testing.assert_array_equal(s1.xi, s2.xi)
    np.testing.assert_allclose(s1.g, g + s1.xi, rtol=0, atol=0)


def test_noiseless_sample_is_exact():
    s = sample(noiseless(), np.array([1.0, 2.0]), derive_rng(0, 0))
    np.testing.assert_array_equal(s.g, np.array([1.0, 2.0]))
    assert float(np.abs(s.xi).max()) == 0.0


def test_noise_event_flags_threshold():
    model = generalized(1.0, 0.0, 0.0)
    T, delta = 10, 0.1
    cap = tail_factor_sq(T, delta) * 1.0  # M^2 * scale^2
    xi_sq = np.array([0.0, cap * 0.999, cap * 1.001])
    flags = noise_event_flags(model, xi_sq, np.zeros(3), T, delta)
    assert flags.tolist() == [True, True, False]


def test_resolver_grammar():
    m = resolve_noise("ball:1,0.5,2")
    assert (m.sigma0, m.sigma1, m.p) == (1.0, 0.5, 2.0)
    m2 = resolve_noise("ball:sigma0=1,sigma1=0.5,p=2")
    assert (m2.sigma0, m2.sigma1, m2.p) == (m.sigma0, m.sigma1, m.p)
    assert resolve_noise("noiseless").law == "none"
    assert resolve_noise("bounded:0.7").sigma0 == 0.7
    assert resolve_noise("gaussian:1,0.5").law == "gaussian"
    for bad in ("", "ball:1,2,3,4", "wat:1", "ball:sigma0=1;junk=2", "ball:junk=2"):
        with pytest.raises(NoiseError):
            resolve_noise(bad)


def test_subgaussian_is_affine_special_case():
    m = sub_gaussian(2.0)
    assert m.sigma1 == 0.0
    rng = derive_rng(1, 0)
    rep = verify_orlicz_bound(m, np.zeros(2), draws=20_000, rng=rng)
    assert rep.passed
