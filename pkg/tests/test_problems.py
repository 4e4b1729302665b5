"""Objective-catalog tests: gradient checks, frozen values, certification."""

import numpy as np
import pytest

from adamaudit.problems import (
    GeneralizedSmooth,
    LipschitzSmooth,
    ProblemError,
    certify_generalized,
    check_gradient,
    make_double_exponential_1d,
    make_quadratic,
    make_quartic,
    make_rational_1d,
    quadratic_spectrum_for_dim,
    resolve_objective,
)
from oracles import quadratic_value_grad_reference


@pytest.mark.parametrize(
    "spec",
    [
        "quadratic:1,10:d=4",
        "quartic:2",
        "rational:num=0,0,1;den=1,0,1;lo=-2;hi=2",
        "doubleexp:a=2;b=3;r=2",
    ],
)
def test_gradients_match_finite_differences(spec):
    obj = resolve_objective(spec)
    assert check_gradient(obj, n_points=60, seed=3) < 1e-6


def test_quadratic_matches_reference_and_identity():
    spectrum = (1.0, 2.5, 10.0)
    obj = make_quadratic(spectrum)
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.normal(0.0, 3.0, 3)
        f_ref, g_ref = quadratic_value_grad_reference(spectrum, x)
        assert obj.value(x) == pytest.approx(f_ref, rel=1e-14)
        np.testing.assert_allclose(obj.grad(x), g_ref, rtol=1e-14)
    # 1-d with eigenvalue L: |f'(x)|^2 == 2 L f(x) exactly.
    one = make_quadratic((4.0,))
    for x in (0.1, -2.0, 37.5):
        xv = np.array([x])
        g = one.grad(xv)
        assert float(g @ g) == pytest.approx(2.0 * 4.0 * one.value(xv), rel=1e-15)


def test_quadratic_frozen_values_d10():
    obj = resolve_objective("quadratic:1,10:d=10")
    x = np.ones(10)
    lam = quadratic_spectrum_for_dim(1.0, 10.0, 10)
    assert lam[0] == 1.0 and lam[-1] == 10.0
    assert obj.value(x) == pytest.approx(0.5 * lam.sum(), rel=1e-15)  # 27.5
    g = obj.grad(x)
    assert float(g @ g) == pytest.approx(float((lam**2).sum()), rel=1e-15)  # 385
    assert isinstance(obj.smoothness, LipschitzSmooth)
    assert obj.smoothness.L == 10.0
    assert obj.f_star == 0.0


def test_quartic_certificate_shape():
    obj = make_quartic(1)
    cert = obj.smoothness
    assert isinstance(cert, GeneralizedSmooth)
    assert cert.L0 == 1.0 and cert.Lq == 7.0
    assert cert.q == pytest.approx(2.0 / 3.0)
    # Value/gradient pair at a few points: f = x^4, f' = 4x^3.
    for x in (0.0, 0.3, -2.0, 5.0):
        xv = np.array([x])
        assert obj.value(xv) == pytest.approx(x**4, rel=1e-15, abs=1e-300)
        assert obj.grad(xv)[0] == pytest.approx(4.0 * x**3, rel=1e-15, abs=1e-300)
    # Spot-check the curvature bound |f''| <= L0 + Lq*|f'|^q on a grid,
    # with f'' = 12 x^2 taken from the objective's own gradient by a
    # central difference.
    xs = np.linspace(-cert.domain_radius, cert.domain_radius, 2001)
    h = 1e-5
    fpp = np.array(
        [(obj.grad(np.array([x + h]))[0] - obj.grad(np.array([x - h]))[0]) / (2 * h) for x in xs]
    )
    fp = np.abs(4.0 * xs**3)
    assert np.all(np.abs(fpp) <= cert.L0 + cert.Lq * fp**cert.q + 1e-6)


def test_certify_quartic_recovers_hand_constants():
    obj = resolve_objective("quartic:1")
    res = certify_generalized(obj, q=2.0 / 3.0, pair_budget=200_000, seed=0)
    assert res.ok
    assert res.L0 == 1.0
    # Doubling search lands within one doubling of the hand certificate Lq=7.
    assert 7.0 <= res.Lq <= 14.0
    assert res.max_ratio <= 1.0
    assert res.pairs_tested > 0


def test_certify_quadratic_at_q_zero():
    obj = resolve_objective("quadratic:1,10:d=3")
    res = certify_generalized(obj, q=0.0, pair_budget=50_000, seed=1)
    assert res.ok
    # q=0 collapses to plain Lipschitz smoothness: L0 + Lq must cover L=10.
    assert res.L0 + res.Lq >= 10.0 * (1.0 - 1e-9)


def test_certify_budget_exhaustion_reports_failure():
    obj = resolve_objective("quartic:1")
    res = certify_generalized(obj, q=2.0 / 3.0, pair_budget=3, seed=0)
    assert not res.ok
    assert "budget" in res.message


def test_rational_pole_rejected():
    with pytest.raises(ProblemError):
        make_rational_1d((1.0,), (0.0, 1.0), -1.0, 1.0)


def test_double_exponential_needs_growing_bases():
    with pytest.raises(ProblemError):
        make_double_exponential_1d(1.0, 2.0, 3.0)
    obj = make_double_exponential_1d(2.0, 3.0, 2.0)
    assert obj.dim == 1
    assert check_gradient(obj, n_points=40, seed=0) < 1e-6


@pytest.mark.parametrize(
    "bad",
    ["", "quadratic:", "mystery:1", "quadratic:1,10:d=0", "quartic:0", "quadratic:1,10:k=3"],
)
def test_resolver_rejects_malformed_specs(bad):
    with pytest.raises(ProblemError):
        resolve_objective(bad)


def test_spectrum_for_dim_is_monotone_inclusive():
    lam = quadratic_spectrum_for_dim(0.5, 8.0, 6)
    assert lam.shape == (6,)
    assert lam[0] == 0.5 and lam[-1] == 8.0
    assert np.all(np.diff(lam) > 0)
    # One dimension keeps the top curvature.
    assert quadratic_spectrum_for_dim(0.5, 8.0, 1).tolist() == [8.0]
