"""Standalone verifiers for the scalar sequence bounds and the tail bound.

These are the two reusable analytic tools behind the trajectory checks:

* logarithmic caps on sums of (squared, possibly momentum-averaged)
  increments over their own geometric accumulator — verified here on
  randomized scalar instances, independent of any optimizer run;
* the exponential-moment martingale tail bound — verified by Monte Carlo
  with increment laws whose Orlicz moment is exactly at the admissible
  boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.stats import binom

__all__ = [
    "SequenceReport",
    "AzumaReport",
    "check_sequence_lemmas",
    "geometric_tail_sum",
    "azuma_mc",
]


def _geometric_accumulate(alpha: np.ndarray, beta: float) -> np.ndarray:
    """``theta_s = beta * theta_{s-1} + alpha_s`` with ``theta_0 = 0``."""
    return lfilter([1.0], [1.0, -beta], alpha)


def geometric_tail_sum(alpha, beta2: float, eps: float) -> tuple:
    """Evaluate the nonnegative-increment sum bound on one instance.

    For ``alpha_j >= 0``, ``theta`` its geometric accumulator, and
    ``eps > 0``, the running sum of ``alpha_j / (eps + theta_j)`` is capped
    by ``log(1 + theta_t / eps) - t log(beta2)``.  Returns the final
    ``(lhs, rhs, min_relative_margin_over_prefixes)``.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or alpha.size == 0:
        raise ValueError("alpha must be a nonempty 1-d array")
    if np.any(alpha < 0.0):
        raise ValueError("this bound needs nonnegative increments")
    if not (0.0 < beta2 <= 1.0):
        raise ValueError(f"decay must be in (0, 1], got {beta2!r}")
    if not (eps > 0.0):
        raise ValueError(f"offset must be positive, got {eps!r}")
    theta = _geometric_accumulate(alpha, beta2)
    lhs = np.cumsum(alpha / (eps + theta))
    steps = np.arange(1, alpha.size + 1)
    rhs = np.log1p(theta / eps) - steps * math.log(beta2)
    scale = np.maximum(1e-12, np.maximum(np.abs(lhs), np.abs(rhs)))
    margin = float(np.min((rhs - lhs) / scale))
    return float(lhs[-1]), float(rhs[-1]), margin


def _momentum_sum_margins(
    alpha: np.ndarray, beta1: float, beta2: float, eps: float
) -> tuple:
    """Min relative margins of the two signed-increment (momentum) bounds."""
    t = alpha.size
    theta = _geometric_accumulate(alpha * alpha, beta2)
    zeta = _geometric_accumulate(alpha, beta1)
    steps = np.arange(1, t + 1)
    log_part = np.log1p(theta / eps) - steps * math.log(beta2)
    denom = eps + theta

    coeff_raw = 1.0 / ((1.0 - beta1) * (1.0 - beta1 / beta2))
    lhs_raw = np.cumsum(zeta * zeta / denom)
    rhs_raw = coeff_raw * log_part
    scale = np.maximum(1e-12, np.maximum(np.abs(lhs_raw), np.abs(rhs_raw)))
    margin_raw = float(np.min((rhs_raw - lhs_raw) / scale))

    if beta1 == 0.0:
        debias = np.ones(t)
    else:
        debias = 1.0 - np.cumprod(np.full(t, beta1))
    gamma = zeta / debias
    coeff_avg = 1.0 / ((1.0 - beta1) ** 2 * (1.0 - beta1 / beta2))
    lhs_avg = np.cumsum(gamma * gamma / denom)
    rhs_avg = coeff_avg * log_part
    scale = np.maximum(1e-12, np.maximum(np.abs(lhs_avg), np.abs(rhs_avg)))
    margin_avg = float(np.min((rhs_avg - lhs_avg) / scale))
    return margin_raw, margin_avg


@dataclass(frozen=True)
class SequenceReport:
    """Randomized-instance verification of the scalar sum bounds."""

    n_instances: int
    max_len: int
    tol: float
    worst_margins: dict        # bound name -> most adverse margin seen
    n_failed: int
    failures: tuple            # (instance index, bound name, margin) triples
    passed: bool


def check_sequence_lemmas(
    n_instances: int = 10_000,
    seed: int = 0,
    max_len: int = 200,
    tol: float = 1e-10,
) -> SequenceReport:
    """Fuzz the three scalar sum bounds on randomized instances.

    Each instance draws a length, decay pair (including the boundary
    ``beta2 = 1`` and ``beta1 = 0``), offset, and a signed increment
    sequence from a mixed family (uniform, normal, heavy-tailed, sparse,
    constant); the nonnegative-increment bound runs on the magnitudes, the
    two momentum bounds on the signed values, and every prefix must hold
    within ``tol`` relative slack.
    """
    rng = np.random.default_rng(seed)
    worst = {
        "nonneg_increment_sum": math.inf,
        "momentum_sum_raw": math.inf,
        "momentum_sum_debias": math.inf,
    }
    failures = []
    for k in range(int(n_instances)):
        t = int(rng.integers(1, max_len + 1))
        style = int(rng.integers(0, 6))
        if style == 0:
            alpha = rng.uniform(-1.0, 1.0, t) * 10.0 ** rng.uniform(-4, 4)
        elif style == 1:
            alpha = rng.normal(0.0, 10.0 ** rng.uniform(-3, 3), t)
        elif style == 2:
            alpha = rng.standard_cauchy(t)          # heavy tails
        elif style == 3:
            alpha = rng.normal(0.0, 1.0, t)
            alpha[rng.random(t) < 0.7] = 0.0        # mostly zero
        elif style == 4:
            alpha = np.full(t, rng.uniform(-5.0, 5.0))
        else:
            alpha = rng.exponential(10.0 ** rng.uniform(-2, 2), t) * rng.choice(
                [-1.0, 1.0], t
            )
        if rng.random() < 0.15:
            beta2 = 1.0
        else:
            beta2 = rng.uniform(0.3, 0.999999)
        if rng.random() < 0.2:
            beta1 = 0.0
        else:
            beta1 = beta2 * rng.uniform(0.0, 0.999)
        eps = 10.0 ** rng.uniform(-8, 3)

        _, _, m1 = geometric_tail_sum(np.abs(alpha), beta2, eps)
        m2, m3 = _momentum_sum_margins(alpha, beta1, beta2, eps)
        for name, m in (
            ("nonneg_increment_sum", m1),
            ("momentum_sum_raw", m2),
            ("momentum_sum_debias", m3),
        ):
            worst[name] = min(worst[name], m)
            if m < -tol:
                failures.append((k, name, m))
    return SequenceReport(
        n_instances=int(n_instances),
        max_len=int(max_len),
        tol=float(tol),
        worst_margins=worst,
        n_failed=len(failures),
        failures=tuple(failures[:50]),
        passed=not failures,
    )


@dataclass(frozen=True)
class AzumaReport:
    """Monte Carlo gate on the exponential-moment martingale tail bound."""

    kind: str
    T: int
    trials: int
    delta: float
    lambdas: tuple
    thresholds: tuple
    failures: tuple            # per lambda: count of sums above threshold
    rates: tuple
    p_values: tuple            # P(Bin(trials, delta) >= failures)
    passed: bool


def azuma_mc(
    kind: str,
    T: int,
    trials: int,
    delta: float,
    lambdas=None,
    seed: int = 0,
) -> AzumaReport:
    """Empirically gate ``P(sum Z > log(1/delta)/lam + 0.75 lam T) <= delta``.

    Increment laws sit exactly at the admissible exponential-moment
    boundary (``E exp(Z^2) = e``): ``"coin"`` draws ``+-1``; ``"gaussian"``
    draws centered normals with variance ``(1 - e^-2)/2``.  For each
    ``lam`` (default: the optimizer ``sqrt(log(1/delta)/(0.75 T))`` and
    half/double it) the failure frequency must be statistically compatible
    with ``<= delta`` at the 99% level.
    """
    T = int(T)
    trials = int(trials)
    if T < 1 or trials < 1:
        raise ValueError("need at least one increment and one trial")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"failure level must be in (0, 1), got {delta!r}")
    if kind not in ("coin", "gaussian"):
        raise ValueError(f"unknown increment law {kind!r}")
    lam_star = math.sqrt(math.log(1.0 / delta) / (0.75 * T))
    if lambdas is None:
        lambdas = (0.5 * lam_star, lam_star, 2.0 * lam_star)
    lambdas = tuple(float(l) for l in lambdas)
    if any(l <= 0.0 for l in lambdas):
        raise ValueError("lambda grid must be positive")

    rng = np.random.default_rng(seed)
    sums = np.zeros(trials)
    chunk = max(1, 2_000_000 // T)
    gauss_sd = math.sqrt((1.0 - math.exp(-2.0)) / 2.0)
    for lo in range(0, trials, chunk):
        hi = min(trials, lo + chunk)
        if kind == "coin":
            z = rng.integers(0, 2, size=(hi - lo, T)).astype(np.float64) * 2.0 - 1.0
        else:
            z = rng.normal(0.0, gauss_sd, size=(hi - lo, T))
        sums[lo:hi] = z.sum(axis=1)

    thresholds = tuple(math.log(1.0 / delta) / l + 0.75 * l * T for l in lambdas)
    failures = tuple(int(np.sum(sums > th)) for th in thresholds)
    rates = tuple(k / trials for k in failures)
    p_values = tuple(
        float(binom.sf(k - 1, trials, delta)) if k > 0 else 1.0 for k in failures
    )
    passed = all(p >= 0.01 for p in p_values)
    return AzumaReport(
        kind=kind,
        T=T,
        trials=trials,
        delta=float(delta),
        lambdas=lambdas,
        thresholds=thresholds,
        failures=failures,
        rates=rates,
        p_values=p_values,
        passed=passed,
    )
