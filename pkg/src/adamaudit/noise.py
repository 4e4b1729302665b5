"""Gradient-noise laws with a certifiable exponential-moment budget.

Every admissible law here is centered and satisfies

    E[ exp( ||xi||^2 / (sigma0^2 + sigma1^2 * ||true_grad||**p) ) ] <= e

with ``p in [0, 4)`` — the noise magnitude may grow with the gradient.  Two
constructions keep that certifiable in closed form:

* spherical law: ``xi = scale * sqrt(U) * theta`` with ``U ~ Uniform[0,1]``
  and ``theta`` uniform on the unit sphere, so the Orlicz ratio has mean
  exactly ``e - 1``;
* Gaussian law: per-coordinate variance ``r * scale^2`` with
  ``r = min(0.2, (1 - (e-1)**(-2/d)) / 2)``, so the ratio has mean
  ``(1 - 2r)**(-d/2) <= e - 1`` and the Monte-Carlo estimator of that mean
  has finite variance (``r < 1/4``).

``sigma1 = 0`` recovers uniformly bounded (spherical) or classical
sub-Gaussian (Gaussian) noise.  The exponent convention is ``0**0 = 1``, so
``p = 0`` is exactly the additive-noise case even at a zero gradient.

A deliberate negative control, :func:`violator`, puts all mass at squared
radius ``2 * scale^2`` (ratio mean ``e^2 > e``); :func:`verify_orlicz_bound`
must reject it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoiseError",
    "NoiseModel",
    "GradientSample",
    "OrliczReport",
    "bounded",
    "sub_gaussian",
    "affine",
    "generalized",
    "gaussian_affine",
    "violator",
    "noiseless",
    "scale_total_sq",
    "effective_scale_powers",
    "sample",
    "sample_many",
    "verify_orlicz_bound",
    "tail_factor_sq",
    "noise_event_flags",
    "noise_event_indicator",
    "derive_rng",
    "resolve_noise",
]

_E = math.e


class NoiseError(Exception):
    """Invalid noise-model construction or use."""


@dataclass(frozen=True)
class NoiseModel:
    """A centered gradient-noise law.

    ``law`` selects the sampling mechanism: ``"ball"`` (spherical,
    surely-bounded ratio), ``"gaussian"`` (unbounded, closed-form ratio
    mean), ``"fixed_radius"`` (the Orlicz violator), or ``"none"``.
    ``coordinatewise=True`` switches to the experimental per-coordinate
    scaling ``sigma0^2 + sigma1^2 * grad_i^2`` (only meaningful with
    ``p = 2``).
    """

    law: str
    sigma0: float
    sigma1: float = 0.0
    p: float = 0.0
    coordinatewise: bool = False

    def __post_init__(self) -> None:
        if self.law not in ("ball", "gaussian", "fixed_radius", "none"):
            raise NoiseError(f"unknown law {self.law!r}")
        object.__setattr__(self, "sigma0", float(self.sigma0))
        object.__setattr__(self, "sigma1", float(self.sigma1))
        object.__setattr__(self, "p", float(self.p))
        if self.law == "none":
            if self.sigma0 != 0.0 or self.sigma1 != 0.0:
                raise NoiseError("the noiseless model has sigma0 = sigma1 = 0")
            return
        if not (self.sigma0 > 0.0):
            raise NoiseError(f"sigma0 must be positive, got {self.sigma0!r}")
        if self.sigma1 < 0.0:
            raise NoiseError(f"sigma1 must be >= 0, got {self.sigma1!r}")
        if not (0.0 <= self.p < 4.0):
            raise NoiseError(f"growth exponent must be in [0, 4), got {self.p!r}")
        if self.coordinatewise and self.p != 2.0:
            raise NoiseError("the coordinatewise variant is defined for p = 2 only")

    @property
    def is_noiseless(self) -> bool:
        return self.law == "none"


@dataclass(frozen=True)
class GradientSample:
    """One stochastic-gradient draw: ``g = g_bar + xi``."""

    g: np.ndarray
    g_bar: np.ndarray
    xi: np.ndarray


def bounded(sigma0: float) -> NoiseModel:
    """Spherical noise with sure bound ``||xi|| <= sigma0``."""
    return NoiseModel(law="ball", sigma0=sigma0)


def sub_gaussian(sigma0: float) -> NoiseModel:
    """Gaussian noise with gradient-independent scale."""
    return NoiseModel(law="gaussian", sigma0=sigma0)


def affine(sigma0: float, sigma1: float) -> NoiseModel:
    """Spherical noise whose squared scale grows with the squared gradient."""
    return NoiseModel(law="ball", sigma0=sigma0, sigma1=sigma1, p=2.0)


def generalized(sigma0: float, sigma1: float, p: float) -> NoiseModel:
    """Spherical noise with scale ``sigma0^2 + sigma1^2 * ||grad||**p``."""
    return NoiseModel(law="ball", sigma0=sigma0, sigma1=sigma1, p=p)


def gaussian_affine(sigma0: float, sigma1: float, p: float = 2.0) -> NoiseModel:
    """Gaussian-law counterpart of :func:`generalized` (unbounded draws)."""
    return NoiseModel(law="gaussian", sigma0=sigma0, sigma1=sigma1, p=p)


def violator(sigma0: float, sigma1: float = 0.0, p: float = 0.0) -> NoiseModel:
    """Negative control: all mass at squared radius twice the scale."""
    return NoiseModel(law="fixed_radius", sigma0=sigma0, sigma1=sigma1, p=p)


def noiseless() -> NoiseModel:
    return NoiseModel(law="none", sigma0=0.0)


def _coord_scale_sq(model: NoiseModel, g_bar: np.ndarray) -> np.ndarray:
    return model.sigma0 ** 2 + model.sigma1 ** 2 * (g_bar * g_bar)


def scale_total_sq(model: NoiseModel, g_bar: np.ndarray) -> float:
    """Aggregate squared noise scale at a point with true gradient ``g_bar``.

    Standard models: ``sigma0^2 + sigma1^2 * ||g_bar||**p``; the
    coordinatewise variant sums its per-coordinate scales.  The noiseless
    model has scale zero.
    """
    g_bar = np.asarray(g_bar, dtype=np.float64)
    if model.is_noiseless:
        return 0.0
    if model.coordinatewise:
        return float(np.sum(_coord_scale_sq(model, g_bar)))
    norm = float(np.linalg.norm(g_bar))
    return model.sigma0 ** 2 + model.sigma1 ** 2 * norm ** model.p


def effective_scale_powers(model: NoiseModel, dim: int) -> tuple:
    """``(sigma0_sq_eff, sigma1_sq, p_eff)`` of the aggregate noise scale.

    Standard models pass through their parameters; the coordinatewise
    variant carries a dimension factor on the additive part and growth
    exponent 2; the noiseless model contributes zero scale (the returned
    exponent is arbitrary, by convention 1).
    """
    if model.is_noiseless:
        return 0.0, 0.0, 1.0
    if model.coordinatewise:
        return int(dim) * model.sigma0 ** 2, model.sigma1 ** 2, 2.0
    return model.sigma0 ** 2, model.sigma1 ** 2, model.p


def _gaussian_ratio(d: int) -> float:
    """Per-coordinate variance fraction keeping the Orlicz mean <= e - 1."""
    return min(0.2, (1.0 - (_E - 1.0) ** (-2.0 / d)) / 2.0)


def sample_many(model: NoiseModel, g_bar: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` independent noise vectors at a fixed point, shape ``(n, d)``.

    The draw order per law is fixed (radii before directions) so results
    are reproducible for a given generator state.
    """
    g_bar = np.asarray(g_bar, dtype=np.float64)
    d = g_bar.shape[-1]
    n = int(n)
    if model.is_noiseless:
        return np.zeros((n, d))

    if model.coordinatewise:
        scale = np.sqrt(_coord_scale_sq(model, g_bar))  # (d,)
        if model.law == "ball":
            u = rng.uniform(size=(n, d))
            signs = np.where(rng.uniform(size=(n, d)) < 0.5, -1.0, 1.0)
            return scale * np.sqrt(u) * signs
        if model.law == "gaussian":
            r = _gaussian_ratio(1)
            return math.sqrt(r) * scale * rng.standard_normal((n, d))
        raise NoiseError(f"coordinatewise variant not defined for law {model.law!r}")

    scale = math.sqrt(scale_total_sq(model, g_bar))
    if model.law == "gaussian":
        r = _gaussian_ratio(d)
        return scale * math.sqrt(r) * rng.standard_normal((n, d))

    if model.law == "ball":
        radius = scale * np.sqrt(rng.uniform(size=n))
    else:  # fixed_radius violator
        radius = np.full(n, scale * math.sqrt(2.0))
    theta = rng.standard_normal((n, d))
    norms = np.linalg.norm(theta, axis=1, keepdims=True)
    # A zero normal vector has probability zero; guard anyway.
    norms[norms == 0.0] = 1.0
    return radius[:, None] * (theta / norms)


def sample(model: NoiseModel, g_bar: np.ndarray, rng: np.random.Generator) -> GradientSample:
    """One stochastic gradient ``g = g_bar + xi``."""
    g_bar = np.asarray(g_bar, dtype=np.float64)
    xi = sample_many(model, g_bar, 1, rng)[0]
    return GradientSample(g=g_bar + xi, g_bar=g_bar, xi=xi)


@dataclass(frozen=True)
class OrliczReport:
    """Monte-Carlo estimate of the exponential-moment budget."""

    mean: float       # estimated Orlicz ratio mean (worst coordinate for the variant)
    se: float         # standard error of that mean
    ci_upper: float   # one-sided upper confidence bound
    confidence: float
    draws: int
    passed: bool      # ci_upper <= e


def verify_orlicz_bound(
    model: NoiseModel,
    g_bar: np.ndarray,
    draws: int,
    rng: np.random.Generator,
    confidence: float = 0.99,
) -> OrliczReport:
    """Check the exponential-moment condition by Monte Carlo at one point.

    Passes iff the one-sided upper confidence bound on
    ``E[exp(||xi||^2 / scale^2)]`` is at most ``e`` (per coordinate, and
    worst-case over coordinates, for the coordinatewise variant).  Refuses
    the noiseless model, whose ratio is 0/0 rather than a vacuous pass.
    """
    from scipy.stats import norm as _norm

    if model.is_noiseless:
        raise NoiseError("the Orlicz ratio is undefined for the noiseless model")
    g_bar = np.asarray(g_bar, dtype=np.float64)
    draws = int(draws)
    if draws < 2:
        raise NoiseError("need at least 2 draws")
    xi = sample_many(model, g_bar, draws, rng)
    if model.coordinatewise:
        ratios = np.exp(xi * xi / _coord_scale_sq(model, g_bar))  # (n, d)
        means = ratios.mean(axis=0)
        ses = ratios.std(axis=0, ddof=1) / math.sqrt(draws)
        worst = int(np.argmax(means + ses))
        mean, se = float(means[worst]), float(ses[worst])
    else:
        ratios = np.exp(np.sum(xi * xi, axis=1) / scale_total_sq(model, g_bar))
        mean = float(ratios.mean())
        se = float(ratios.std(ddof=1)) / math.sqrt(draws)
    z = float(_norm.ppf(confidence))
    upper = mean + z * se
    return OrliczReport(
        mean=mean,
        se=se,
        ci_upper=upper,
        confidence=confidence,
        draws=draws,
        passed=bool(upper <= _E),
    )


def tail_factor_sq(T: int, delta: float) -> float:
    """Squared high-probability tail factor ``log(e * T / delta)``."""
    T = int(T)
    delta = float(delta)
    if T < 1 or not (0.0 < delta < 1.0):
        raise NoiseError(f"need T >= 1 and delta in (0, 1), got T={T}, delta={delta}")
    return 1.0 + math.log(T / delta)


def noise_event_flags(
    model: NoiseModel,
    xi_sq: np.ndarray,
    g_bar_norm: np.ndarray,
    T: int,
    delta: float,
    dim: int = 1,
) -> np.ndarray:
    """Per-step indicator of the high-probability noise event.

    Step ``s`` holds iff ``||xi_s||^2 <= tail^2 * scale_s^2`` where the
    scale uses the step's true gradient.  The coordinatewise variant's
    aggregate scale is ``dim * sigma0^2 + sigma1^2 * ||g_bar||^2``, hence
    the ``dim`` argument (ignored otherwise).
    """
    msq = tail_factor_sq(T, delta)
    xi_sq = np.asarray(xi_sq, dtype=np.float64)
    g_bar_norm = np.asarray(g_bar_norm, dtype=np.float64)
    if model.is_noiseless:
        scale = np.zeros_like(xi_sq)
    elif model.coordinatewise:
        scale = int(dim) * model.sigma0 ** 2 + model.sigma1 ** 2 * g_bar_norm ** 2
    else:
        scale = model.sigma0 ** 2 + model.sigma1 ** 2 * g_bar_norm ** model.p
    return xi_sq <= msq * scale


def noise_event_indicator(
    model: NoiseModel,
    samples: "list[GradientSample]",
    T: int,
    delta: float,
) -> tuple[np.ndarray, bool]:
    """Event flags for a sampled trajectory; returns ``(flags, all_hold)``."""
    msq = tail_factor_sq(T, delta)
    flags = np.empty(len(samples), dtype=bool)
    for i, smp in enumerate(samples):
        flags[i] = float(np.dot(smp.xi, smp.xi)) <= msq * scale_total_sq(model, smp.g_bar)
    return flags, bool(np.all(flags))


def derive_rng(root_seed: int, trajectory_index: int) -> np.random.Generator:
    """Independent stream for one trajectory of a batch."""
    return np.random.default_rng(np.random.SeedSequence((int(root_seed), int(trajectory_index))))


def resolve_noise(spec: str) -> NoiseModel:
    """Build a noise model from a compact description string.

    Formats::

        noiseless
        ball:sigma0=1,sigma1=0.5,p=2      spherical law
        ball:1,0.5,2                      same, positional (sigma0, sigma1, p)
        bounded:sigma0=1
        gaussian:sigma0=1,sigma1=0.5,p=2
        violator:sigma0=1
        ballc:sigma0=1,sigma1=0.5         coordinatewise variant (p = 2)
    """
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "noiseless":
        return noiseless()
    kv: dict[str, float] = {}
    positional = ("sigma0", "sigma1", "p")
    for i, part in enumerate(part for part in rest.split(",") if part.strip()):
        key, eq, val = part.partition("=")
        try:
            if eq:
                kv[key.strip()] = float(val)
            elif i < len(positional):
                kv[positional[i]] = float(part)
            else:
                raise NoiseError(f"too many positional values in {spec!r}")
        except ValueError:
            raise NoiseError(f"cannot parse {part!r} in noise spec {spec!r}") from None
    unknown = set(kv) - set(positional)
    if unknown:
        raise NoiseError(f"unknown noise parameters {sorted(unknown)} in {spec!r}")
    s0 = kv.get("sigma0", 1.0)
    s1 = kv.get("sigma1", 0.0)
    p = kv.get("p", 2.0 if s1 > 0 else 0.0)
    if kind == "ball":
        return generalized(s0, s1, p)
    if kind == "bounded":
        return bounded(s0)
    if kind == "gaussian":
        return gaussian_affine(s0, s1, p)
    if kind == "violator":
        return violator(s0, s1, p)
    if kind == "ballc":
        return NoiseModel(law="ball", sigma0=s0, sigma1=s1, p=2.0, coordinatewise=True)
    raise NoiseError(f"unknown noise kind {kind!r} in {spec!r}")
