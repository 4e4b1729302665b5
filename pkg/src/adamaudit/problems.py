"""Test objectives with machine-checkable smoothness certificates.

Every objective here evaluates value and gradient in one call, accepts
batched inputs (shape ``(..., d)`` -> value ``(...)``, gradient ``(..., d)``),
and carries a lower bound ``f_star`` plus, where known, a smoothness
certificate:

* :class:`LipschitzSmooth` — a global gradient-Lipschitz constant ``L``;
* :class:`GeneralizedSmooth` — constants ``(L0, Lq, q)`` such that

      ||grad f(y) - grad f(x)|| <= (L0 + Lq * ||grad f(x)||**q) * ||x - y||

  for ``||x - y|| <= 1 / Lq`` inside the stated domain (sup-norm box).

Certificates are claims; :func:`certify_generalized` probes a claim's form
empirically by sampling admissible pairs and doubling ``(L0, Lq)`` on a grid
until no violation is seen or the pair budget runs out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "ProblemError",
    "CertificationError",
    "LipschitzSmooth",
    "GeneralizedSmooth",
    "Objective",
    "make_quadratic",
    "make_quartic",
    "make_rational_1d",
    "make_double_exponential_1d",
    "quadratic_spectrum_for_dim",
    "certify_generalized",
    "CertificationResult",
    "check_gradient",
    "resolve_objective",
]


class ProblemError(Exception):
    """Invalid objective construction (bad spectrum, pole in domain, ...)."""


class CertificationError(ProblemError):
    """Raised when a certification request itself is malformed."""


@dataclass(frozen=True)
class LipschitzSmooth:
    """Global gradient-Lipschitz certificate."""

    L: float
    domain_radius: float = math.inf  # sup-norm box half-width the claim covers

    def __post_init__(self) -> None:
        if not (self.L > 0.0 and math.isfinite(self.L)):
            raise ProblemError(f"Lipschitz constant must be positive, got {self.L!r}")


@dataclass(frozen=True)
class GeneralizedSmooth:
    """Gradient-modulated smoothness certificate ``(L0, Lq, q)``.

    Valid for pairs at distance at most ``1/Lq`` inside the sup-norm box of
    half-width ``domain_radius``.  ``q`` must lie in ``[0, 2)``.
    """

    L0: float
    Lq: float
    q: float
    domain_radius: float = math.inf

    def __post_init__(self) -> None:
        if not (self.L0 > 0.0 and self.Lq > 0.0):
            raise ProblemError(f"certificate constants must be positive, got ({self.L0!r}, {self.Lq!r})")
        if not (0.0 <= self.q < 2.0):
            raise ProblemError(f"exponent must be in [0, 2), got {self.q!r}")


@dataclass(frozen=True)
class Objective:
    """A differentiable objective with batched evaluation.

    ``fn(x)`` takes an array of shape ``(..., dim)`` and returns the pair
    ``(values, gradients)`` of shapes ``(...)`` and ``(..., dim)``.
    ``f_star`` is a certified-or-empirical lower bound on the value
    (``f_star_empirical`` records which).
    """

    name: str
    dim: int
    f_star: float
    fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    smoothness: LipschitzSmooth | GeneralizedSmooth | None = None
    f_star_empirical: bool = False

    def value_grad(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ProblemError(f"{self.name}: expected trailing dimension {self.dim}, got {x.shape}")
        return self.fn(x)

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.value_grad(x)[0]

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.value_grad(x)[1]

    def domain_radius(self) -> float:
        if self.smoothness is None:
            return math.inf
        return self.smoothness.domain_radius

    def in_domain(self, x: np.ndarray) -> bool:
        r = self.domain_radius()
        if math.isinf(r):
            return True
        return bool(np.max(np.abs(x)) <= r)


def make_quadratic(spectrum) -> Objective:
    """Diagonal quadratic ``f(x) = 0.5 * sum(lam_i * x_i**2)``.

    The curvature spectrum must be strictly positive; the global
    gradient-Lipschitz constant is ``max(spectrum)`` and the minimum value
    is exactly zero.
    """
    lam = np.array(spectrum, dtype=np.float64).reshape(-1)
    if lam.size == 0 or not np.all(lam > 0.0) or not np.all(np.isfinite(lam)):
        raise ProblemError(f"spectrum must be positive and finite, got {spectrum!r}")

    def fn(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        grad = lam * x
        return 0.5 * np.sum(x * grad, axis=-1), grad

    label = ",".join(repr(float(v)) for v in lam)
    return Objective(
        name=f"quadratic:{label}",
        dim=lam.size,
        f_star=0.0,
        fn=fn,
        smoothness=LipschitzSmooth(L=float(np.max(lam))),
    )


def quadratic_spectrum_for_dim(lo: float, hi: float, dim: int) -> np.ndarray:
    """Curvature spectrum spanning ``[lo, hi]`` in ``dim`` coordinates.

    One dimension keeps the top curvature ``hi`` (a single eigenvalue cannot
    span a range); otherwise the spectrum is evenly spaced.
    """
    if dim == 1:
        return np.array([float(hi)])
    return np.linspace(float(lo), float(hi), int(dim))


def make_quartic(dim: int) -> Objective:
    """Separable quartic ``f(x) = sum(x_i**4)`` with no global Lipschitz gradient.

    Carries the gradient-modulated certificate ``(L0, Lq, q) = (1, 7, 2/3)``
    on the box ``||x||_inf <= 10``: for ``||x - y|| <= 1/7`` the needed
    coordinate bound reduces to ``12*(a + 1/7)**2 <= 1 + 7*4**(2/3)*a**2``
    with ``a = ||x||_inf``, whose discriminant is negative, so it holds for
    every ``a``.
    """
    dim = int(dim)
    if dim < 1:
        raise ProblemError(f"dimension must be >= 1, got {dim}")

    def fn(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x2 = x * x
        return np.sum(x2 * x2, axis=-1), 4.0 * x2 * x

    return Objective(
        name=f"quartic:{dim}",
        dim=dim,
        f_star=0.0,
        fn=fn,
        smoothness=GeneralizedSmooth(L0=1.0, Lq=7.0, q=2.0 / 3.0, domain_radius=10.0),
    )


def make_rational_1d(
    num_coeffs,
    den_coeffs,
    lo: float,
    hi: float,
    f_star_grid: int = 8192,
) -> Objective:
    """One-dimensional rational objective ``f(x) = P(x) / Q(x)`` on ``[lo, hi]``.

    Coefficients are in ascending order (``numpy.polynomial`` convention).
    Construction fails if ``Q`` has a real root inside the (slightly padded)
    domain.  The lower bound is empirical: the minimum over a dense grid
    minus a small safety margin, flagged as such on the objective.
    """
    from numpy.polynomial import Polynomial

    P = Polynomial(np.array(num_coeffs, dtype=np.float64))
    Q = Polynomial(np.array(den_coeffs, dtype=np.float64))
    lo = float(lo)
    hi = float(hi)
    if not lo < hi:
        raise ProblemError(f"empty domain [{lo}, {hi}]")
    pad = 1e-6 * (hi - lo)
    for root in Q.roots():
        if abs(root.imag) < 1e-9 and lo - pad <= root.real <= hi + pad:
            raise ProblemError(f"denominator has a root at {root.real!r} inside [{lo}, {hi}]")
    dP = P.deriv()
    dQ = Q.deriv()

    def fn(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = x[..., 0]
        q = Q(t)
        val = P(t) / q
        grad = (dP(t) * q - P(t) * dQ(t)) / (q * q)
        return val, grad[..., None]

    grid = np.linspace(lo, hi, int(f_star_grid))[:, None]
    vals = fn(grid)[0]
    fmin = float(np.min(vals))
    margin = 1e-3 * (1.0 + abs(fmin)) + 1e-2 * (float(np.max(vals)) - fmin) / f_star_grid
    return Objective(
        name=f"rational:[{lo},{hi}]",
        dim=1,
        f_star=fmin - margin,
        fn=fn,
        smoothness=None,
        f_star_empirical=True,
    )


def make_double_exponential_1d(a: float, b: float, radius: float) -> Objective:
    """Doubly exponential growth ``f(x) = a**(b**x)`` on ``|x| <= radius``.

    Requires ``a > 1`` and ``b > 1``; then ``f`` decreases toward 1 as
    ``x -> -inf``, so ``f_star = 1`` is a valid (unattained) lower bound.
    The gradient is ``ln(a) * ln(b) * b**x * f(x)``.  No closed-form
    smoothness certificate is attached; fitting one with an exponent in
    ``(1, 2)`` is exactly what :func:`certify_generalized` is for.
    """
    a = float(a)
    b = float(b)
    radius = float(radius)
    if not (a > 1.0 and b > 1.0 and radius > 0.0):
        raise ProblemError(f"need a > 1, b > 1, radius > 0, got {(a, b, radius)!r}")
    la = math.log(a)
    lb = math.log(b)

    def fn(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = x[..., 0]
        inner = np.exp(t * lb)          # b**x
        val = np.exp(la * inner)        # a**(b**x)
        grad = la * lb * inner * val
        return val, grad[..., None]

    return Objective(
        name=f"doubleexp:a={a},b={b},r={radius}",
        dim=1,
        f_star=1.0,
        fn=fn,
        smoothness=None,
    )


@dataclass(frozen=True)
class CertificationResult:
    """Outcome of an empirical smoothness certification."""

    ok: bool
    L0: float
    Lq: float
    q: float
    max_ratio: float        # worst observed ratio for the reported pair (<= 1 iff ok)
    pairs_tested: int
    levels_tried: int
    domain_radius: float
    message: str = ""


def _sample_pair(
    rng: np.random.Generator, dim: int, radius: float, gap_cap: float
) -> tuple[np.ndarray, np.ndarray]:
    x = rng.uniform(-radius, radius, size=dim)
    # Mix linear and log-uniform gap lengths so both macro and micro scales
    # of the claim get probed.
    if rng.uniform() < 0.5:
        length = gap_cap * rng.uniform(1e-3, 1.0)
    else:
        length = gap_cap * 10.0 ** (-6.0 * rng.uniform())
    direction = rng.standard_normal(dim)
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        direction = np.ones(dim)
        norm = math.sqrt(dim)
    direction /= norm
    for _ in range(8):
        y = x + length * direction
        if np.max(np.abs(y)) <= radius:
            return x, y
        direction = -direction if np.max(np.abs(x - length * direction)) <= radius else rng.standard_normal(dim)
        n = float(np.linalg.norm(direction))
        direction = direction / n if n > 0 else direction
    return x, np.clip(x + length * direction, -radius, radius)


def certify_generalized(
    obj: Objective,
    q: float,
    pair_budget: int,
    seed: int,
    domain_radius: float | None = None,
    pairs_per_candidate: int = 400,
) -> CertificationResult:
    """Search the doubling grid for gradient-modulated smoothness constants.

    Candidates ``(L0, Lq) = (2**a, 2**b)`` are tried level by level
    (``a + b = k`` for ``k = 0, 1, 2, ...``, smaller ``L0`` first).  Each
    candidate gets a fresh batch of admissible pairs — fresh because the
    pair constraint ``||x - y|| <= 1/Lq`` itself depends on the candidate —
    and passes if no sampled pair violates the claimed inequality.  The
    first passing candidate is returned together with its worst observed
    ratio; if the pair budget is exhausted first, a failure report carries
    the least-violating candidate seen.
    """
    if not (0.0 <= q < 2.0):
        raise CertificationError(f"exponent must be in [0, 2), got {q!r}")
    if pair_budget < 1 or pairs_per_candidate < 1:
        raise CertificationError("pair budget and batch size must be positive")
    radius = domain_radius if domain_radius is not None else obj.domain_radius()
    if math.isinf(radius):
        radius = 10.0
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xCE27)))

    spent = 0
    best = (math.inf, 1.0, 1.0)  # (ratio, L0, Lq) of the least-violating failure
    level = 0
    while True:
        for a in range(level + 1):
            L0 = float(2 ** a)
            Lq = float(2 ** (level - a))
            n = min(pairs_per_candidate, pair_budget - spent)
            if n < pairs_per_candidate:
                return CertificationResult(
                    ok=False,
                    L0=best[1],
                    Lq=best[2],
                    q=q,
                    max_ratio=best[0],
                    pairs_tested=spent,
                    levels_tried=level + 1,
                    domain_radius=radius,
                    message=(
                        f"pair budget {pair_budget} exhausted at level {level}; "
                        f"least-violating candidate (L0={best[1]}, Lq={best[2]}) "
                        f"still reached ratio {best[0]:.3g}"
                    ),
                )
            gap_cap = min(1.0 / Lq, radius)
            worst = 0.0
            for _ in range(n):
                x, y = _sample_pair(rng, obj.dim, radius, gap_cap)
                _, gx = obj.value_grad(x)
                _, gy = obj.value_grad(y)
                dist = float(np.linalg.norm(y - x))
                if dist == 0.0:
                    continue
                allowed = (L0 + Lq * float(np.linalg.norm(gx)) ** q) * dist
                ratio = float(np.linalg.norm(gy - gx)) / allowed
                if ratio > worst:
                    worst = ratio
            spent += n
            if worst <= 1.0:
                return CertificationResult(
                    ok=True,
                    L0=L0,
                    Lq=Lq,
                    q=q,
                    max_ratio=worst,
                    pairs_tested=spent,
                    levels_tried=level + 1,
                    domain_radius=radius,
                )
            if worst < best[0]:
                best = (worst, L0, Lq)
        level += 1


def check_gradient(obj: Objective, n_points: int = 100, seed: int = 0) -> float:
    """Worst relative gap between analytic and central-difference gradients.

    Scans a few difference scales per point and keeps each point's best
    agreement, which sidesteps the usual step-size dilemma on stiff
    objectives.  Points are sampled inside the certificate domain (or a
    unit-ish box when the domain is unbounded).
    """
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x9DFF)))
    radius = obj.domain_radius()
    if math.isinf(radius):
        radius = 2.0
    worst = 0.0
    for _ in range(int(n_points)):
        x = rng.uniform(-0.9 * radius, 0.9 * radius, size=obj.dim)
        _, g = obj.value_grad(x)
        scale = max(1.0, float(np.linalg.norm(g)))
        best_err = math.inf
        for h0 in (1e-4, 1e-5, 1e-6):
            fd = np.empty(obj.dim)
            for i in range(obj.dim):
                h = h0 * max(1.0, abs(float(x[i])))
                e = np.zeros(obj.dim)
                e[i] = h
                fp = float(obj.value_grad(x + e)[0])
                fm = float(obj.value_grad(x - e)[0])
                fd[i] = (fp - fm) / (2.0 * h)
            best_err = min(best_err, float(np.linalg.norm(fd - g)) / scale)
        worst = max(worst, best_err)
    return worst


def resolve_objective(spec: str) -> Objective:
    """Build an objective from a compact description string.

    Formats::

        quadratic:1,10            eigenvalues, ascending or not (dim = count)
        quadratic:1,10:d=10       d curvatures spread evenly over [1, 10]
        quartic:3                 dimension
        rational:num=0,0,1;den=2,0,1;lo=-3;hi=3
        doubleexp:a=2;b=2;r=3
    """
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "quadratic":
        if not rest:
            raise ProblemError("quadratic needs eigenvalues, e.g. quadratic:1,10")
        values, _, dim_part = rest.partition(":")
        if dim_part:
            if not dim_part.startswith("d="):
                raise ProblemError(f"expected d=<dim> after eigenvalue range, got {dim_part!r}")
            lo_hi = [float(v) for v in values.split(",")]
            if len(lo_hi) != 2:
                raise ProblemError("the d= form needs exactly lo,hi curvatures")
            return make_quadratic(
                quadratic_spectrum_for_dim(lo_hi[0], lo_hi[1], int(dim_part[2:]))
            )
        return make_quadratic([float(v) for v in values.split(",")])
    if kind == "quartic":
        return make_quartic(int(rest or "1"))
    if kind in ("rational", "doubleexp"):
        kv: dict[str, str] = {}
        for part in rest.split(";"):
            if not part:
                continue
            key, _, val = part.partition("=")
            kv[key.strip()] = val.strip()
        if kind == "rational":
            try:
                num = [float(v) for v in kv["num"].split(",")]
                den = [float(v) for v in kv["den"].split(",")]
                return make_rational_1d(num, den, float(kv["lo"]), float(kv["hi"]))
            except KeyError as missing:
                raise ProblemError(f"rational needs num=, den=, lo=, hi= (missing {missing})") from None
        try:
            return make_double_exponential_1d(float(kv["a"]), float(kv["b"]), float(kv["r"]))
        except KeyError as missing:
            raise ProblemError(f"doubleexp needs a=, b=, r= (missing {missing})") from None
    raise ProblemError(f"unknown objective kind {kind!r} in {spec!r}")
