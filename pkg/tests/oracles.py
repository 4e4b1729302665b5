"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written the slow way — Python floats,
explicit loops, no numpy vectorization and no shared helpers with the
package — so that an agreement between routes is evidence, not an echo.
"""

from __future__ import annotations

import math


def scalar_adam_reference(x0, grads, beta1, beta2, eta, eps):
    """Run the update rule on one coordinate with plain Python floats.

    Returns a dict of per-step lists: iterates ``x`` (x[0] is the start),
    first/second moments ``m``/``v``, schedule pairs ``eta_s``/``eps_s``,
    and denominators ``b`` (all indexed from step 1 at list position 0).
    """
    x = float(x0)
    m = 0.0
    v = 0.0
    b1p = 1.0
    b2p = 1.0
    out = {"x": [x], "m": [], "v": [], "eta_s": [], "eps_s": [], "b": []}
    for g in grads:
        g = float(g)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        b1p *= beta1
        b2p *= beta2
        warm = math.sqrt(1.0 - b2p)
        eta_s = eta * warm / (1.0 - b1p)
        eps_s = eps * warm
        b = math.sqrt(v) + eps_s
        x = x - eta_s * m / b
        out["x"].append(x)
        out["m"].append(m)
        out["v"].append(v)
        out["eta_s"].append(eta_s)
        out["eps_s"].append(eps_s)
        out["b"].append(b)
    return out


def offset_sequence_reference(xs, beta1):
    """Momentum-offset points from a list of iterates: y_1 = x_1, then
    ``y_s = x_s + (beta1/(1-beta1)) (x_s - x_{s-1})``.

    ``xs`` is the iterate list starting at x_1.
    """
    ratio = beta1 / (1.0 - beta1)
    ys = [xs[0]]
    for s in range(1, len(xs)):
        ys.append(xs[s] + ratio * (xs[s] - xs[s - 1]))
    return ys


def geometric_sum_reference(alpha, beta2, eps):
    """Loop route for the nonnegative-increment sum and its log cap.

    Returns ``(lhs_list, rhs_list)`` over prefixes.
    """
    theta = 0.0
    lhs = 0.0
    lhs_list = []
    rhs_list = []
    for t, a in enumerate(alpha, start=1):
        theta = beta2 * theta + a
        lhs += a / (eps + theta)
        lhs_list.append(lhs)
        rhs_list.append(math.log(1.0 + theta / eps) - t * math.log(beta2))
    return lhs_list, rhs_list


def momentum_sum_reference(alpha, beta1, beta2, eps):
    """Loop route for the two signed-increment sums and their shared cap.

    Returns ``(lhs_raw, lhs_debias, log_part)`` lists over prefixes, where
    the caps are ``log_part`` times ``1/((1-b1)(1-b1/b2))`` and
    ``1/((1-b1)^2 (1-b1/b2))`` respectively.
    """
    theta = 0.0
    zeta = 0.0
    b1p = 1.0
    lhs_raw = 0.0
    lhs_avg = 0.0
    out_raw = []
    out_avg = []
    log_part = []
    for t, a in enumerate(alpha, start=1):
        theta = beta2 * theta + a * a
        zeta = beta1 * zeta + a
        b1p *= beta1
        gamma = zeta / (1.0 - b1p)
        lhs_raw += zeta * zeta / (eps + theta)
        lhs_avg += gamma * gamma / (eps + theta)
        out_raw.append(lhs_raw)
        out_avg.append(lhs_avg)
        log_part.append(math.log(1.0 + theta / eps) - t * math.log(beta2))
    return out_raw, out_avg, log_part


def quadratic_value_grad_reference(spectrum, x):
    """Plain-loop value/gradient of ``f(x) = 0.5 sum lam_i x_i^2``."""
    val = 0.0
    grad = []
    for lam, xi in zip(spectrum, x):
        val += 0.5 * lam * xi * xi
        grad.append(lam * xi)
    return val, grad


def proxy_denominator_reference(v_prev, cap, beta2, eps_s):
    """One proxy denominator entry: ``sqrt(b2 v_{s-1} + (1-b2) cap^2) + eps_s``."""
    return math.sqrt(beta2 * v_prev + (1.0 - beta2) * cap * cap) + eps_s
