r"""Exponentially scaled modified Bessel function :math:`K_2` and log-domain weights.

The one-body weight of the relativistic gas is :math:`e^{\theta} K_2(\gamma)/\gamma`
with :math:`\theta = \beta m c^2` and :math:`\gamma = \alpha\theta`. Both factors
leave the double range long before the product does, so everything here works
with the scaled function

.. math::
    \tilde K_2(\gamma) = e^{\gamma} K_2(\gamma)

and takes logarithms before recombining.

Evaluation regimes for :math:`\tilde K_2`:

* ``gamma <= 2``: ascending series of :math:`K_2` (logarithmic form), times
  :math:`e^\gamma`;
* ``2 < gamma < 30``: Steed's continued fraction for :math:`\tilde K_0`,
  :math:`\tilde K_1`, then :math:`K_2 = K_0 + (2/\gamma) K_1`;
* ``gamma >= 30``: Hankel large-argument expansion, truncated once terms drop
  below double resolution (remainder below :math:`e^{-60}`).

Scalars go through a ``math``-only path; arrays through a vectorised numpy path
implementing the same recurrences.
"""

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "SERIES_MAX",
    "ASYMPTOTIC_MIN",
    "ScaledBesselResult",
    "k2_scaled",
    "k2_asymptotic_ratio",
    "log_one_body_weight",
    "log_one_body_weight_scalar",
    "scaled_bessel",
]

SERIES_MAX = 2.0
ASYMPTOTIC_MIN = 30.0

_EULER_GAMMA = 0.57721566490153286061
_EPS = 1e-17
_MAXIT = 10_000


class ScaledBesselResult:
    """Pair ``(gamma, e^gamma K_2(gamma))``."""

    __slots__ = ("gamma", "k2_scaled")

    def __init__(self, gamma, k2_scaled):
        self.gamma = gamma
        self.k2_scaled = k2_scaled

    def __repr__(self):
        return f"ScaledBesselResult(gamma={self.gamma!r}, k2_scaled={self.k2_scaled!r})"


def _check_gamma_scalar(gamma):
    if not (gamma > 0.0) or math.isinf(gamma):
        raise DomainError(f"gamma must be positive and finite, got {gamma!r}")


def _check_gamma_array(gamma):
    if gamma.size and not np.all(np.isfinite(gamma) & (gamma > 0.0)):
        bad = gamma[~(np.isfinite(gamma) & (gamma > 0.0))]
        raise DomainError(f"gamma must be positive and finite, got {bad[:5]!r}")


# --- scalar path -----------------------------------------------------------


def _series_scalar(x):
    q = 0.25 * x * x
    lg = math.log(0.5 * x)
    t = 0.5  # (x^2/4)^k / (k! (k+2)!) at k = 0
    h_k, h_k2 = 0.0, 1.5  # harmonic numbers H_k, H_{k+2}
    s = t * (0.5 * (h_k + h_k2) - _EULER_GAMMA - lg)
    k = 0
    while True:
        k += 1
        t *= q / (k * (k + 2))
        h_k += 1.0 / k
        h_k2 += 1.0 / (k + 2)
        term = t * (0.5 * (h_k + h_k2) - _EULER_GAMMA - lg)
        s += term
        if abs(term) <= _EPS * abs(s):
            break
    return math.exp(x) * (2.0 / (x * x) - 0.5 + q * s)


def _steed_scalar(x):
    # Temme/Steed CF2 at order 0, returns scaled K0 and K1.
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels) < _EPS * abs(s):
            break
    h *= a1
    k0 = math.sqrt(math.pi / (2.0 * x)) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def _asymptotic_scalar(x):
    total = 1.0
    term = 1.0
    k = 0
    while True:
        k += 1
        new = term * (16.0 - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(new) >= abs(term):
            break
        term = new
        total += term
        if abs(term) <= _EPS * abs(total):
            break
    return math.sqrt(math.pi / (2.0 * x)) * total


def _k2_scaled_scalar(x):
    if x <= SERIES_MAX:
        return _series_scalar(x)
    if x < ASYMPTOTIC_MIN:
        k0, k1 = _steed_scalar(x)
        return k0 + 2.0 * k1 / x
    return _asymptotic_scalar(x)


# --- array path ------------------------------------------------------------


def _series_array(x):
    q = 0.25 * x * x
    lg = np.log(0.5 * x)
    t = np.full_like(x, 0.5)
    h_k = 0.0
    h_k2 = 1.5
    s = t * (0.5 * (h_k + h_k2) - _EULER_GAMMA - lg)
    # the largest q dominates every term; test convergence on it alone
    q_max = float(q.max()) if q.size else 0.0
    lg_max = float(np.abs(lg).max()) if q.size else 0.0
    s_min = float(np.abs(s).min()) if q.size else 1.0
    t_max = 0.5
    for k in range(1, 60):
        t = t * q / (k * (k + 2))
        h_k += 1.0 / k
        h_k2 += 1.0 / (k + 2)
        s = s + t * (0.5 * (h_k + h_k2) - _EULER_GAMMA - lg)
        t_max *= q_max / (k * (k + 2))
        if t_max * (h_k2 + lg_max + 1.0) <= _EPS * s_min:
            break
    return np.exp(x) * (2.0 / (x * x) - 0.5 + q * s)


def _steed_array(x):
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = a1
    a = -a1
    s = 1.0 + q * delh
    done = np.zeros(x.shape, dtype=bool)
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = np.where(done, 0.0, (b * d - 1.0) * delh)
        h = h + delh
        dels = q * delh
        s = s + dels
        done |= np.abs(dels) < _EPS * np.abs(s)
        if done.all():
            break
    h = h * a1
    k0 = np.sqrt(np.pi / (2.0 * x)) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def _asymptotic_array(x):
    total = np.ones_like(x)
    term = np.ones_like(x)
    for k in range(1, 80):
        new = term * (16.0 - (2 * k - 1) ** 2) / (8.0 * k * x)
        term = np.where(np.abs(new) < np.abs(term), new, 0.0)
        total = total + term
        if np.all(np.abs(term) <= _EPS * np.abs(total)):
            break
    return np.sqrt(np.pi / (2.0 * x)) * total


def _k2_scaled_array(x):
    out = np.empty_like(x)
    lo = x <= SERIES_MAX
    hi = x >= ASYMPTOTIC_MIN
    mid = ~(lo | hi)
    if lo.any():
        out[lo] = _series_array(x[lo])
    if mid.any():
        xm = x[mid]
        k0, k1 = _steed_array(xm)
        out[mid] = k0 + 2.0 * k1 / xm
    if hi.any():
        out[hi] = _asymptotic_array(x[hi])
    return out


# --- public surface --------------------------------------------------------


def k2_scaled(gamma):
    """Return ``exp(gamma) * K_2(gamma)``.

    Parameters
    ----------
    gamma : float or array_like
        Positive finite argument(s).

    Returns
    -------
    float or ndarray
        Scaled Bessel value, same shape as ``gamma``.

    Raises
    ------
    DomainError
        If any ``gamma`` is nonpositive, NaN or infinite.
    """
    if np.ndim(gamma) == 0:
        x = float(gamma)
        _check_gamma_scalar(x)
        return _k2_scaled_scalar(x)
    x = np.asarray(gamma, dtype=float)
    _check_gamma_array(x)
    return _k2_scaled_array(x)


def scaled_bessel(gamma):
    """Bundle ``gamma`` with its scaled :math:`K_2` value."""
    return ScaledBesselResult(gamma, k2_scaled(gamma))


def k2_asymptotic_ratio(gamma):
    r"""Ratio of :math:`K_2(\gamma)/\gamma` to its large-argument form.

    Returns :math:`[K_2(\gamma)/\gamma] / [\sqrt{\pi/(2\gamma^3)}\,e^{-\gamma}]`,
    which equals ``k2_scaled(gamma) * sqrt(2 gamma / pi)`` and tends to
    ``1 + 15/(8 gamma)`` for large ``gamma``.
    """
    if np.ndim(gamma) == 0:
        return k2_scaled(gamma) * math.sqrt(2.0 * float(gamma) / math.pi)
    g = np.asarray(gamma, dtype=float)
    return k2_scaled(g) * np.sqrt(2.0 * g / np.pi)


def log_one_body_weight(alpha, theta, excess=None):
    r"""Log of :math:`e^{\theta} K_2(\alpha\theta)/(\alpha\theta)`.

    Evaluated as ``theta*(1 - alpha) + log(k2_scaled(alpha*theta)) - log(alpha*theta)``
    so that neither :math:`e^\theta` nor :math:`K_2` is formed on its own.

    Parameters
    ----------
    alpha : float or array_like
        Killing-norm factor, positive.
    theta : float
        Reduced rest energy ``beta * m * c**2``, positive.
    excess : float or array_like, optional
        ``alpha - 1`` computed without cancellation. When given, the
        ``theta*(1 - alpha)`` term uses it instead of ``1 - alpha``; this
        matters when ``theta`` is large and ``alpha`` is within a few ulps of 1.
    """
    scalar = np.ndim(alpha) == 0 and np.ndim(theta) == 0 and np.ndim(excess) == 0
    if scalar:
        a = float(alpha)
        t = float(theta)
        if not (a > 0.0) or not (t > 0.0) or math.isinf(a) or math.isinf(t):
            raise DomainError(f"alpha and theta must be positive, got {alpha!r}, {theta!r}")
        g = a * t
        dev = (1.0 - a) if excess is None else -float(excess)
        return t * dev + math.log(_k2_scaled_scalar_checked(g)) - math.log(g)
    a = np.asarray(alpha, dtype=float)
    t = np.asarray(theta, dtype=float)
    if not (np.all(a > 0.0) and np.all(t > 0.0) and np.all(np.isfinite(a)) and np.all(np.isfinite(t))):
        raise DomainError("alpha and theta must be positive and finite")
    g = a * t
    dev = (1.0 - a) if excess is None else -np.asarray(excess, dtype=float)
    return t * dev + np.log(k2_scaled(g)) - np.log(g)


def log_one_body_weight_scalar(theta, excess):
    """Scalar :func:`log_one_body_weight` from ``theta`` and ``alpha - 1``, for hot loops."""
    g = theta + theta * excess
    if not g > 0.0:
        raise DomainError(f"gamma must be positive, got {g!r}")
    return -theta * excess + math.log(_k2_scaled_scalar(g)) - math.log(g)


def _k2_scaled_scalar_checked(g):
    _check_gamma_scalar(g)
    return _k2_scaled_scalar(g)
