"""Adaptive quadrature on intervals and boxes.

Thin layer over :func:`scipy.integrate.cubature` (global-error adaptive
Gauss-Kronrod, product rule in several dimensions). Integrands take an array
of shape ``(npoints, ndim)`` and return ``(npoints,)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cubature

from .errors import NumericError

RTOL = 1e-10
MAX_SUBDIVISIONS = 4000


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    subdivisions: int


def integrate(f, lo, hi, *, rtol=RTOL, atol=0.0, max_subdivisions=MAX_SUBDIVISIONS, rule=None, points=None):
    """Integrate ``f`` over the box ``[lo, hi]``.

    Raises
    ------
    NumericError
        When the subdivision cap is hit before the tolerance is met; carries
        the best estimate and its error bound.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if rule is None:
        rule = "gk21" if lo.size == 1 else "gk15"
    kwargs = {}
    if points:
        kwargs["points"] = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    res = cubature(f, lo, hi, rule=rule, rtol=rtol, atol=atol, max_subdivisions=max_subdivisions, **kwargs)
    value = float(res.estimate)
    error = float(res.error)
    if res.status != "converged":
        raise NumericError(
            f"quadrature did not converge: estimate {value!r} +/- {error!r}",
            estimate=value,
            error_bound=error,
        )
    return QuadResult(value, error, int(res.subdivisions))


def integrate_1d(f, a, b, **kwargs):
    """Integrate a vectorised scalar function ``f(x)`` over ``[a, b]``."""
    return integrate(lambda x: f(x[:, 0]), [a], [b], **kwargs)
