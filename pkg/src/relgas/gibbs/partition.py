r"""Truncated grand partition function of a small region.

.. math::
    Z_\Lambda(s) = e^{-\beta |\Lambda| \rho_{vac}}
        \sum_{n \ge 0} \frac{z_r^n}{n!} J_n, \qquad
    J_n = \int_{\Lambda^n} \prod_i w(x_i)\, e^{-\beta \tilde V(x \mid s)}\, dx,

with ``z_r`` the activity without its rest-energy factor and
``w = e^{theta} K_2(gamma)/gamma`` the one-body weight. ``J_1`` is a region
integral, ``J_2`` uses a radial reduction when everything is spherically
symmetric, and higher orders use scrambled Sobol points with doubling.

The tail beyond ``n_max`` is bounded through superstability:
``J_n <= (e^{beta B} W)^n`` with ``W = int_Lambda w``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import logsumexp
from scipy.stats import qmc

from .. import geometry as geo
from ..errors import DomainError, NumericError, TruncationError
from ..thermo import VacuumEnergy, integrate_log_field, log_one_body_field
from .potential import BoundaryCondition, interaction_energy, local_energy, require_superstable

__all__ = ["PartitionResult", "truncated_partition", "pair_excess_radial", "log_tail_bound"]


@dataclass(frozen=True)
class PartitionResult:
    log_z: float
    log_terms: tuple
    log_j: tuple
    j_errors: tuple
    log_tail_bound: float
    mean_n: float
    log_vacuum: float

    @property
    def relative_tail_bound(self):
        return math.exp(self.log_tail_bound - (self.log_z - self.log_vacuum))

    def as_dict(self):
        return {
            "log_partition": self.log_z,
            "log_terms": list(self.log_terms),
            "log_configuration_integrals": list(self.log_j),
            "configuration_integral_errors": list(self.j_errors),
            "log_tail_bound": self.log_tail_bound,
            "mean_n": self.mean_n,
        }


def log_tail_bound(log_x, n_max):
    """``log`` of a bound on ``sum_{n > n_max} x^n / n!``."""
    m = n_max + 1
    x = math.exp(log_x) if log_x < 700 else math.inf
    if x >= m + 1:
        return math.inf
    return m * log_x - math.lgamma(m + 1) - math.log1p(-x / (m + 1))


def _sample_region(region, u):
    """Map unit-cube points ``(N, 3)`` to chart points, uniform in chart volume."""
    if isinstance(region, geo.Box):
        h = np.asarray(region.half_extents)
        return (2.0 * u - 1.0) * h
    lo3 = region.inner_radius**3
    hi3 = region.outer_radius**3
    r = np.cbrt(lo3 + u[:, 0] * (hi3 - lo3))
    cz = 2.0 * u[:, 1] - 1.0
    sz = np.sqrt(np.maximum(1.0 - cz * cz, 0.0))
    ph = 2.0 * math.pi * u[:, 2]
    return np.column_stack([r * sz * np.cos(ph), r * sz * np.sin(ph), r * cz])


def _batch_energy(pts, boundary, pot, st):
    """Interaction energies of a batch of configurations ``(N, n, 3)``."""
    N, n, _ = pts.shape
    e = np.zeros(N)
    if pot.phi2 is not None or pot.hard_core > 0:
        targets = [pts[:, j] for j in range(n)] + [np.broadcast_to(b, (N, 3)) for b in boundary]
        for i in range(n):
            for j in range(i + 1, len(targets)):
                d = st.proper_distance(pts[:, i], targets[j])
                near = d <= pot.range_R
                if np.any(near):
                    e[near] += pot.pair_energy(d[near])
    if pot.higher:
        for idx in range(N):
            if not math.isinf(e[idx]):
                e[idx] += interaction_energy(pts[idx], boundary, pot.__class__(higher=pot.higher), st)
    return e


def _qmc_log_j(n, region, st, pot, boundary, field, beta, log_w_ref, rtol, seed, m_min=10, m_max=20):
    """``log J_n`` by scrambled Sobol sampling of ``Lambda^n`` with doubling."""
    vol = region.chart_volume
    sob = qmc.Sobol(d=3 * n, scramble=True, seed=seed)
    prev = None
    acc = 0.0
    count = 0
    m = m_min
    batch = sob.random_base2(m)
    while True:
        pts = _sample_region(region, batch.reshape(-1, 3)).reshape(batch.shape[0], n, 3)
        lw = field(pts.reshape(-1, 3)).reshape(batch.shape[0], n).sum(axis=1) - n * log_w_ref
        e = _batch_energy(pts, boundary, pot, st)
        with np.errstate(invalid="ignore"):
            vals = np.where(np.isinf(e), 0.0, np.exp(lw - beta * np.where(np.isinf(e), 0.0, e)))
        acc += vals.sum()
        count += batch.shape[0]
        est = acc / count
        if prev is not None:
            err = abs(est - prev)
            if err <= rtol * abs(est) or m >= m_max:
                break
        prev = est
        batch = sob.random(count)  # doubles the sample
        m += 1
    if est <= 0:
        # no admissible sample: report the resolution of the sample instead of zero
        return -math.inf, math.exp(n * (math.log(vol) + log_w_ref)) / count
    return math.log(est) + n * (math.log(vol) + log_w_ref), err * math.exp(n * (math.log(vol) + log_w_ref))


def _kinks(st, lo, hi, thresholds):
    """Inner breakpoints in ``rho2`` as functions of ``rho1``, and the outer ones they induce."""
    R_s = getattr(st, "sphere_radius", None)
    cs = [c for c in thresholds if c > 0]

    def inner(r1):
        b = [r1 + c for c in cs] + [r1 - c for c in cs] + [c - r1 for c in cs]
        if R_s is not None:
            b += [math.pi * R_s - r1] + [2.0 * math.pi * R_s - r1 - c for c in cs]
        return sorted({lo, hi, *[v for v in b if lo < v < hi]})

    outer = set()
    shifts = [0.0] + cs
    for c in shifts:
        for e in (lo, hi):
            outer.update((e - c, e + c, c - e))
        for c2 in shifts:
            outer.update((0.5 * (c + c2), 0.5 * (c2 - c)))
            if R_s is not None:
                outer.update((0.5 * (math.pi * R_s - c), math.pi * R_s - c - c2, 0.5 * (2 * math.pi * R_s - c - c2)))
    if R_s is not None:
        outer.update((math.pi * R_s - lo, math.pi * R_s - hi))
    return inner, sorted(v for v in outer if lo < v < hi)


def pair_excess_radial(st, region, pot, beta, field, log_w_ref, rtol=1e-10):
    r"""``J_2 - J_1^2`` for a ball or shell in a spherically symmetric spacetime, in units of ``e^{2 log_w_ref}``.

    With both points in polar form the angular integrals reduce to one over
    the proper separation ``d`` at fixed radii, weighted by ``|du/dd|``
    (``u`` the cosine of the angle between the two radii). The remaining
    ``(rho1, rho2)`` integrand is piecewise smooth with kinks where
    ``|rho1 - rho2|`` or ``rho1 + rho2`` crosses the hard core or the range;
    the inner ``rho2`` integral is split at those kinks and done by
    Gauss-Legendre, the outer one adaptively with the induced breakpoints.
    """
    lo, hi = region.inner_radius, region.outer_radius
    r_hc = pot.hard_core
    R = pot.range_R
    nodes, weights = np.polynomial.legendre.leggauss(32)

    def w(rho):
        pts = np.zeros((rho.size, 3))
        pts[:, 0] = rho
        return np.exp(field(pts) - log_w_ref)

    def g(r1, r2):
        d_min, d_max = st.distance_range(r1, r2)
        out = np.zeros_like(r2)
        if r_hc > 0:
            d_hc = np.minimum(r_hc, d_max)
            u_hc = np.clip(st.cos_angle_at_distance(r1, r2, d_hc), -1.0, 1.0)
            out = np.where(d_min < r_hc, -(1.0 - u_hc), 0.0)
        if pot.phi2 is not None:
            a = np.maximum(d_min, r_hc)
            b = np.minimum(d_max, R)
            live = b > a
            if np.any(live):
                a_l, b_l = a[live], b[live]
                half = 0.5 * (b_l - a_l)
                mid = 0.5 * (b_l + a_l)
                d = mid[:, None] + half[:, None] * nodes[None, :]
                f = pot.boltzmann_pair_minus_one(d, beta)
                jac = st.cos_angle_jacobian(r1, r2[live][:, None], d)
                out = out.copy()
                out[live] += half * np.sum(weights[None, :] * f * jac, axis=1)
        return out

    inner_breaks, outer_breaks = _kinks(st, lo, hi, [r_hc, R] if pot.phi2 is not None else [r_hc])

    def inner(r1):
        if r1 <= 0.0:
            return 0.0
        br = np.asarray(inner_breaks(r1))
        a, b = br[:-1], br[1:]
        r2 = (0.5 * (a + b))[:, None] + (0.5 * (b - a))[:, None] * nodes[None, :]
        r2 = r2.ravel()
        vals = r2 * r2 * w(r2) * g(r1, r2)
        return float(np.sum((0.5 * (b - a))[:, None] * weights[None, :] * vals.reshape(-1, nodes.size)))

    def outer(r1):
        return 8.0 * math.pi**2 * r1 * r1 * float(w(np.array([r1]))[0]) * inner(r1)

    val, err = integrate.quad(outer, lo, hi, points=outer_breaks or None, epsabs=0.0, epsrel=rtol, limit=500)
    return val, err


def truncated_partition(region, st, gas, k, pot, s=None, n_max=5, lam=None, tol=1e-8, qmc_rtol=1e-3,
                        seed=12345):
    """Log of the grand partition function truncated at ``n_max`` particles.

    Parameters
    ----------
    s : BoundaryCondition, optional
    n_max : int
    lam : float, optional
        Cosmological constant for the vacuum factor (default: that of ``st``).
    tol : float
        Largest accepted bound on the omitted tail relative to the kept sum.

    Returns
    -------
    PartitionResult
        ``log_z`` and the kept terms, ``log J_n`` with error estimates, the
        log tail bound and the mean particle number ``z d log Z / d z``.

    Raises
    ------
    TruncationError
        When the tail bound exceeds ``tol`` relative to the kept sum.
    """
    geo.check_region(st, region)
    require_superstable(pot)
    if int(n_max) != n_max or n_max < 0:
        raise DomainError("n_max must be a nonnegative integer")
    s = BoundaryCondition() if s is None else s
    if not isinstance(s, BoundaryCondition):
        s = BoundaryCondition(s)
    s.validate(region)
    boundary = s.points
    lam = st.cosmological_constant if lam is None else lam
    beta = gas.beta(k)
    log_zr = gas.log_activity_reduced(k)
    log_vac = -beta * geo.volume(st, region, "proper_riemannian") * VacuumEnergy.of(lam, k).rho_vac
    field = log_one_body_field(st, gas, k)

    w_int = integrate_log_field(st, region, field)
    log_w_total = w_int.log_value
    has_boundary = boundary.shape[0] > 0 and not pot.is_ideal

    if has_boundary:
        def field1(pts):
            e = np.array([local_energy(p, np.zeros((0, 3)), boundary, pot, st) for p in pts])
            with np.errstate(invalid="ignore"):
                return field(pts) - np.where(np.isinf(e), np.inf, beta * e)

        j1 = integrate_log_field(st, region, field1)
    else:
        j1 = w_int

    log_j = [0.0]
    errs = [0.0]
    if n_max >= 1:
        log_j.append(j1.log_value)
        errs.append(j1.error)
    log_w_ref = log_w_total - math.log(region.chart_volume)  # log of the mean weight
    for n in range(2, int(n_max) + 1):
        if pot.is_ideal:
            log_j.append(n * j1.log_value)
            errs.append(n * j1.error * math.exp((n - 1) * j1.log_value) if j1.value is not None else math.inf)
        elif n == 2 and st.radial and region.radial and not has_boundary and not pot.higher:
            exc, exc_err = pair_excess_radial(st, region, pot, beta, field, log_w_ref)
            j1s = math.exp(2.0 * (j1.log_value - log_w_ref))
            total = j1s + exc
            if total <= 0:
                log_j.append(-math.inf)
            else:
                log_j.append(math.log(total) + 2.0 * log_w_ref)
            errs.append(exc_err * math.exp(2.0 * log_w_ref))
        else:
            lj, e = _qmc_log_j(n, region, st, pot, boundary, field, beta, log_w_ref, qmc_rtol, seed + n)
            log_j.append(lj)
            errs.append(e)

    log_terms = [n * log_zr + log_j[n] - math.lgamma(n + 1) for n in range(len(log_j))]
    kept = float(logsumexp(log_terms))
    weights = np.exp(np.asarray(log_terms) - kept)
    mean_n = float(np.sum(np.arange(len(log_terms)) * weights))

    B = pot.stability_B
    log_x = log_zr + log_w_total + beta * B
    ltail = log_tail_bound(log_x, int(n_max))
    if not math.isfinite(kept):
        raise NumericError("partition sum is not finite", log_value=kept)
    if ltail - kept > math.log(tol):
        raise TruncationError(
            f"tail bound exp({ltail!r}) exceeds tolerance relative to the kept sum exp({kept!r})",
            partial_log_value=log_vac + kept,
            tail_bound=math.exp(ltail) if ltail < 700 else math.inf,
        )
    return PartitionResult(
        log_z=log_vac + kept,
        log_terms=tuple(log_terms),
        log_j=tuple(log_j),
        j_errors=tuple(errs),
        log_tail_bound=ltail,
        mean_n=mean_n,
        log_vacuum=log_vac,
    )
