r"""Ideal-gas observables, the AdS pressure limit and the Newtonian-limit machinery.

Configuration integrals run over the chart (Lebesgue) measure and pressures
divide by the proper (Riemannian) volume; the one exception is the Newtonian
pressure, which divides by the chart volume. Every report carries both
volumes.

The physical activity contains ``e^{beta m c^2}``, which overflows for any
realistic gas, so it is split as ``z = z_reduced * e^{theta}`` and the
``e^{theta}`` is folded into the log one-body weight
``theta (1 - alpha) + log(e^gamma K_2(gamma) / gamma)`` before anything is
exponentiated.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import geometry as geo
from . import quadrature
from .errors import DomainError, NumericError
from .specfun import log_one_body_weight

__all__ = [
    "IntegralResult",
    "VacuumEnergy",
    "IdealGasReport",
    "NewtonianReport",
    "SweepRow",
    "log_one_body_field",
    "weighted_q1",
    "expected_particles",
    "finite_pressure",
    "particle_pmf",
    "poisson_tv",
    "tolman_temperature",
    "density_profile",
    "ads_pressure_sequence",
    "dust_closure",
    "newtonian_activity",
    "newtonian_log_partition",
    "newtonian_pressure",
    "newtonian_limit_sweep",
    "thread_count",
    "ordered_map",
]

_LOG_MAX = math.log(np.finfo(float).max)


def thread_count():
    """Worker threads from ``RELGAS_THREADS`` (default 1)."""
    raw = os.environ.get("RELGAS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"RELGAS_THREADS must be an integer, got {raw!r}") from None
    return max(n, 1)


def ordered_map(fn, items, threads=None):
    """``[fn(i) for i in items]``, possibly on a thread pool; order follows ``items``."""
    items = list(items)
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- region integrals in log domain ------------------------------------------


@dataclass(frozen=True)
class IntegralResult:
    """``log`` of a positive integral with its absolute error on the linear scale.

    ``value`` is ``None`` when the integral is not representable as a float.
    """

    log_value: float
    error: float
    value: float = None

    @classmethod
    def from_scaled(cls, scaled, scaled_err, log_ref):
        if not scaled > 0:
            raise NumericError(
                f"integral underflowed (scaled value {scaled!r} at log scale {log_ref!r})",
                estimate=0.0,
                error_bound=scaled_err,
            )
        log_value = math.log(scaled) + log_ref
        value = math.exp(log_value) if log_value < _LOG_MAX else None
        err = scaled_err * math.exp(log_ref) if log_ref < _LOG_MAX else math.inf
        return cls(log_value, err, value)


def _probe_points(st, region):
    r = region.outer_radius
    if isinstance(region, geo.Box):
        h = np.asarray(region.half_extents)
        signs = np.array([[i, j, l] for i in (-1, 0, 1) for j in (-1, 0, 1) for l in (-1, 0, 1)], dtype=float)
        pts = signs * h * 0.999999
    else:
        lo = getattr(region, "inner_radius", 0.0)
        radii = np.linspace(lo, r * 0.999999, 9)
        dirs = np.vstack([np.eye(3), -np.eye(3)])
        pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    return pts


def integrate_log_field(st, region, log_f, rtol=quadrature.RTOL):
    """Integrate ``exp(log_f(x))`` over ``region`` with respect to chart measure.

    ``log_f`` maps an ``(n, 3)`` array of chart points to log values. The
    integrand is rescaled by its largest value on a probe set so that the
    quadrature works on O(1) numbers. Spherically symmetric fields on ball
    or shell regions reduce to a radial integral.
    """
    geo.check_region(st, region)
    log_ref = float(np.max(log_f(_probe_points(st, region))))
    if not math.isfinite(log_ref):
        raise NumericError("log integrand is not finite on the region", log_value=log_ref)

    def scaled(pts):
        return np.exp(log_f(pts) - log_ref)

    if isinstance(region, geo.Box):
        h = np.asarray(region.half_extents)
        if st.radial:
            res = quadrature.integrate(scaled, np.zeros(3), h, rtol=rtol)
            return IntegralResult.from_scaled(8.0 * res.value, 8.0 * res.error, log_ref)
        res = quadrature.integrate(scaled, -h, h, rtol=rtol)
        return IntegralResult.from_scaled(res.value, res.error, log_ref)

    lo, hi = region.inner_radius, region.outer_radius
    if st.radial:

        def radial(rho):
            pts = np.zeros((rho.size, 3))
            pts[:, 0] = rho
            return 4.0 * math.pi * rho * rho * scaled(pts)

        res = quadrature.integrate_1d(radial, lo, hi, rtol=rtol)
        return IntegralResult.from_scaled(res.value, res.error, log_ref)

    def spherical(q):
        rho, u, phi = q[:, 0], q[:, 1], q[:, 2]
        s = np.sqrt(np.maximum(1.0 - u * u, 0.0))
        pts = np.column_stack([rho * s * np.cos(phi), rho * s * np.sin(phi), rho * u])
        return rho * rho * scaled(pts)

    res = quadrature.integrate(spherical, [lo, -1.0, 0.0], [hi, 1.0, 2.0 * math.pi], rtol=rtol)
    return IntegralResult.from_scaled(res.value, res.error, log_ref)


def log_one_body_field(st, gas, k):
    """Function ``x -> log(e^{theta} K_2(gamma(x)) / gamma(x))`` on chart points."""
    theta = gas.theta(k)
    y = 1.0 / k.c

    def field(pts):
        pts = np.asarray(pts, dtype=float)
        ex = st.alpha_excess_y(pts, y)
        ex = np.broadcast_to(ex, pts.shape[:-1])
        return log_one_body_weight(1.0 + ex, theta, excess=ex)

    return field


def weighted_q1(st, region, gas, k):
    r"""``log`` of :math:`\int_\Lambda e^{\beta m c^2} K_2(\gamma(x))/\gamma(x)\,dx` (chart measure)."""
    return integrate_log_field(st, region, log_one_body_field(st, gas, k))


# --- ideal gas ---------------------------------------------------------------


@dataclass(frozen=True)
class VacuumEnergy:
    """Vacuum energy density ``lambda c^4 / (8 pi G)`` in J/m^3."""

    lam: float
    rho_vac: float

    @classmethod
    def of(cls, lam, k):
        if not math.isfinite(lam):
            raise DomainError(f"lambda must be finite, got {lam!r}")
        return cls(lam, lam * k.c**4 / (8.0 * math.pi * k.G))


@dataclass(frozen=True)
class IdealGasReport:
    log_q1: float
    q1: float
    q1_error: float
    log_expected_n: float
    expected_n: float
    gas_pressure: float
    pressure: float
    rho_vac: float
    proper_volume: float
    chart_volume: float
    beta: float
    temperature: float

    def as_dict(self):
        d = asdict(self)
        return {
            "log_q1": d["log_q1"],
            "q1_m3": d["q1"],
            "q1_error_m3": d["q1_error"],
            "log_expected_n": d["log_expected_n"],
            "expected_n": d["expected_n"],
            "gas_pressure_Pa": d["gas_pressure"],
            "pressure_Pa": d["pressure"],
            "rho_vac_J_per_m3": d["rho_vac"],
            "proper_volume_m3": d["proper_volume"],
            "chart_volume_m3": d["chart_volume"],
            "beta_per_J": d["beta"],
            "temperature_K": d["temperature"],
        }


def _exp_checked(log_value, what):
    if log_value >= _LOG_MAX:
        raise NumericError(f"{what} overflows: log value {log_value!r}", log_value=log_value)
    return math.exp(log_value)


def expected_particles(st, region, gas, k, q1=None):
    """Poisson mean ``z Q_1``; returns ``(expected_n, log_expected_n, q1_result)``."""
    if q1 is None:
        q1 = weighted_q1(st, region, gas, k)
    log_n = gas.log_activity_reduced(k) + q1.log_value
    return _exp_checked(log_n, "expected particle number"), log_n, q1


def finite_pressure(st, region, gas, k, lam=None):
    """Finite-volume pressure ``-rho_vac + <N> / (beta |Lambda|_proper)`` with its ingredients.

    ``lam`` defaults to the spacetime's own cosmological constant; passing a
    different value shifts only the vacuum term.
    """
    lam = st.cosmological_constant if lam is None else lam
    vac = VacuumEnergy.of(lam, k)
    n, log_n, q1 = expected_particles(st, region, gas, k)
    beta = gas.beta(k)
    vol_p = geo.volume(st, region, "proper_riemannian")
    vol_c = geo.volume(st, region, "chart_lebesgue")
    gas_p = n / (beta * vol_p)
    return IdealGasReport(
        log_q1=q1.log_value,
        q1=q1.value,
        q1_error=q1.error,
        log_expected_n=log_n,
        expected_n=n,
        gas_pressure=gas_p,
        pressure=gas_p - vac.rho_vac,
        rho_vac=vac.rho_vac,
        proper_volume=vol_p,
        chart_volume=vol_c,
        beta=beta,
        temperature=gas.T,
    )


def particle_pmf(mean, n):
    """Poisson probability ``e^{-mean} mean^n / n!`` (log-domain evaluation)."""
    if not (math.isfinite(mean) and mean >= 0):
        raise DomainError(f"Poisson mean must be finite and >= 0, got {mean!r}")
    if n < 0 or int(n) != n:
        raise DomainError(f"n must be a nonnegative integer, got {n!r}")
    n = int(n)
    if mean == 0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-mean + n * math.log(mean) - math.lgamma(n + 1))


def _poisson_log_pmf(mean, n):
    if mean == 0:
        return np.where(n == 0, 0.0, -np.inf)
    from scipy.special import gammaln

    return -mean + n * math.log(mean) - gammaln(n + 1.0)


def poisson_tv(mean_a, mean_b, tail=1e-15):
    """Total-variation distance between two Poisson laws.

    Summed over ``n`` until both upper tails are below ``tail``.
    """
    from scipy.stats import poisson

    hi = max(mean_a, mean_b)
    n_max = int(poisson.isf(tail, hi)) + 2 if hi > 0 else 1
    n = np.arange(n_max + 1, dtype=float)
    pa = np.exp(_poisson_log_pmf(mean_a, n))
    pb = np.exp(_poisson_log_pmf(mean_b, n))
    return 0.5 * float(np.sum(np.abs(pa - pb)))


def tolman_temperature(st, x, T, k):
    """Local equilibrium temperature ``T / alpha(x)``, equal to ``T`` on the observer worldline."""
    if not (math.isfinite(T) and T > 0):
        raise DomainError(f"temperature must be positive, got {T!r}")
    return T / geo.alpha_of(st, x, k.c)


def density_profile(st, gas, k, radii, direction=(1.0, 0.0, 0.0)):
    """Local intensity ``z e^{theta} K_2(gamma)/gamma`` (1/m^3) along a ray from the origin.

    Returns ``(log_intensity, intensity)`` arrays; entries that overflow are ``inf``.
    """
    radii = np.asarray(radii, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    pts = radii[:, None] * d[None, :]
    st.check_points(pts)
    log_i = gas.log_activity_reduced(k) + log_one_body_field(st, gas, k)(pts)
    with np.errstate(over="ignore"):
        return log_i, np.exp(log_i)


# --- AdS sequence and dust ---------------------------------------------------


@dataclass(frozen=True)
class AdsRow:
    k_index: int
    radius: float
    pressure: float
    gas_pressure: float
    rho_vac: float
    relative_gap: float
    proper_volume: float


def ads_pressure_sequence(gas, k, lam, k_max, r1=None):
    r"""Finite-volume pressures of AdS balls of radius ``j * r1`` for ``j = 1..k_max``.

    ``r1`` defaults to ``1/a`` with ``a = sqrt(|lambda|/3)``. The radial
    integral is accumulated shell by shell, so later balls reuse earlier
    shells. Returns a list of :class:`AdsRow`; ``relative_gap`` is
    ``|P + rho_vac_limit| / |rho_vac|`` where the limit pressure is ``-rho_vac``.
    """
    st = geo.AntiDeSitter(lam)
    if int(k_max) != k_max or k_max < 1:
        raise DomainError(f"k_max must be a positive integer, got {k_max!r}")
    r1 = 1.0 / st.a if r1 is None else float(r1)
    if not (math.isfinite(r1) and r1 > 0):
        raise DomainError(f"r1 must be positive, got {r1!r}")
    vac = VacuumEnergy.of(lam, k)
    beta = gas.beta(k)
    field = log_one_body_field(st, gas, k)
    log_ref = float(field(np.zeros((1, 3)))[0])  # weight is largest at the origin
    log_zr = gas.log_activity_reduced(k)

    def radial(rho):
        pts = np.zeros((rho.size, 3))
        pts[:, 0] = rho
        return 4.0 * math.pi * rho * rho * np.exp(field(pts) - log_ref)

    rows = []
    acc = 0.0
    for j in range(1, int(k_max) + 1):
        res = quadrature.integrate_1d(radial, (j - 1) * r1, j * r1, atol=1e-300)
        acc += res.value
        radius = j * r1
        vol = st.proper_ball_volume(radius)
        log_gas = log_zr + log_ref + math.log(acc) - math.log(beta * vol) if acc > 0 else -math.inf
        gas_p = math.exp(log_gas) if log_gas > -math.inf else 0.0
        p = gas_p - vac.rho_vac
        rows.append(AdsRow(j, radius, p, gas_p, vac.rho_vac, abs(p + vac.rho_vac) / abs(vac.rho_vac), vol))
    return rows


@dataclass(frozen=True)
class DustClosure:
    kT: float
    rest_energy_half: float
    temperature: float
    rho_mass: float


def dust_closure(gas, k, lam):
    r"""Temperature at which a dust-density ideal gas has zero pressure in a positive-lambda universe.

    With ``rho_mass = lambda c^2 / (4 pi G)`` the condition
    ``-lambda c^4/(8 pi G) + rho_mass k_B T / m = 0`` gives ``k_B T = m c^2 / 2``
    independently of ``lambda``; that value is returned in closed form.
    """
    if not (math.isfinite(lam) and lam > 0):
        raise DomainError(f"dust closure needs lambda > 0, got {lam!r}")
    half = 0.5 * gas.m * k.c * k.c
    return DustClosure(
        kT=half,
        rest_energy_half=half,
        temperature=half / k.k_B,
        rho_mass=lam * k.c * k.c / (4.0 * math.pi * k.G),
    )


# --- Newtonian limit ---------------------------------------------------------


def newtonian_activity(gas, k, log=False):
    """Newtonian activity ``(m / (2 pi hbar^2 beta))^{3/2} e^{beta mu}`` in 1/m^3."""
    beta = gas.beta(k)
    lz = 1.5 * (math.log(gas.m) - math.log(2.0 * math.pi * k.hbar**2 * beta)) + beta * gas.mu
    return lz if log else _exp_checked(lz, "Newtonian activity")


def _log_newtonian_field(st, gas, k):
    beta = gas.beta(k)

    def field(pts):
        pts = np.asarray(pts, dtype=float)
        a2 = geo.alpha_second_deriv_fd(st, pts, k)
        return -beta * gas.m * 0.5 * np.broadcast_to(a2, pts.shape[:-1])

    return field


@dataclass(frozen=True)
class NewtonianReport:
    z_newt: float
    log_z_newt: float
    log_z_newt_integral: float
    z_newt_integral_error: float
    log_partition: float
    pressure_newt: float
    rho_vac: float
    chart_volume: float

    def as_dict(self):
        return {
            "z_newt_per_m3": self.z_newt,
            "log_z_newt": self.log_z_newt,
            "log_boltzmann_integral": self.log_z_newt_integral,
            "boltzmann_integral_error_m3": self.z_newt_integral_error,
            "log_partition_newt": self.log_partition,
            "pressure_newt_Pa": self.pressure_newt,
            "rho_vac_J_per_m3": self.rho_vac,
            "chart_volume_m3": self.chart_volume,
        }


def newtonian_log_partition(st, region, gas, k):
    r"""``log Z_Newt = z_Newt \int_\Lambda e^{-beta m alpha''(0)/2} dx`` and the log of the integral."""
    geo._require_newtonian(st)
    integral = integrate_log_field(st, region, _log_newtonian_field(st, gas, k))
    lzn = newtonian_activity(gas, k, log=True)
    return _exp_checked(lzn + integral.log_value, "Newtonian partition log"), integral


def newtonian_pressure(st, region, gas, k, lam=None):
    """Newtonian pressure with the chart volume in the denominator; vacuum term only for ``lambda != 0``."""
    lam = st.cosmological_constant if lam is None else lam
    log_z, integral = newtonian_log_partition(st, region, gas, k)
    vac = VacuumEnergy.of(lam, k)
    beta = gas.beta(k)
    vol_c = geo.volume(st, region, "chart_lebesgue")
    rho_vac = vac.rho_vac if lam != 0 else 0.0
    p = -rho_vac + log_z / (beta * vol_c)
    lzn = newtonian_activity(gas, k, log=True)
    return NewtonianReport(
        z_newt=math.exp(lzn),
        log_z_newt=lzn,
        log_z_newt_integral=integral.log_value,
        z_newt_integral_error=integral.error,
        log_partition=log_z,
        pressure_newt=p,
        rho_vac=rho_vac,
        chart_volume=vol_c,
    )


@dataclass(frozen=True)
class SweepRow:
    c: float
    theta: float
    mean_rel: float
    mean_newt: float
    gap: float
    relative_gap: float
    tv: float


@dataclass(frozen=True)
class SweepResult:
    rows: list
    threshold: float

    @property
    def tv_decreasing(self):
        tv = [r.tv for r in self.rows]
        return all(b < a for a, b in zip(tv, tv[1:]))

    @property
    def gap_decreasing(self):
        g = [r.gap for r in self.rows]
        return all(b < a for a, b in zip(g, g[1:]))

    @property
    def gap_ratios(self):
        return [a.gap / b.gap for a, b in zip(self.rows, self.rows[1:])]

    @property
    def converged(self):
        return bool(self.rows) and self.rows[-1].tv < self.threshold


def newtonian_limit_sweep(st, region, gas, k_base, c_values, threshold=1e-4):
    """Compare relativistic and Newtonian Poisson occupation laws along increasing ``c``.

    The Newtonian mean ``z_Newt * int e^{-beta U} dx`` does not depend on
    ``c`` and is computed once; each ``c`` gives one :class:`SweepRow`.
    """
    geo._require_newtonian(st)
    cs = [float(c) for c in c_values]
    if not cs or any(c <= 0 for c in cs) or any(b <= a for a, b in zip(cs, cs[1:])):
        raise DomainError("c_values must be positive and strictly increasing")
    log_zn, _ = newtonian_log_partition(st, region, gas, k_base)
    mean_newt = log_zn

    def one(c):
        k = k_base.with_c(c)
        n, _, _ = expected_particles(st, region, gas, k)
        gap = abs(n - mean_newt)
        return SweepRow(c, gas.theta(k), n, mean_newt, gap, gap / mean_newt, poisson_tv(n, mean_newt))

    return SweepResult(ordered_map(one, cs), threshold)
