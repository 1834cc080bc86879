r"""Spacetimes, Fermi-chart regions and the Killing-norm factor alpha.

Every spacetime here is described on the Fermi chart of a distinguished
observer: points are Cartesian chart coordinates ``x = (x1, x2, x3)`` in
metres, and the timelike Killing field has norm ``alpha(x) * c``. Four of the
five models are static and spherically symmetric with spatial metric

.. math::
    d\rho^2 + f(\rho)^2 (d\vartheta^2 + \sin^2\vartheta\, d\varphi^2),

so alpha, proper volumes and proper distances reduce to functions of the
chart radius. The Kerr circular orbit uses the second-order Fermi transforms
to Boyer-Lindquist ``(r, theta)`` and the closed-form Killing field of the
orbit; its chart is only trusted inside ``trust_fraction * r0``.

Units are SI throughout, with the speed of light kept as a free parameter so
that Newtonian limits are literal sweeps ``c -> infinity`` (``y = 1/c -> 0``).
"""

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import quadrature
from .errors import DomainError, UnsupportedLimitError

__all__ = [
    "PhysicalConstants",
    "GasSpec",
    "Spacetime",
    "Minkowski",
    "EinsteinStatic",
    "DeSitter",
    "AntiDeSitter",
    "KerrCircularOrbit",
    "Region",
    "Ball",
    "Box",
    "Shell",
    "check_region",
    "alpha_of",
    "alpha_excess",
    "gamma_of",
    "volume",
    "alpha_second_deriv_fd",
    "kerr_fermi_to_bl",
    "kerr_newtonian_potential_fermi",
    "kerr_newtonian_potential_bl",
    "kerr_grid",
    "kerr_quadratic_fit",
    "inverse_metric",
    "mass_shell_p0",
    "mass_shell_residual",
    "proper_distance",
]


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class PhysicalConstants:
    """Speed of light, reduced Planck constant, Newton's G and Boltzmann's k (SI defaults)."""

    c: float = 299_792_458.0
    hbar: float = 1.054_571_817e-34
    G: float = 6.674_30e-11
    k_B: float = 1.380_649e-23

    def __post_init__(self):
        for name in ("c", "hbar", "G", "k_B"):
            _positive(name, getattr(self, name))

    @classmethod
    def natural(cls):
        """All four constants equal to one."""
        return cls(c=1.0, hbar=1.0, G=1.0, k_B=1.0)

    def with_c(self, c):
        return replace(self, c=float(c))


@dataclass(frozen=True)
class GasSpec:
    """Particle mass ``m`` (kg), temperature ``T`` (K) and chemical potential ``mu`` (J)."""

    m: float
    T: float
    mu: float = 0.0

    def __post_init__(self):
        _positive("m", self.m)
        _positive("T", self.T)
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu!r}")

    def beta(self, k):
        return 1.0 / (k.k_B * self.T)

    def theta(self, k):
        """Reduced rest energy ``beta m c^2``."""
        return self.m * k.c * k.c / (k.k_B * self.T)

    def log_momentum_prefactor(self, k):
        """``log(4 pi (m c)^3 / (2 pi hbar)^3)``."""
        return math.log(4.0 * math.pi) + 3.0 * (math.log(self.m * k.c) - math.log(2.0 * math.pi * k.hbar))

    def log_activity_reduced(self, k):
        """Log of the activity with the rest-energy factor ``e^{beta m c^2}`` removed."""
        return self.log_momentum_prefactor(k) + self.beta(k) * self.mu

    def log_activity(self, k):
        """Log of ``z = 4 pi (m c)^3/(2 pi hbar)^3 * exp(beta (m c^2 + mu))``."""
        return self.log_activity_reduced(k) + self.theta(k)


# --- spacetimes ------------------------------------------------------------


def _as_points(x):
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != 3:
        raise DomainError(f"chart points need 3 coordinates, got shape {pts.shape}")
    return pts


class Spacetime:
    """Common interface of the five spacetime models.

    Subclasses set ``name``, ``cosmological_constant``, ``chart_radius`` and
    ``supports_newtonian_limit`` and implement :meth:`alpha_excess_y`.
    """

    name = "spacetime"
    radial = True
    supports_newtonian_limit = False

    @property
    def cosmological_constant(self):
        return 0.0

    @property
    def chart_radius(self):
        return math.inf

    def check_points(self, pts):
        rho = np.linalg.norm(pts, axis=-1)
        if np.any(rho >= self.chart_radius) or not np.all(np.isfinite(rho)):
            raise DomainError(
                f"point outside the {self.name} chart domain (radius < {self.chart_radius!r} m)"
            )
        return rho

    # alpha as a function of the chart radius, for the radial models
    def alpha_radial(self, rho, c):
        raise NotImplementedError

    def alpha_excess_radial(self, rho, c):
        return self.alpha_radial(rho, c) - 1.0

    def alpha_excess_y(self, pts, y):
        """``alpha - 1`` at chart points for inverse light speed ``y``."""
        rho = np.linalg.norm(pts, axis=-1)
        c = math.inf if y == 0 else 1.0 / y
        return self.alpha_excess_radial(rho, c)

    def alpha_excess_one(self, pt, y):
        """Scalar ``alpha - 1`` at one chart point (no domain check)."""
        return float(self.alpha_excess_y(np.asarray(pt, dtype=float), y))

    # spatial metric dρ² + f(ρ)² dΩ²: f(ρ)/ρ
    def area_ratio(self, rho):
        return np.ones_like(np.asarray(rho, dtype=float))

    def proper_ball_volume(self, radius):
        return 4.0 * math.pi * radius**3 / 3.0

    def embed(self, pts):
        """Map chart points into a flat ambient space where chords give distances."""
        return pts

    def proper_distance(self, x, ys):
        return np.linalg.norm(np.asarray(ys, dtype=float) - np.asarray(x, dtype=float), axis=-1)

    def cos_angle_at_distance(self, rho1, rho2, d):
        """Cosine of the chart angle between two radii at proper separation ``d``."""
        return (rho1 * rho1 + rho2 * rho2 - d * d) / (2.0 * rho1 * rho2)

    def cos_angle_jacobian(self, rho1, rho2, d):
        """``|d u / d d|`` for ``u`` the cosine of the chart angle."""
        return d / (rho1 * rho2)

    def distance_range(self, rho1, rho2):
        """Proper distances at chart angle 0 and pi."""
        return np.abs(rho1 - rho2), rho1 + rho2


@dataclass(frozen=True)
class Minkowski(Spacetime):
    name = "minkowski"
    supports_newtonian_limit = True

    def alpha_radial(self, rho, c):
        return np.ones_like(np.asarray(rho, dtype=float))

    def alpha_excess_radial(self, rho, c):
        return np.zeros_like(np.asarray(rho, dtype=float))

    def alpha_excess_one(self, pt, y):
        return 0.0


class _SphericalSlice(Spacetime):
    """Slices that are round 3-spheres of radius ``sphere_radius``."""

    @property
    def sphere_radius(self):
        raise NotImplementedError

    def area_ratio(self, rho):
        R = self.sphere_radius
        return np.sinc(np.asarray(rho, dtype=float) / (math.pi * R))

    def proper_ball_volume(self, radius):
        R = self.sphere_radius
        return 4.0 * math.pi * R * R * (0.5 * radius - 0.25 * R * math.sin(2.0 * radius / R))

    def embed(self, pts):
        R = self.sphere_radius
        rho = np.linalg.norm(pts, axis=-1)
        out = np.empty(pts.shape[:-1] + (4,))
        out[..., 0] = R * np.cos(rho / R)
        out[..., 1:] = pts * np.sinc(rho / (math.pi * R))[..., None]
        return out

    def proper_distance(self, x, ys):
        p = self.embed(np.asarray(x, dtype=float))
        q = self.embed(np.asarray(ys, dtype=float))
        chord = np.linalg.norm(q - p, axis=-1)
        R = self.sphere_radius
        return 2.0 * R * np.arcsin(np.minimum(chord / (2.0 * R), 1.0))

    def cos_angle_at_distance(self, rho1, rho2, d):
        R = self.sphere_radius
        return (np.cos(d / R) - np.cos(rho1 / R) * np.cos(rho2 / R)) / (np.sin(rho1 / R) * np.sin(rho2 / R))

    def cos_angle_jacobian(self, rho1, rho2, d):
        R = self.sphere_radius
        return np.sin(d / R) / (R * np.sin(rho1 / R) * np.sin(rho2 / R))

    def distance_range(self, rho1, rho2):
        R = self.sphere_radius
        return np.abs(rho1 - rho2), np.minimum(rho1 + rho2, 2.0 * math.pi * R - rho1 - rho2)


@dataclass(frozen=True)
class EinsteinStatic(_SphericalSlice):
    """Einstein static universe, ``R = 1/sqrt(lambda)``; alpha is identically 1."""

    lam: float
    name = "einstein_static"
    supports_newtonian_limit = True  # trivially: alpha''(0) = 0

    def __post_init__(self):
        _positive("lambda (Einstein static)", self.lam)

    @property
    def cosmological_constant(self):
        return self.lam

    @property
    def sphere_radius(self):
        return 1.0 / math.sqrt(self.lam)

    @property
    def chart_radius(self):
        return math.pi * self.sphere_radius

    def alpha_radial(self, rho, c):
        return np.ones_like(np.asarray(rho, dtype=float))

    def alpha_excess_radial(self, rho, c):
        return np.zeros_like(np.asarray(rho, dtype=float))

    def alpha_excess_one(self, pt, y):
        return 0.0


@dataclass(frozen=True)
class DeSitter(_SphericalSlice):
    """de Sitter, ``alpha = cos(a rho)`` with ``a = sqrt(lambda/3)``, chart up to the horizon."""

    lam: float
    name = "de_sitter"

    def __post_init__(self):
        _positive("lambda (de Sitter)", self.lam)

    @property
    def cosmological_constant(self):
        return self.lam

    @property
    def a(self):
        return math.sqrt(self.lam / 3.0)

    @property
    def sphere_radius(self):
        return 1.0 / self.a

    @property
    def chart_radius(self):
        return 0.5 * math.pi / self.a

    def alpha_radial(self, rho, c):
        return np.cos(self.a * np.asarray(rho, dtype=float))

    def alpha_excess_radial(self, rho, c):
        s = np.sin(0.5 * self.a * np.asarray(rho, dtype=float))
        return -2.0 * s * s

    def alpha_excess_one(self, pt, y):
        s = math.sin(0.5 * self.a * math.sqrt(pt[0] * pt[0] + pt[1] * pt[1] + pt[2] * pt[2]))
        return -2.0 * s * s


@dataclass(frozen=True)
class AntiDeSitter(Spacetime):
    """Anti-de Sitter, ``alpha = cosh(a rho)`` with ``a = sqrt(|lambda|/3)``; hyperbolic slices."""

    lam: float
    name = "anti_de_sitter"

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam < 0):
            raise DomainError(f"anti-de Sitter needs lambda < 0, got {self.lam!r}")

    @property
    def cosmological_constant(self):
        return self.lam

    @property
    def a(self):
        return math.sqrt(-self.lam / 3.0)

    def alpha_radial(self, rho, c):
        return np.cosh(self.a * np.asarray(rho, dtype=float))

    def alpha_excess_radial(self, rho, c):
        s = np.sinh(0.5 * self.a * np.asarray(rho, dtype=float))
        return 2.0 * s * s

    def alpha_excess_one(self, pt, y):
        s = math.sinh(0.5 * self.a * math.sqrt(pt[0] * pt[0] + pt[1] * pt[1] + pt[2] * pt[2]))
        return 2.0 * s * s

    def area_ratio(self, rho):
        ar = self.a * np.asarray(rho, dtype=float)
        safe = np.where(ar == 0.0, 1.0, ar)
        return np.where(ar == 0.0, 1.0, np.sinh(safe) / safe)

    def proper_ball_volume(self, radius):
        a = self.a
        return 4.0 * math.pi / (a * a) * (math.sinh(2.0 * a * radius) / (4.0 * a) - 0.5 * radius)

    def embed(self, pts):
        a = self.a
        rho = np.linalg.norm(pts, axis=-1)
        out = np.empty(pts.shape[:-1] + (4,))
        out[..., 0] = np.cosh(a * rho) / a
        out[..., 1:] = pts * self.area_ratio(rho)[..., None]
        return out

    def proper_distance(self, x, ys):
        p = self.embed(np.asarray(x, dtype=float))
        q = self.embed(np.asarray(ys, dtype=float))
        diff = q - p
        # Minkowski chord on the hyperboloid; the spatial part dominates
        chord2 = np.sum(diff[..., 1:] ** 2, axis=-1) - diff[..., 0] ** 2
        chord = np.sqrt(np.maximum(chord2, 0.0))
        return 2.0 / self.a * np.arcsinh(0.5 * self.a * chord)

    def cos_angle_at_distance(self, rho1, rho2, d):
        a = self.a
        return (np.cosh(a * rho1) * np.cosh(a * rho2) - np.cosh(a * d)) / (np.sinh(a * rho1) * np.sinh(a * rho2))

    def cos_angle_jacobian(self, rho1, rho2, d):
        a = self.a
        return a * np.sinh(a * d) / (np.sinh(a * rho1) * np.sinh(a * rho2))


@dataclass(frozen=True)
class KerrCircularOrbit(Spacetime):
    r"""Observer on the prograde/retrograde equatorial circular geodesic of Kerr.

    Parameters
    ----------
    M : float
        Central mass (kg).
    a : float
        Angular momentum per unit mass in m^2/s; the metric sees it only via
        ``y^2 a`` and ``y^2 a^2`` with ``y = 1/c``.
    r0 : float
        Boyer-Lindquist radius of the orbit (m).
    G, c : float
        Reference constants used to validate the orbit (``|a| <= G M / c``,
        ``r0`` outside the outer horizon, ``Delta0 > 0``, ``D^2 > 0``).
        Evaluations at other ``c`` treat the closed forms as analytic in ``y``.
    trust_fraction : float
        Chart trust radius as a fraction of ``r0``.
    """

    M: float
    a: float
    r0: float
    G: float = PhysicalConstants.G
    c: float = PhysicalConstants.c
    trust_fraction: float = 0.1
    name = "kerr_circular_orbit"
    radial = False
    supports_newtonian_limit = True

    def __post_init__(self):
        _positive("M", self.M)
        _positive("r0", self.r0)
        _positive("G", self.G)
        _positive("c", self.c)
        _positive("trust_fraction", self.trust_fraction)
        if not math.isfinite(self.a):
            raise DomainError("spin parameter a must be finite")
        bound = self.G * self.M / self.c
        if abs(self.a) > bound:
            raise DomainError(f"|a| = {abs(self.a)!r} exceeds G M / c = {bound!r}")
        y2 = 1.0 / (self.c * self.c)
        gm = self.G * self.M * y2
        r_plus = gm + math.sqrt(max(gm * gm - y2 * self.a * self.a, 0.0))
        if self.r0 <= r_plus:
            raise DomainError(f"orbit radius {self.r0!r} is not outside the horizon r+ = {r_plus!r}")
        if self.delta0(y2) <= 0 or self.d2(y2) <= 0:
            raise DomainError("no circular orbit: Delta0 or D^2 is not positive at this radius")

    @property
    def GM(self):
        return self.G * self.M

    @property
    def chart_radius(self):
        return self.trust_fraction * self.r0

    def delta0(self, y2):
        return self.r0 * self.r0 - 2.0 * self.GM * y2 * self.r0 + y2 * self.a * self.a

    def sigma0(self, y2):
        u0 = self.r0 * self.r0 + y2 * self.a * self.a
        return u0 * u0 - y2 * self.a * self.a * self.delta0(y2)

    def d2(self, y2):
        r0 = self.r0
        return 2.0 * y2 * self.a * math.sqrt(self.GM) * r0**1.5 + r0**3 - 3.0 * y2 * self.GM * r0 * r0

    def killing_components(self, y2):
        """``(K^t, K^phi)`` of the orbit's Killing field in Boyer-Lindquist coordinates."""
        D = math.sqrt(self.d2(y2))
        sq = math.sqrt(self.GM)
        return (y2 * self.a * sq + self.r0**1.5) / D, sq / D

    def fermi_offsets(self, pts, y2):
        """Second-order ``(r - r0, theta - pi/2)`` at Fermi chart points."""
        r0 = self.r0
        gm = self.GM
        d0 = self.delta0(y2)
        sd0 = math.sqrt(d0)
        x1, x2, x3 = pts[..., 0], pts[..., 1], pts[..., 2]
        dtheta = x2 / r0 - sd0 * x1 * x2 / r0**3
        dr = (
            sd0 * x1 / r0
            + (r0 * y2 * gm - y2 * self.a * self.a) * x1 * x1 / (2.0 * r0**3)
            + d0 * x2 * x2 / (2.0 * r0**3)
            + (r0 - y2 * gm) * x3 * x3 / (2.0 * r0 * r0)
        )
        return dr, dtheta

    def alpha_sq_excess_coefficient(self, dr, dtheta, y2):
        r"""``F`` with ``alpha^2 = 1 + y^2 F`` at BL offsets from the orbit point.

        Each metric term is written as its difference from the orbit value
        (where ``alpha = 1`` exactly), so no O(1) quantities cancel.
        """
        r0 = self.r0
        gm = self.GM
        a = self.a
        ya2 = y2 * a * a
        kt, kp = self.killing_components(y2)
        r = r0 + dr
        cos_t = -np.sin(dtheta)
        sin_t = np.cos(dtheta)
        cos2 = cos_t * cos_t
        rho2 = r * r + ya2 * cos2
        b1 = (-r * dr - ya2 * cos2) / (rho2 * r0)
        b2 = (-r * dr - (r0 * r + ya2) * cos2) / (rho2 * r0)
        u = r * r + ya2
        u0 = r0 * r0 + ya2
        delta = r * r - 2.0 * gm * y2 * r + ya2
        d_delta = dr * (r + r0 - 2.0 * gm * y2)
        sigma = u * u - ya2 * delta * sin_t * sin_t
        d_sigma = dr * (r + r0) * (u + u0) - ya2 * (d_delta - delta * cos2)
        n = r0 * r0 * d_sigma - self.sigma0(y2) * (dr * (r + r0) + ya2 * cos2) - r0 * r0 * sigma * cos2
        b3 = n / (rho2 * r0 * r0)
        return -2.0 * gm * kt * kt * b1 + 4.0 * y2 * gm * a * kt * kp * b2 - kp * kp * b3

    def alpha_excess_y(self, pts, y):
        y2 = y * y
        dr, dth = self.fermi_offsets(pts, y2)
        f = self.alpha_sq_excess_coefficient(dr, dth, y2)
        s = y2 * f
        if np.any(s <= -1.0):
            raise DomainError("Killing field is not timelike at this point")
        return s / (1.0 + np.sqrt(1.0 + s))

    def alpha_bl(self, r, theta, c):
        """alpha at Boyer-Lindquist ``(r, theta)`` from the metric and Killing field directly."""
        y2 = 1.0 / (c * c)
        r = np.asarray(r, dtype=float)
        return 1.0 + self._excess_bl(r - self.r0, np.asarray(theta, dtype=float) - 0.5 * math.pi, y2)

    def _excess_bl(self, dr, dtheta, y2):
        s = y2 * self.alpha_sq_excess_coefficient(dr, dtheta, y2)
        return s / (1.0 + np.sqrt(1.0 + s))


# --- regions ---------------------------------------------------------------


class Region:
    """Compact region of the Fermi chart, centred at the origin."""

    radial = False

    @property
    def outer_radius(self):
        raise NotImplementedError

    @property
    def chart_volume(self):
        raise NotImplementedError

    def contains(self, pts):
        raise NotImplementedError


@dataclass(frozen=True)
class Ball(Region):
    radius: float
    radial = True

    def __post_init__(self):
        _positive("ball radius", self.radius)

    @property
    def inner_radius(self):
        return 0.0

    @property
    def outer_radius(self):
        return self.radius

    @property
    def chart_volume(self):
        return 4.0 * math.pi * self.radius**3 / 3.0

    def contains(self, pts):
        p = np.asarray(pts, dtype=float)
        return np.sum(p * p, axis=-1) < self.radius * self.radius

    def contains_one(self, p):
        return p[0] * p[0] + p[1] * p[1] + p[2] * p[2] < self.radius * self.radius


@dataclass(frozen=True)
class Shell(Region):
    inner: float
    outer: float
    radial = True

    def __post_init__(self):
        if not (math.isfinite(self.inner) and self.inner >= 0):
            raise DomainError(f"shell inner radius must be >= 0, got {self.inner!r}")
        _positive("shell outer radius", self.outer)
        if self.outer <= self.inner:
            raise DomainError("shell outer radius must exceed the inner radius")

    @property
    def inner_radius(self):
        return self.inner

    @property
    def outer_radius(self):
        return self.outer

    @property
    def chart_volume(self):
        return 4.0 * math.pi * (self.outer**3 - self.inner**3) / 3.0

    def contains(self, pts):
        p = np.asarray(pts, dtype=float)
        r2 = np.sum(p * p, axis=-1)
        return (r2 >= self.inner * self.inner) & (r2 < self.outer * self.outer)

    def contains_one(self, p):
        r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
        return self.inner * self.inner <= r2 < self.outer * self.outer


@dataclass(frozen=True)
class Box(Region):
    half_extents: tuple = field(default=(1.0, 1.0, 1.0))

    def __post_init__(self):
        h = tuple(float(v) for v in self.half_extents)
        if len(h) != 3:
            raise DomainError("box needs three half extents")
        for v in h:
            _positive("box half extent", v)
        object.__setattr__(self, "half_extents", h)

    @property
    def outer_radius(self):
        return math.sqrt(sum(v * v for v in self.half_extents))

    @property
    def chart_volume(self):
        h1, h2, h3 = self.half_extents
        return 8.0 * h1 * h2 * h3

    def contains(self, pts):
        p = np.abs(np.asarray(pts, dtype=float))
        return np.all(p < np.asarray(self.half_extents), axis=-1)

    def contains_one(self, p):
        h1, h2, h3 = self.half_extents
        return abs(p[0]) < h1 and abs(p[1]) < h2 and abs(p[2]) < h3


def check_region(st, region):
    """Raise :class:`DomainError` unless ``region`` lies strictly inside the chart of ``st``."""
    if region.outer_radius >= st.chart_radius:
        raise DomainError(
            f"region reaches chart radius {region.outer_radius!r} m, "
            f"beyond the {st.name} chart domain {st.chart_radius!r} m"
        )


# --- alpha and gamma -------------------------------------------------------


def alpha_excess(st, x, c):
    """``alpha(x) - 1`` computed without cancellation."""
    pts = _as_points(x)
    st.check_points(pts)
    out = st.alpha_excess_y(pts, 1.0 / c)
    return float(out) if np.ndim(out) == 0 else out


def alpha_of(st, x, c):
    """Killing-norm factor ``alpha`` with ``|K| = alpha c`` at chart point(s) ``x``."""
    ex = alpha_excess(st, x, c)
    return 1.0 + ex


def gamma_of(st, x, gas, k):
    """Bessel argument ``gamma = alpha(x) * beta m c^2``."""
    return alpha_of(st, x, k.c) * gas.theta(k)


# --- volumes ---------------------------------------------------------------


def volume(st, region, kind="proper_riemannian"):
    """Chart (Euclidean) or proper (Riemannian) volume of ``region`` in m^3.

    Kerr regions report the chart volume for both kinds: the printed
    transforms fix the spatial metric only to flat order, so the proper
    volume differs from it by O((|x|/r0)^2) that cannot be resolved here.
    """
    check_region(st, region)
    if kind == "chart_lebesgue":
        return region.chart_volume
    if kind != "proper_riemannian":
        raise DomainError(f"unknown volume kind {kind!r}")
    if isinstance(st, (Minkowski, KerrCircularOrbit)):
        return region.chart_volume
    if isinstance(region, Ball):
        return st.proper_ball_volume(region.radius)
    if isinstance(region, Shell):
        return st.proper_ball_volume(region.outer) - st.proper_ball_volume(region.inner)
    h = np.asarray(region.half_extents)

    def density(pts):
        ratio = st.area_ratio(np.linalg.norm(pts, axis=-1))
        return ratio * ratio

    res = quadrature.integrate(density, np.zeros(3), h)
    return 8.0 * res.value


# --- Newtonian potential via finite differences in y = 1/c -----------------


def _require_newtonian(st):
    if not st.supports_newtonian_limit:
        raise UnsupportedLimitError(
            f"{st.name}: alpha(0) = 1 and alpha'(0) = 0 fail for this Killing field, "
            "so there is no Newtonian analogue"
        )


def alpha_second_deriv_fd(st, x, k, h=None, levels=6, return_error=False):
    r"""``d^2 alpha / dy^2`` at ``y = 0`` (m^2/s^2) by one-sided differences in ``y``.

    The one-sided second difference ``[e(0) - 2 e(h) + e(2h)] / h^2`` of the
    excess ``e(y) = alpha(y) - 1`` is formed at ``h, h/2, ..., h/2^(levels-1)``
    (default ``h = 1e-4 / c``), Richardson-extrapolated twice (removing O(h)
    and O(h^2)) over each consecutive triple, and the triple whose
    extrapolant changes least against its successor is returned.

    ``m * alpha''(0) / 2`` is the Newtonian potential energy of a particle.
    """
    _require_newtonian(st)
    pts = _as_points(x)
    st.check_points(pts)
    if h is None:
        h = 1e-4 / k.c
    steps = h * 0.5 ** np.arange(levels)
    e0 = st.alpha_excess_y(pts, 0.0)
    d = np.stack(
        [(e0 - 2.0 * st.alpha_excess_y(pts, s) + st.alpha_excess_y(pts, 2.0 * s)) / (s * s) for s in steps]
    )
    r1 = 2.0 * d[1:] - d[:-1]
    r2 = (4.0 * r1[1:] - r1[:-1]) / 3.0
    diffs = np.abs(np.diff(r2, axis=0))
    best = np.argmin(diffs, axis=0)
    est = np.take_along_axis(r2[1:], best[None, ...], axis=0)[0]
    err = np.take_along_axis(diffs, best[None, ...], axis=0)[0]
    if np.ndim(est) == 0:
        est, err = float(est), float(err)
    return (est, err) if return_error else est


def newtonian_potential(st, x, m, k):
    """``U(x) = m alpha''(0) / 2`` in joules."""
    return 0.5 * m * alpha_second_deriv_fd(st, x, k)


# --- Kerr closed forms ------------------------------------------------------


def kerr_fermi_to_bl(x, st, c):
    """Boyer-Lindquist ``(r, theta)`` of Fermi point(s) ``x`` to second order."""
    pts = _as_points(x)
    st.check_points(pts)
    dr, dth = st.fermi_offsets(pts, 1.0 / (c * c))
    r = st.r0 + dr
    theta = 0.5 * math.pi + dth
    if np.ndim(r) == 0:
        return float(r), float(theta)
    return r, theta


def kerr_newtonian_potential_fermi(x, st, m):
    """Quadratic Newtonian potential on the Fermi chart (J)."""
    pts = _as_points(x)
    coef = st.GM * m / (2.0 * st.r0**3)
    out = coef * (-3.0 * pts[..., 0] ** 2 + pts[..., 1] ** 2)
    return float(out) if np.ndim(out) == 0 else out


def kerr_newtonian_potential_bl(r, theta, st, m):
    """Gravitational plus centrifugal potential in Boyer-Lindquist coordinates (J), zero on the orbit."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("Boyer-Lindquist radius must be positive")
    theta = np.asarray(theta, dtype=float)
    gmm = st.GM * m
    r0 = st.r0
    s = np.sin(theta)
    # grouped so that the orbit point gives an exact zero
    out = gmm * ((r - r0) / (r * r0) + (r0 * r0 - (r * s) ** 2) / (2.0 * r0**3))
    return float(out) if np.ndim(out) == 0 else out


QUADRATIC_MONOMIALS = ((2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1))


def kerr_grid(st, n=5, extent_fraction=0.01):
    """Cubic ``n^3`` grid of Fermi points with ``|x_i| <= extent_fraction * r0``."""
    g = np.linspace(-extent_fraction * st.r0, extent_fraction * st.r0, n)
    return np.array(list(itertools.product(g, g, g)))


def kerr_quadratic_fit(st, k, pts, degree=4):
    """Least-squares Taylor fit of the FD ``alpha''(0)`` field on ``pts``.

    All monomials up to ``degree`` enter the design so that the cubic and
    quartic parts of the field (relative size ``|x|/r0``) do not leak into
    the quadratic coefficients. Returns ``(coef, values)`` where ``coef`` is
    ordered as ``QUADRATIC_MONOMIALS`` (x1^2, x2^2, x3^2, x1x2, x1x3, x2x3), in
    1/s^2 for ``alpha''`` measured in m^2/s^2.
    """
    pts = _as_points(pts)
    vals = alpha_second_deriv_fd(st, pts, k)
    scale = float(np.max(np.abs(pts))) or 1.0
    u = pts / scale  # conditioning
    powers = [p for p in itertools.product(range(degree + 1), repeat=3) if sum(p) <= degree]
    design = np.column_stack([np.prod(u ** np.array(p), axis=1) for p in powers])
    sol = np.linalg.lstsq(design, vals, rcond=None)[0]
    coef = np.array([sol[powers.index(p)] for p in QUADRATIC_MONOMIALS]) / scale**2
    return coef, vals


# --- metric, distances, mass shell -----------------------------------------


def inverse_metric(st, x, c):
    """Inverse spacetime metric at chart point ``x`` in ``(t, x1, x2, x3)`` coordinates.

    Available for the four static, spherically symmetric models.
    """
    if not st.radial:
        raise DomainError(f"no closed-form Fermi-chart metric for {st.name}")
    p = np.asarray(x, dtype=float)
    rho = float(st.check_points(p))
    alpha = float(st.alpha_radial(rho, c))
    g = np.zeros((4, 4))
    g[0, 0] = -1.0 / (c * c * alpha * alpha)
    if rho == 0.0:
        g[1:, 1:] = np.eye(3)
        return g
    n = p / rho
    ratio = float(st.area_ratio(rho))
    nn = np.outer(n, n)
    g[1:, 1:] = nn + (np.eye(3) - nn) / (ratio * ratio)
    return g


def mass_shell_p0(ginv, p_spatial, m, c):
    r"""Time component ``p_0`` of the covector on the mass shell ``g^{ab} p_a p_b = -m^2 c^2``."""
    ginv = np.asarray(ginv, dtype=float)
    p = np.asarray(p_spatial, dtype=float)
    g00 = ginv[0, 0]
    if not g00 < 0:
        raise DomainError("g^00 must be negative for a timelike time coordinate")
    g0i = ginv[0, 1:]
    gij = ginv[1:, 1:]
    b = g0i @ p
    disc = b * b - g00 * (p @ gij @ p) - g00 * m * m * c * c
    if disc < 0:
        raise DomainError("negative discriminant in the mass-shell relation")
    return float((-b + math.sqrt(disc)) / g00)


def mass_shell_residual(ginv, p0, p_spatial, m, c):
    """Relative residual of ``g^{ab} p_a p_b + m^2 c^2``."""
    full = np.concatenate([[p0], np.asarray(p_spatial, dtype=float)])
    h = full @ np.asarray(ginv, dtype=float) @ full
    return abs(h + m * m * c * c) / (m * m * c * c)


def proper_distance(st, x, ys):
    """Proper distance on the spatial slice from ``x`` to each of ``ys``.

    Exact for Minkowski, the two spherical slices and hyperbolic (AdS)
    slices; the Euclidean chart distance for Kerr.
    """
    return st.proper_distance(x, ys)
