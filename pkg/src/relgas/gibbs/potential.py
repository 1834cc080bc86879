"""Configurations, boundary conditions and finite-range interaction potentials.

Pair and many-body terms are functions of proper distances on the spatial
slice (see :func:`relgas.geometry.proper_distance`). The vacuum term
``|Lambda|_proper * rho_vac`` is the empty-configuration energy; the
one-body term lives in the intensity weight and is not part of any energy
computed here.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .. import geometry as geo
from ..errors import DomainError, ModelError
from ..thermo import VacuumEnergy

__all__ = [
    "Configuration",
    "BoundaryCondition",
    "NBodyTerm",
    "Potential",
    "conditional_energy",
    "interaction_energy",
    "local_energy",
]


def _points(arr):
    p = np.asarray(arr, dtype=float).reshape(-1, 3)
    if not np.all(np.isfinite(p)):
        raise DomainError("configuration points must be finite")
    return p


@dataclass(frozen=True)
class Configuration:
    """Finite set of distinct chart points inside ``region``."""

    points: np.ndarray
    region: geo.Region

    def __post_init__(self):
        p = _points(self.points)
        if p.shape[0] and not np.all(self.region.contains(p)):
            raise DomainError("configuration points must lie inside the region")
        if p.shape[0] > 1 and np.unique(p, axis=0).shape[0] != p.shape[0]:
            raise DomainError("configuration points must be distinct")
        object.__setattr__(self, "points", p)

    @property
    def n(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class BoundaryCondition:
    """Fixed points outside the region; empty by default."""

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def validate(self, region):
        p = _points(self.points)
        if p.shape[0] and np.any(region.contains(p)):
            raise DomainError("boundary points must lie outside the region")
        object.__setattr__(self, "points", p)
        return self

    @property
    def n(self):
        return _points(self.points).shape[0]


@dataclass(frozen=True)
class NBodyTerm:
    """``order``-body term ``fn(distance_matrix) -> J``, zero when the subset diameter exceeds ``range_R``."""

    order: int
    fn: object
    range_R: float

    def __post_init__(self):
        if self.order < 3:
            raise DomainError("many-body terms start at order 3")
        if not self.range_R > 0:
            raise DomainError("many-body range must be positive")


@dataclass(frozen=True)
class Potential:
    r"""Pair potential with optional hard core and many-body terms.

    Parameters
    ----------
    phi2 : callable or None
        Vectorised pair energy of proper distance (J), consulted only for
        ``r_hc <= d <= range_R``. ``None`` means no smooth pair part.
    range_R : float
        Interaction range in metres; ``inf`` marks an infinite-range
        potential (accepted for energies, rejected by the certificate).
    hard_core : float
        Pairs closer than this have infinite energy.
    stability_B : float or None
        Superstability constant: interaction energies satisfy
        ``V >= -B n``. ``None`` means unknown.
    higher : tuple of NBodyTerm
    """

    phi2: object = None
    range_R: float = 0.0
    hard_core: float = 0.0
    stability_B: float = 0.0
    higher: tuple = ()
    name: str = "custom"

    def __post_init__(self):
        if self.hard_core < 0 or not math.isfinite(self.hard_core):
            raise DomainError("hard-core radius must be finite and >= 0")
        if math.isnan(self.range_R) or self.range_R < 0:
            raise DomainError("range must be >= 0")
        if self.hard_core > 0 and self.range_R < self.hard_core:
            raise DomainError("hard-core radius cannot exceed the range")
        if self.stability_B is not None and not (self.stability_B >= 0 and math.isfinite(self.stability_B)):
            raise DomainError("stability constant must be finite and >= 0")

    # factories
    @classmethod
    def ideal(cls, range_R=0.0):
        return cls(None, range_R, 0.0, 0.0, (), "ideal")

    @classmethod
    def hard_spheres(cls, r_hc):
        if not r_hc > 0:
            raise DomainError("hard-core radius must be positive")
        return cls(None, r_hc, r_hc, 0.0, (), "hard_core")

    @classmethod
    def square_well(cls, r_hc, range_R, depth):
        """Hard core plus an attractive well ``-depth`` on ``[r_hc, range_R]``.

        ``B`` follows from packing: a point has at most
        ``((2 R + r_hc) / r_hc)^3 - 1`` neighbours within ``R`` when all
        pairs are ``r_hc`` apart (flat-space volume count).
        """
        if not (r_hc > 0 and range_R > r_hc and depth >= 0):
            raise DomainError("square well needs 0 < r_hc < R and depth >= 0")
        neighbours = ((2.0 * range_R + r_hc) / r_hc) ** 3 - 1.0
        B = 0.5 * depth * neighbours

        def phi(d):
            return np.full_like(np.asarray(d, dtype=float), -depth)

        return cls(phi, range_R, r_hc, B, (), "square_well")

    @classmethod
    def infinite_range(cls, phi2, stability_B=None):
        return cls(phi2, math.inf, 0.0, stability_B, (), "infinite_range")

    @property
    def is_ideal(self):
        return self.phi2 is None and self.hard_core == 0.0 and not self.higher

    @property
    def max_range(self):
        return max([self.range_R] + [t.range_R for t in self.higher])

    def pair_energy(self, d):
        """Pair energies at proper distances ``d`` (``inf`` inside the hard core)."""
        d = np.asarray(d, dtype=float)
        out = np.zeros_like(d)
        if self.hard_core > 0:
            out = np.where(d < self.hard_core, np.inf, out)
        if self.phi2 is not None:
            live = (d >= self.hard_core) & (d <= self.range_R)
            if np.any(live):
                vals = np.asarray(self.phi2(d[live]), dtype=float)
                out = out.copy()
                out[live] = vals
        return out

    def boltzmann_pair_minus_one(self, d, beta):
        """``exp(-beta phi2(d)) - 1``, using ``expm1``."""
        e = self.pair_energy(d)
        with np.errstate(over="ignore"):
            return np.where(np.isinf(e), -1.0, np.expm1(-beta * np.where(np.isinf(e), 0.0, e)))


def _distance_matrix(st, pts):
    n = pts.shape[0]
    dm = np.zeros((n, n))
    for i in range(n):
        dm[i] = st.proper_distance(pts[i], pts)
    return dm


def _higher_energy(term, st, pts, must_include):
    """Sum of one many-body term over subsets containing at least one index in ``must_include``."""
    total = 0.0
    n = pts.shape[0]
    if n < term.order:
        return 0.0
    dm = _distance_matrix(st, pts)
    for idx in itertools.combinations(range(n), term.order):
        if must_include is not None and not any(i in must_include for i in idx):
            continue
        sub = dm[np.ix_(idx, idx)]
        if sub.max() > term.range_R:
            continue
        total += float(term.fn(sub))
    return total


def local_energy(xi, others, boundary, pot, st):
    """Energy of all interacting subsets containing ``xi``, given the other points.

    ``others`` are the remaining region points and ``boundary`` the fixed
    exterior points. Returns ``inf`` on a hard-core overlap.
    """
    xi = np.asarray(xi, dtype=float)
    env = others if boundary.shape[0] == 0 else np.vstack([others, boundary])
    if pot.is_ideal or env.shape[0] == 0:
        return 0.0
    e = 0.0
    if pot.phi2 is not None or pot.hard_core > 0:
        d = st.proper_distance(xi, env)
        near = d <= pot.range_R
        if np.any(near):
            vals = pot.pair_energy(d[near])
            e = float(np.sum(vals))
            if math.isinf(e):
                return math.inf
    for term in pot.higher:
        allp = np.vstack([xi[None, :], env])
        e += _higher_energy(term, st, allp, {0})
    return e


def interaction_energy(points, boundary, pot, st):
    """Interaction energy of the region points given the boundary (no vacuum, no one-body term)."""
    p = _points(points)
    b = _points(boundary)
    n = p.shape[0]
    if pot.is_ideal or n == 0:
        return 0.0
    e = 0.0
    if pot.phi2 is not None or pot.hard_core > 0:
        for i in range(n):
            env = np.vstack([p[i + 1 :], b])
            if env.shape[0] == 0:
                continue
            d = st.proper_distance(p[i], env)
            near = d <= pot.range_R
            if np.any(near):
                e += float(np.sum(pot.pair_energy(d[near])))
                if math.isinf(e):
                    return math.inf
    if pot.higher:
        allp = np.vstack([p, b])
        inside = set(range(n))
        for term in pot.higher:
            e += _higher_energy(term, st, allp, inside)
    return e


def conditional_energy(x, s, pot, st, region, lam, k):
    """Energy of configuration ``x`` in ``region`` given boundary ``s``, including the vacuum term.

    Returns ``|Lambda|_proper * rho_vac`` plus every interacting subset that
    meets ``x``; ``inf`` on a hard-core overlap.
    """
    if not isinstance(x, Configuration):
        x = Configuration(x, region)
    if not isinstance(s, BoundaryCondition):
        s = BoundaryCondition(s)
    s.validate(region)
    vac = VacuumEnergy.of(lam, k).rho_vac * geo.volume(st, region, "proper_riemannian")
    return vac + interaction_energy(x.points, s.points, pot, st)


def require_superstable(pot):
    if pot.stability_B is None:
        raise ModelError("potential has no stability constant B")
