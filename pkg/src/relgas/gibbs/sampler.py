r"""Grand-canonical Metropolis-Hastings sampler for the local specification.

The target is the density of the specification with respect to the
Lebesgue-Poisson measure on configurations of ``region``,

.. math::
    f(x) = \prod_i z\,w(x_i)\; e^{-\beta \tilde V(x \mid s)},

where ``z w(x) = z e^{-beta phi_1(x)}`` is the local intensity and
``V~`` the interaction energy (the vacuum term is a constant factor and
drops out of every ratio). Moves are birth, death and translation, picked
with fixed probabilities. Birth points come from a proposal density ``q``
that is evaluated exactly in the acceptance ratio, so any ``q`` that is
positive on the region gives detailed balance; a piecewise-constant radial
table close to the intensity keeps acceptance high.

A "sweep" is ``moves_per_sweep`` attempted moves; statistics are recorded
once per retained sweep.
"""

import bisect
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats as sps
from scipy.special import logsumexp

from .. import geometry as geo
from ..errors import DomainError, ModelError
from ..specfun import log_one_body_weight, log_one_body_weight_scalar
from ..thermo import log_one_body_field
from .potential import BoundaryCondition, interaction_energy, local_energy, require_superstable

__all__ = [
    "MOVE_PROBABILITIES",
    "RadialTableProposal",
    "UniformBoxProposal",
    "ChainStats",
    "ChainResult",
    "GCMCSampler",
    "gcmc_chain",
    "specification_probability",
    "count_event",
    "poisson_chi_square",
]

MOVE_PROBABILITIES = (0.35, 0.35, 0.30)
MOVES = ("birth", "death", "translate")


# --- birth proposals ---------------------------------------------------------


def _unit_vectors(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]


class RadialTableProposal:
    """Piecewise-constant density on spherical bins of a ball or shell.

    Bin probabilities follow the intensity at bin midpoints (along the x1
    axis); within a bin points are uniform in chart volume.
    """

    def __init__(self, region, log_w=None, nbins=64, st=None):
        lo = region.inner_radius
        hi = region.outer_radius
        self.edges = np.linspace(lo, hi, nbins + 1)
        self.cubes = self.edges**3
        vols = 4.0 * math.pi / 3.0 * np.diff(self.cubes)
        if log_w is None:
            logp = np.log(vols)
        else:
            mids = 0.5 * (self.edges[1:] + self.edges[:-1])
            pts = np.zeros((nbins, 3))
            pts[:, 0] = mids
            logp = np.log(vols) + log_w(pts)
        logp = logp - logsumexp(logp)
        self.prob = np.exp(logp)
        self.prob /= self.prob.sum()
        self.log_density_bins = np.log(self.prob) - np.log(vols)
        self.cdf = np.cumsum(self.prob)
        self.cdf[-1] = 1.0
        self._edges = self.edges.tolist()
        self._log_bins = self.log_density_bins.tolist()

    def sample(self, rng, size):
        b = np.searchsorted(self.cdf, rng.random(size), side="right")
        b = np.minimum(b, len(self.prob) - 1)
        u = rng.random(size)
        r = np.cbrt(self.cubes[b] + u * (self.cubes[b + 1] - self.cubes[b]))
        r = np.clip(r, self.edges[b], np.nextafter(self.edges[b + 1], 0.0))
        return r[:, None] * _unit_vectors(rng, size)

    def log_density(self, pts):
        r = np.linalg.norm(np.atleast_2d(pts), axis=-1)
        b = np.clip(np.searchsorted(self.edges, r, side="right") - 1, 0, len(self.prob) - 1)
        return self.log_density_bins[b]

    def log_density_one(self, pt):
        r = math.sqrt(pt[0] * pt[0] + pt[1] * pt[1] + pt[2] * pt[2])
        b = bisect.bisect_right(self._edges, r) - 1
        return self._log_bins[min(max(b, 0), len(self._log_bins) - 1)]


class UniformBoxProposal:
    """Uniform density on a box."""

    def __init__(self, region):
        self.h = np.asarray(region.half_extents)
        self._logq = -math.log(region.chart_volume)

    def sample(self, rng, size):
        return (2.0 * rng.random((size, 3)) - 1.0) * self.h

    def log_density(self, pts):
        return np.full(np.atleast_2d(pts).shape[0], self._logq)

    def log_density_one(self, pt):
        return self._logq


def default_proposal(st, region, log_w):
    if isinstance(region, geo.Box):
        return UniformBoxProposal(region)
    return RadialTableProposal(region, log_w if st.radial else None)


# --- statistics --------------------------------------------------------------


@dataclass(frozen=True)
class ChainStats:
    """Occupation histogram, acceptance counts and batch-mean accumulators.

    All accumulators are integers, so :meth:`merge` is exact, associative
    and independent of order.
    """

    seeds: tuple
    sweeps: int
    burn_in: int
    moves_per_sweep: int
    attempts: dict
    accepts: dict
    histogram: tuple
    batch_size: int
    n_batches: int
    batch_sum: int
    batch_sumsq: int

    @property
    def seed(self):
        return self.seeds[0] if len(self.seeds) == 1 else self.seeds

    @property
    def recorded(self):
        return int(sum(self.histogram))

    @property
    def acceptance_rates(self):
        return {m: (self.accepts[m] / self.attempts[m] if self.attempts[m] else 0.0) for m in MOVES}

    @property
    def mean_n(self):
        tot = sum(i * c for i, c in enumerate(self.histogram))
        return tot / self.recorded if self.recorded else math.nan

    @property
    def stderr(self):
        """Monte Carlo standard error of ``mean_n`` from non-overlapping batch means."""
        nb = self.n_batches
        if nb < 2:
            return math.nan
        L = self.batch_size
        s = Fraction(self.batch_sum, L)
        ss = Fraction(self.batch_sumsq, L * L)
        var = (ss - s * s / nb) / (nb - 1)
        return math.sqrt(float(var) / nb)

    def merge(self, other):
        if other.batch_size != self.batch_size:
            raise DomainError("cannot merge chains with different batch sizes")
        n = max(len(self.histogram), len(other.histogram))
        h = tuple(
            (self.histogram[i] if i < len(self.histogram) else 0) + (other.histogram[i] if i < len(other.histogram) else 0)
            for i in range(n)
        )
        return ChainStats(
            seeds=tuple(sorted(self.seeds + other.seeds)),
            sweeps=self.sweeps + other.sweeps,
            burn_in=self.burn_in + other.burn_in,
            moves_per_sweep=self.moves_per_sweep if self.moves_per_sweep == other.moves_per_sweep else -1,
            attempts={m: self.attempts[m] + other.attempts[m] for m in MOVES},
            accepts={m: self.accepts[m] + other.accepts[m] for m in MOVES},
            histogram=h,
            batch_size=self.batch_size,
            n_batches=self.n_batches + other.n_batches,
            batch_sum=self.batch_sum + other.batch_sum,
            batch_sumsq=self.batch_sumsq + other.batch_sumsq,
        )

    def as_dict(self):
        return {
            "seed": self.seed if len(self.seeds) == 1 else list(self.seeds),
            "sweeps": self.sweeps,
            "burn_in": self.burn_in,
            "moves_per_sweep": self.moves_per_sweep,
            "attempts": dict(self.attempts),
            "accepts": dict(self.accepts),
            "acceptance_rates": self.acceptance_rates,
            "histogram_n": list(self.histogram),
            "mean_n": self.mean_n,
            "stderr_n": self.stderr,
            "batch_size_sweeps": self.batch_size,
            "n_batches": self.n_batches,
        }

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True)


@dataclass
class ChainResult:
    stats: ChainStats
    configurations: list = field(default_factory=list)
    observations: np.ndarray = None
    final: np.ndarray = None

    def observation_mean(self):
        """Mean of the observed values and its batch-means standard error."""
        obs = self.observations
        L = self.stats.batch_size
        nb = obs.size // L
        mean = float(np.mean(obs))
        if nb < 2:
            return mean, math.nan
        bm = obs[: nb * L].reshape(nb, L).mean(axis=1)
        return mean, float(np.std(bm, ddof=1) / math.sqrt(nb))


# --- sampler -----------------------------------------------------------------


class GCMCSampler:
    """Birth/death/translate kernel for one region, spacetime, gas and potential.

    Parameters
    ----------
    step : float, optional
        Half-width of the cubic translation proposal; defaults to a quarter
        of the region's outer radius.
    lam : float, optional
        Cosmological constant. Its vacuum energy multiplies the target by a
        constant and never enters an acceptance ratio.
    """

    def __init__(self, region, st, gas, k, pot, s=None, lam=None, step=None, proposal=None,
                 probabilities=MOVE_PROBABILITIES):
        geo.check_region(st, region)
        require_superstable(pot)
        s = BoundaryCondition() if s is None else s
        if not isinstance(s, BoundaryCondition):
            s = BoundaryCondition(s)
        self.s = s.validate(region)
        self.region, self.st, self.gas, self.k, self.pot = region, st, gas, k, pot
        self.lam = st.cosmological_constant if lam is None else lam
        p = np.asarray(probabilities, dtype=float)
        if p.shape != (3,) or np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
            raise DomainError("move probabilities must be three positive numbers summing to 1")
        self.p_birth, self.p_death, self.p_move = (float(v) for v in p)
        self.log_pb = math.log(self.p_birth)
        self.log_pd = math.log(self.p_death)
        self.beta = gas.beta(k)
        self.theta = gas.theta(k)
        self.log_zr = gas.log_activity_reduced(k)
        self._y = 1.0 / k.c
        self.field = log_one_body_field(st, gas, k)
        self.proposal = default_proposal(st, region, self.field) if proposal is None else proposal
        self.step = 0.25 * region.outer_radius if step is None else float(step)
        self.ideal = pot.is_ideal
        self.boundary = self.s.points
        if self.ideal and self.boundary.shape[0]:
            self.boundary = np.zeros((0, 3))  # no interactions: boundary is irrelevant

    # single-point helpers
    def log_intensity_one(self, pt):
        """``log(z w(pt))`` for one chart point."""
        ex = float(self.st.alpha_excess_y(np.asarray(pt, dtype=float), self._y))
        return self.log_zr + log_one_body_weight(1.0 + ex, self.theta, excess=ex)

    def log_intensity(self, pts):
        return self.log_zr + self.field(np.atleast_2d(pts))

    def _local(self, xi, others):
        if self.ideal:
            return 0.0
        return local_energy(xi, others, self.boundary, self.pot, self.st)

    # analytic kernel pieces (used by the detailed-balance tests)
    def log_target(self, points):
        """Unnormalised log density of the specification at ``points``."""
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        if p.shape[0] == 0:
            return 0.0
        e = 0.0 if self.ideal else interaction_energy(p, self.boundary, self.pot, self.st)
        if math.isinf(e):
            return -math.inf
        return float(np.sum(self.log_intensity(p))) - self.beta * e

    def log_birth_ratio(self, points, xi):
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        e = self._local(xi, p)
        if math.isinf(e):
            return -math.inf
        n = p.shape[0]
        return (self.log_intensity_one(xi) - self.beta * e + self.log_pd - self.log_pb
                - math.log(n + 1) - self.proposal.log_density_one(xi))

    def log_death_ratio(self, points, i):
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        n = p.shape[0]
        xi = p[i]
        others = np.delete(p, i, axis=0)
        e = self._local(xi, others)
        return (math.log(n) + self.log_pb + self.proposal.log_density_one(xi) + self.beta * e
                - self.log_intensity_one(xi) - self.log_pd)

    def log_kernel_birth(self, points, xi):
        """Log transition density of ``points -> points + {xi}`` (with respect to ``d xi``)."""
        return self.log_pb + self.proposal.log_density_one(xi) + min(0.0, self.log_birth_ratio(points, xi))

    def log_kernel_death(self, points, i):
        """Log probability of ``points -> points minus point i``."""
        n = np.asarray(points).reshape(-1, 3).shape[0]
        return self.log_pd - math.log(n) + min(0.0, self.log_death_ratio(points, i))

    # chain
    def run(self, seed, sweeps, burn_in=0, moves_per_sweep=25, batch_size=None, record=False,
            sink=None, observe=None, initial=None):
        """Run the chain; see :func:`gcmc_chain`."""
        if sweeps < 1 or burn_in < 0 or moves_per_sweep < 1:
            raise DomainError("sweeps >= 1, burn_in >= 0 and moves_per_sweep >= 1 are required")
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        rng = np.random.Generator(np.random.PCG64(seed))
        if batch_size is None:
            batch_size = max(1, sweeps // 50)
        inside = self.region.contains_one
        excess_one = self.st.alpha_excess_one
        y = self._y
        theta = self.theta
        log_zr = self.log_zr
        beta = self.beta
        B = self.pot.stability_B
        pb, pbd = self.p_birth, self.p_birth + self.p_death
        log_pd_pb = self.log_pd - self.log_pb
        step = self.step
        prop = self.proposal
        lq_one = prop.log_density_one
        ideal = self.ideal
        local = self._local
        log = math.log

        def lw_one(p):
            return log_zr + log_one_body_weight_scalar(theta, excess_one(p, y))

        def others(i):
            return np.array(P[:i] + P[i + 1 :]).reshape(-1, 3)

        def guard():
            n = len(P)
            if v_int < -B * n - 1e-9 * (abs(v_int) + B * n):
                raise ModelError(f"interaction energy {v_int!r} below -B n = {-B * n!r}")

        P, LW, LQ = [], [], []
        v_int = 0.0
        if initial is not None:
            for xi in np.asarray(initial, dtype=float).reshape(-1, 3):
                v_int += local(xi, np.array(P).reshape(-1, 3))
                P.append(tuple(float(v) for v in xi))
                LW.append(lw_one(P[-1]))
                LQ.append(lq_one(P[-1]))
            if math.isinf(v_int):
                raise DomainError("initial configuration has infinite energy")
        occupied = set(P)

        attempts = {m: 0 for m in MOVES}
        accepts = {m: 0 for m in MOVES}
        hist = {}
        configs = []
        obs = [] if observe is not None else None
        batch_total = batch_count = n_batches = b_sum = b_sumsq = 0
        M = moves_per_sweep
        n_birth = n_death = n_move = 0
        a_birth = a_death = a_move = 0

        for sweep in range(burn_in + sweeps):
            u_type = rng.random(M).tolist()
            log_u = np.log(rng.random(M)).tolist()
            u_idx = rng.random(M).tolist()
            offs = ((2.0 * rng.random((M, 3)) - 1.0) * step).tolist()
            cand_arr = prop.sample(rng, M)
            cand_lw = self.log_intensity(cand_arr).tolist()
            cand_lq = prop.log_density(cand_arr).tolist()
            cand = cand_arr.tolist()
            for j in range(M):
                t = u_type[j]
                n = len(P)
                if t < pb:
                    n_birth += 1
                    xi = tuple(cand[j])
                    if ideal:
                        e = 0.0
                    else:
                        e = local(np.array(xi), np.array(P).reshape(-1, 3))
                        if math.isinf(e):
                            continue
                    la = cand_lw[j] - beta * e + log_pd_pb - log(n + 1) - cand_lq[j]
                    if (la >= 0.0 or log_u[j] < la) and xi not in occupied:
                        P.append(xi)
                        LW.append(cand_lw[j])
                        LQ.append(cand_lq[j])
                        occupied.add(xi)
                        a_birth += 1
                        if not ideal:
                            v_int += e
                            guard()
                elif t < pbd:
                    n_death += 1
                    if n == 0:
                        continue
                    i = min(int(u_idx[j] * n), n - 1)
                    xi = P[i]
                    e = 0.0 if ideal else local(np.array(xi), others(i))
                    la = log(n) - log_pd_pb + LQ[i] + beta * e - LW[i]
                    if la >= 0.0 or log_u[j] < la:
                        occupied.discard(xi)
                        P[i] = P[-1]; LW[i] = LW[-1]; LQ[i] = LQ[-1]
                        P.pop(); LW.pop(); LQ.pop()
                        a_death += 1
                        if not ideal:
                            v_int -= e
                            guard()
                else:
                    n_move += 1
                    if n == 0:
                        continue
                    i = min(int(u_idx[j] * n), n - 1)
                    old = P[i]
                    o = offs[j]
                    new = (old[0] + o[0], old[1] + o[1], old[2] + o[2])
                    if not inside(new) or new in occupied:
                        continue
                    lw_new = lw_one(new)
                    if ideal:
                        de = 0.0
                    else:
                        env = others(i)
                        e_new = local(np.array(new), env)
                        if math.isinf(e_new):
                            continue
                        de = e_new - local(np.array(old), env)
                    la = lw_new - LW[i] - beta * de
                    if la >= 0.0 or log_u[j] < la:
                        occupied.discard(old)
                        occupied.add(new)
                        P[i] = new
                        LW[i] = lw_new
                        LQ[i] = lq_one(new)
                        a_move += 1
                        if not ideal:
                            v_int += de
                            guard()
            if sweep < burn_in:
                continue
            n = len(P)
            hist[n] = hist.get(n, 0) + 1
            batch_total += n
            batch_count += 1
            if batch_count == batch_size:
                n_batches += 1
                b_sum += batch_total
                b_sumsq += batch_total * batch_total
                batch_total = batch_count = 0
            if record or obs is not None or sink is not None:
                cur = np.array(P, dtype=float).reshape(-1, 3)
                if record:
                    configs.append(cur)
                if obs is not None:
                    obs.append(observe(cur))
                if sink is not None:
                    sink.write(json.dumps({"sweep": sweep - burn_in, "n": n, "points_m": cur.tolist()}) + "\n")

        attempts = {"birth": n_birth, "death": n_death, "translate": n_move}
        accepts = {"birth": a_birth, "death": a_death, "translate": a_move}
        histogram = tuple(hist.get(i, 0) for i in range(max(hist) + 1)) if hist else ()
        stats = ChainStats(
            seeds=(seed,),
            sweeps=sweeps,
            burn_in=burn_in,
            moves_per_sweep=M,
            attempts=attempts,
            accepts=accepts,
            histogram=histogram,
            batch_size=batch_size,
            n_batches=n_batches,
            batch_sum=b_sum,
            batch_sumsq=b_sumsq,
        )
        return ChainResult(
            stats=stats,
            configurations=configs,
            observations=None if obs is None else np.asarray(obs, dtype=float),
            final=np.array(P, dtype=float).reshape(-1, 3),
        )


def gcmc_chain(region, st, gas, k, pot, s=None, seed=0, sweeps=1000, burn_in=100, moves_per_sweep=25,
               lam=None, step=None, record=False, sink=None, observe=None, batch_size=None):
    """Run a seeded grand-canonical chain targeting the local specification.

    Parameters
    ----------
    seed : int
        Seed of the ``PCG64`` generator; equal seeds give identical output.
    sweeps, burn_in : int
        Retained and discarded sweeps.
    record : bool
        Keep a copy of the configuration after each retained sweep.
    sink : file-like, optional
        Receives one JSON line ``{"sweep", "n", "points_m"}`` per retained sweep.
    observe : callable, optional
        ``observe(points) -> float`` evaluated after each retained sweep.

    Returns
    -------
    ChainResult

    Raises
    ------
    ModelError
        If the potential has no stability constant or the interaction energy
        drops below ``-B n``.
    """
    sampler = GCMCSampler(region, st, gas, k, pot, s, lam=lam, step=step)
    return sampler.run(seed, sweeps, burn_in, moves_per_sweep, batch_size=batch_size, record=record,
                       sink=sink, observe=observe)


def count_event(subregion, n):
    """Cylinder event "exactly ``n`` points fall in ``subregion``"."""

    def event(points):
        if points.shape[0] == 0:
            return float(n == 0)
        return float(int(np.count_nonzero(subregion.contains(points))) == n)

    return event


def specification_probability(event, region, st, gas, k, pot, s=None, seed=0, sweeps=10_000, burn_in=500,
                              moves_per_sweep=25, lam=None):
    """Monte Carlo estimate of the specification probability of ``event`` with its standard error."""
    res = gcmc_chain(region, st, gas, k, pot, s, seed=seed, sweeps=sweeps, burn_in=burn_in,
                     moves_per_sweep=moves_per_sweep, lam=lam, observe=event)
    return res.observation_mean()


def poisson_chi_square(histogram, mean, min_expected=5.0):
    """Chi-square goodness of fit of an occupation histogram to ``Poisson(mean)``.

    Adjacent cells are pooled until each expects at least ``min_expected``
    counts; the last cell absorbs the upper tail. Returns
    ``(statistic, p_value, dof)``.
    """
    obs = np.asarray(histogram, dtype=float)
    total = obs.sum()
    n = np.arange(obs.size)
    exp = total * sps.poisson.pmf(n, mean)
    exp[-1] += total * sps.poisson.sf(obs.size - 1, mean)
    o_cells, e_cells = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(obs, exp):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            o_cells.append(o_acc)
            e_cells.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if o_cells:
            o_cells[-1] += o_acc
            e_cells[-1] += e_acc
        else:
            o_cells.append(o_acc)
            e_cells.append(e_acc)
    o_cells = np.asarray(o_cells)
    e_cells = np.asarray(e_cells)
    if o_cells.size < 2:
        return 0.0, 1.0, 0
    stat = float(np.sum((o_cells - e_cells) ** 2 / e_cells))
    dof = o_cells.size - 1
    return stat, float(sps.chi2.sf(stat, dof)), dof
