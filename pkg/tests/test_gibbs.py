import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relgas import geometry as geo
from relgas import thermo
from relgas.errors import DomainError, ModelError, TruncationError
from relgas.gibbs import (
    BoundaryCondition,
    Configuration,
    GCMCSampler,
    Potential,
    conditional_energy,
    count_event,
    gcmc_chain,
    interaction_energy,
    poisson_chi_square,
    specification_probability,
    truncated_partition,
    uniqueness_certificate,
)
from relgas.gibbs.partition import log_tail_bound

NAT = geo.PhysicalConstants.natural()
GAS = geo.GasSpec(m=1.0, T=1.0, mu=1.0)

CASES = [
    (geo.DeSitter(0.3), geo.Ball(1.0), Potential.hard_spheres(0.3)),
    (geo.AntiDeSitter(-0.3), geo.Shell(0.2, 1.0), Potential.square_well(0.2, 0.5, 0.4)),
    (geo.EinsteinStatic(0.3), geo.Ball(1.0), Potential.ideal()),
    (geo.KerrCircularOrbit(M=1.0, a=0.5, r0=100.0, G=1.0, c=1.0), geo.Box((1.0, 1.0, 1.0)),
     Potential.square_well(0.2, 0.5, 0.4)),
]


def _inside(region, rng, n):
    out = []
    while len(out) < n:
        p = rng.uniform(-region.outer_radius, region.outer_radius, 3)
        if region.contains_one(p):
            out.append(p)
    return np.array(out).reshape(-1, 3)


# --- detailed balance ---------------------------------------------------------------


@pytest.mark.parametrize("case", range(len(CASES)))
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(0, 4))
def test_birth_death_detailed_balance(case, seed, n):
    sp, reg, pot = CASES[case]
    s = BoundaryCondition(np.array([[reg.outer_radius + 0.1, 0.0, 0.0]]))
    smp = GCMCSampler(reg, sp, GAS, NAT, pot, s)
    rng = np.random.default_rng(seed)
    x = _inside(reg, rng, n)
    xi = _inside(reg, rng, 1)[0]
    y = np.vstack([x, xi[None]])
    left = smp.log_target(x) + smp.log_kernel_birth(x, xi)
    right = smp.log_target(y) + smp.log_kernel_death(y, n)
    if math.isinf(smp.log_target(y)):
        # forbidden state: neither side can carry probability flux
        assert left == -math.inf and right == -math.inf
    else:
        assert abs(left - right) <= 1e-12 * max(1.0, abs(left))


def test_death_kernel_symmetric_in_removed_index():
    sp, reg, pot = CASES[0]
    smp = GCMCSampler(reg, sp, GAS, NAT, pot)
    x = _inside(reg, np.random.default_rng(3), 3)
    for i in range(3):
        rest = np.delete(x, i, axis=0)
        assert smp.log_target(rest) + smp.log_kernel_birth(rest, x[i]) == pytest.approx(
            smp.log_target(x) + smp.log_kernel_death(x, i), abs=1e-12)


def test_vacuum_energy_never_enters_ratios():
    sp, reg, pot = CASES[0]
    a = GCMCSampler(reg, sp, GAS, NAT, pot, lam=0.3)
    b = GCMCSampler(reg, sp, GAS, NAT, pot, lam=-7.0)
    x = _inside(reg, np.random.default_rng(1), 2)
    xi = _inside(reg, np.random.default_rng(2), 1)[0]
    assert a.log_birth_ratio(x, xi) == b.log_birth_ratio(x, xi)
    assert a.log_death_ratio(x, 0) == b.log_death_ratio(x, 0)


# --- energies -----------------------------------------------------------------------


def test_conditional_energy_of_empty_configuration_is_vacuum():
    sp = geo.DeSitter(0.3)
    reg = geo.Ball(1.0)
    e = conditional_energy(np.zeros((0, 3)), BoundaryCondition(), Potential.hard_spheres(0.2), sp, reg, 0.3, NAT)
    assert e == pytest.approx(geo.volume(sp, reg) * thermo.VacuumEnergy.of(0.3, NAT).rho_vac, rel=1e-15)


def test_pair_energies_and_boundary():
    sp = geo.Minkowski()
    reg = geo.Ball(1.0)
    pot = Potential.square_well(0.1, 0.5, 2.0)
    x = np.array([[0.0, 0.0, 0.0], [0.3, 0.0, 0.0], [0.0, 0.9, 0.0]])
    s = np.array([[0.0, 1.2, 0.0]])
    # pairs within 0.5: (0,1); boundary within 0.5 of point 2
    assert interaction_energy(x, s, pot, sp) == -4.0
    assert interaction_energy(x[:2] * [0.2, 1, 1], np.zeros((0, 3)), pot, sp) == math.inf


def test_configuration_validation():
    reg = geo.Ball(1.0)
    with pytest.raises(DomainError):
        Configuration(np.array([[2.0, 0.0, 0.0]]), reg)
    with pytest.raises(DomainError):
        Configuration(np.array([[0.1, 0.0, 0.0]] * 2), reg)
    with pytest.raises(DomainError):
        BoundaryCondition(np.array([[0.1, 0.0, 0.0]])).validate(reg)
    with pytest.raises(DomainError):
        Potential.square_well(0.5, 0.4, 1.0)


# --- chains ---------------------------------------------------------------------------


def _chain(seed=5, sweeps=300, **kw):
    sp, reg, pot = CASES[0]
    return gcmc_chain(reg, sp, GAS, NAT, pot, seed=seed, sweeps=sweeps, burn_in=20, batch_size=10, **kw)


def test_chain_determinism():
    a = _chain(record=True)
    b = _chain(record=True)
    assert a.stats == b.stats
    assert all(np.array_equal(p, q) for p, q in zip(a.configurations, b.configurations))
    assert _chain(seed=6).stats != a.stats


def test_chain_stats_invariants():
    r = _chain()
    s = r.stats
    assert s.recorded == s.sweeps == 300
    assert all(0.0 <= v <= 1.0 for v in s.acceptance_rates.values())
    assert sum(s.attempts.values()) == (300 + 20) * 25
    d = json.loads(s.to_json())
    assert d["histogram_n"] == list(s.histogram)


def test_merge_is_associative_and_commutative():
    a, b, c = (_chain(seed=i, sweeps=100).stats for i in (1, 2, 3))
    assert a.merge(b).merge(c) == a.merge(b.merge(c))
    assert a.merge(b) == b.merge(a)
    m = a.merge(b)
    assert m.mean_n == pytest.approx((a.mean_n * 100 + b.mean_n * 100) / 200, rel=1e-15)


def test_trajectory_sink():
    buf = io.StringIO()
    r = _chain(sweeps=40, sink=buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 40
    rec = json.loads(lines[-1])
    assert rec["sweep"] == 39 and rec["n"] == len(rec["points_m"]) == r.final.shape[0]


def test_superstability_guard():
    # an attractive well declared with B = 0 is caught once two points interact
    phi = lambda d: np.full_like(d, -1.0)
    bad = Potential(phi, 1.0, 0.05, 0.0, (), "understated_B")
    with pytest.raises(ModelError):
        gcmc_chain(geo.Ball(0.5), geo.Minkowski(), geo.GasSpec(1.0, 1.0, 3.0), NAT, bad, sweeps=200, burn_in=0)
    with pytest.raises(ModelError):
        gcmc_chain(geo.Ball(0.5), geo.Minkowski(), GAS, NAT, Potential.infinite_range(lambda d: 1 / d))


def test_ideal_chain_is_poisson():
    sp = geo.AntiDeSitter(-0.3)
    reg = geo.Ball(1.0)
    n_exp, _, _ = thermo.expected_particles(sp, reg, GAS, NAT)
    r = gcmc_chain(reg, sp, GAS, NAT, Potential.ideal(), seed=11, sweeps=3000, burn_in=100)
    assert abs(r.stats.mean_n - n_exp) < 4 * r.stats.stderr
    _, p, _ = poisson_chi_square(r.stats.histogram, n_exp)
    assert p > 1e-3


def test_specification_probability_of_empty_subregion():
    sp = geo.Minkowski()
    reg = geo.Ball(1.0)
    sub = geo.Ball(0.5)
    n_sub, _, _ = thermo.expected_particles(sp, sub, GAS, NAT)
    est, err = specification_probability(count_event(sub, 0), reg, sp, GAS, NAT, Potential.ideal(), seed=2,
                                         sweeps=3000)
    assert abs(est - math.exp(-n_sub)) < 4 * err


@given(st.floats(0.5, 20.0))
def test_chi_square_accepts_exact_histogram(mean):
    n = np.arange(80)
    from scipy.stats import poisson

    hist = np.round(1e6 * poisson.pmf(n, mean)).astype(int)
    _, p, dof = poisson_chi_square(hist, mean)
    assert p > 0.99 and dof >= 1


# --- truncated partition ----------------------------------------------------------------


def test_ideal_partition_is_exponential():
    sp = geo.DeSitter(0.3)
    reg = geo.Ball(1.0)
    gas = geo.GasSpec(1.0, 1.0, -0.5)
    n_exp, _, _ = thermo.expected_particles(sp, reg, gas, NAT)
    res = truncated_partition(reg, sp, gas, NAT, Potential.ideal(), n_max=30, tol=1e-14)
    assert res.log_z - res.log_vacuum == pytest.approx(n_exp, rel=1e-12)
    assert res.mean_n == pytest.approx(n_exp, rel=1e-12)


def test_single_occupancy_partition():
    # ball diameter below the hard core: at most one particle fits
    sp = geo.AntiDeSitter(-0.3)
    reg = geo.Ball(0.3)
    n1, _, _ = thermo.expected_particles(sp, reg, GAS, NAT)
    res = truncated_partition(reg, sp, GAS, NAT, Potential.hard_spheres(1.0), n_max=6)
    assert res.mean_n == pytest.approx(n1 / (1 + n1), rel=1e-6)


@pytest.mark.parametrize("r_hc", [0.3, 0.7, 1.5])
def test_hard_core_pair_integral_in_flat_ball(r_hc):
    # two uniform points in a unit ball are closer than t with probability t^3 - 9 t^4/16 + t^6/32
    gas = geo.GasSpec(1.0, 1.0, -1.0)
    res = truncated_partition(geo.Ball(1.0), geo.Minkowski(), gas, NAT, Potential.hard_spheres(r_hc), n_max=2,
                              tol=1e9)
    t = r_hc
    assert math.exp(res.log_j[2] - 2 * res.log_j[1]) == pytest.approx(1 - (t**3 - 9 * t**4 / 16 + t**6 / 32),
                                                                      rel=1e-10)


def test_radial_pair_integral_matches_qmc():
    sp = geo.DeSitter(0.3)
    reg = geo.Ball(0.6)
    gas = geo.GasSpec(1.0, 1.0, -1.0)
    step = Potential(lambda d: np.full_like(d, 0.7), 0.6, 0.3, 0.0, (), "step")
    rad = truncated_partition(reg, sp, gas, NAT, step, n_max=2, tol=1e9)
    # a far boundary point forces the Sobol path without changing any energy
    far = BoundaryCondition(np.array([[4.0, 0.0, 0.0]]))
    qmc = truncated_partition(reg, sp, gas, NAT, step, s=far, n_max=2, tol=1e9, qmc_rtol=1e-5)
    assert rad.log_j[2] == pytest.approx(qmc.log_j[2], abs=1e-3)


def test_truncation_error_when_tail_is_large():
    with pytest.raises(TruncationError) as exc:
        truncated_partition(geo.Ball(1.0), geo.Minkowski(), geo.GasSpec(1.0, 1.0, 2.0), NAT,
                            Potential.hard_spheres(0.2), n_max=2)
    assert exc.value.tail_bound > 0


@given(st.floats(-5.0, 1.0), st.integers(1, 30))
def test_tail_bound_dominates_tail(log_x, n_max):
    x = math.exp(log_x)
    tail = sum(x**n / math.factorial(n) for n in range(n_max + 1, n_max + 60))
    if tail > 0:
        assert math.log(tail) <= log_tail_bound(log_x, n_max) + 1e-12


# --- certificate -----------------------------------------------------------------------------


def test_certificate_verdicts():
    gas = geo.GasSpec(1.0, 0.1)
    hc = uniqueness_certificate(Potential.hard_spheres(0.5), gas, NAT, -3.0)
    assert hc.verdict == "certified unique" and hc.monotone
    ideal = uniqueness_certificate(Potential.ideal(), gas, NAT, -3.0, shell_width=0.5)
    assert ideal.verdict == "certified unique"
    inf = uniqueness_certificate(Potential.infinite_range(lambda d: 1 / (1 + d), 0.0), gas, NAT, -3.0)
    assert inf.verdict == "not certified"
    with pytest.raises(ModelError):
        uniqueness_certificate(Potential.ideal(), gas, NAT, -3.0)
    with pytest.raises(ModelError):
        uniqueness_certificate(Potential.infinite_range(lambda d: 1 / d), gas, NAT, -3.0)


def test_certificate_fails_in_nearly_flat_space():
    # nearly flat AdS, hot gas, wide shells: the cosh suppression has not started by k = 8
    gas = geo.GasSpec(1.0, 100.0, 50.0)
    rep = uniqueness_certificate(Potential.hard_spheres(5.0), gas, NAT, -3e-6)
    assert rep.verdict == "not certified"
