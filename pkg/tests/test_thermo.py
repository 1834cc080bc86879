import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import poisson_tv as poisson_tv_oracle
from scipy import integrate
from scipy.special import kve

from relgas import geometry as geo
from relgas import thermo
from relgas.errors import DomainError, UnsupportedLimitError

NAT = geo.PhysicalConstants.natural()
GAS = geo.GasSpec(m=1.0, T=0.5, mu=0.2)


def radial_q1_oracle(sp, R, gas, k, lo=0.0):
    """Chart integral of e^theta K_2(gamma)/gamma over a ball, via scipy's kve."""
    th = gas.theta(k)

    def f(r):
        a = float(geo.alpha_of(sp, np.array([r, 0.0, 0.0]), k.c))
        g = a * th
        return 4 * math.pi * r * r * kve(2, g) * math.exp(th - g) / g

    return integrate.quad(f, lo, R, epsabs=0, epsrel=1e-13, limit=200)[0]


SPACES = [geo.Minkowski(), geo.EinsteinStatic(0.3), geo.DeSitter(0.3), geo.AntiDeSitter(-0.3)]


@pytest.mark.parametrize("sp", SPACES)
def test_q1_ball_vs_radial_oracle(sp):
    res = thermo.weighted_q1(sp, geo.Ball(1.5), GAS, NAT)
    assert math.exp(res.log_value) == pytest.approx(radial_q1_oracle(sp, 1.5, GAS, NAT), rel=1e-10)


def test_q1_shell_vs_radial_oracle():
    sp = geo.AntiDeSitter(-0.3)
    res = thermo.weighted_q1(sp, geo.Shell(0.5, 2.0), GAS, NAT)
    assert math.exp(res.log_value) == pytest.approx(radial_q1_oracle(sp, 2.0, GAS, NAT, lo=0.5), rel=1e-10)


def test_q1_de_sitter_riemann_sum():
    # midpoint rule with Richardson on the radial integrand; independent of the cubature path
    sp = geo.DeSitter(0.3)
    th = GAS.theta(NAT)

    def mid(n):
        r = (np.arange(n) + 0.5) * (1.5 / n)
        g = np.cos(math.sqrt(0.1) * r) * th
        return np.sum(4 * math.pi * r * r * kve(2, g) * np.exp(th - g) / g) * (1.5 / n)

    ref = (4 * mid(4000) - mid(2000)) / 3
    res = thermo.weighted_q1(sp, geo.Ball(1.5), GAS, NAT)
    assert math.exp(res.log_value) == pytest.approx(ref, rel=1e-10)


def test_q1_box_vs_tplquad():
    sp = geo.DeSitter(0.3)
    h = (0.5, 0.7, 0.9)
    th = GAS.theta(NAT)

    def f(z, y, x):
        g = math.cos(math.sqrt(0.1) * math.sqrt(x * x + y * y + z * z)) * th
        return kve(2, g) * math.exp(th - g) / g

    ref = 8 * integrate.tplquad(f, 0, h[0], 0, h[1], 0, h[2], epsabs=0, epsrel=1e-11)[0]
    res = thermo.weighted_q1(sp, geo.Box(h), GAS, NAT)
    assert math.exp(res.log_value) == pytest.approx(ref, rel=1e-9)


def test_kerr_q1_near_flat():
    # the Kerr field is a tiny tidal perturbation at r0 = 1e4 M: Q1 must be near the flat value
    sp = geo.KerrCircularOrbit(M=1.0, a=0.5, r0=1e4, G=1.0, c=1.0)
    gas = geo.GasSpec(1.0, 0.01)
    reg = geo.Ball(3.0)
    q_k = math.exp(thermo.weighted_q1(sp, reg, gas, NAT).log_value)
    q_m = math.exp(thermo.weighted_q1(geo.Minkowski(), reg, gas, NAT).log_value)
    assert q_k == pytest.approx(q_m, rel=1e-6)
    assert q_k != q_m


@pytest.mark.parametrize("sp", SPACES)
def test_ideal_gas_law(sp):
    rep = thermo.finite_pressure(sp, geo.Ball(1.0), GAS, NAT)
    lhs = rep.beta * (rep.pressure + rep.rho_vac) * rep.proper_volume
    assert abs(lhs - rep.expected_n) <= 1e-12 * rep.expected_n


def test_vacuum_shift_is_exact_difference():
    sp = geo.DeSitter(0.3)
    a = thermo.finite_pressure(sp, geo.Ball(1.0), GAS, NAT, lam=0.3)
    b = thermo.finite_pressure(sp, geo.Ball(1.0), GAS, NAT, lam=0.1)
    assert a.gas_pressure == b.gas_pressure
    drho = thermo.VacuumEnergy.of(0.3, NAT).rho_vac - thermo.VacuumEnergy.of(0.1, NAT).rho_vac
    assert b.pressure - a.pressure == pytest.approx(drho, rel=1e-14)


def test_minkowski_matches_newtonian_up_to_bessel_ratio():
    gas = geo.GasSpec(1.0, 0.05, 0.01)
    reg = geo.Ball(2.0)
    n, _, _ = thermo.expected_particles(geo.Minkowski(), reg, gas, NAT)
    newt = thermo.newtonian_pressure(geo.Minkowski(), reg, gas, NAT)
    from relgas.specfun import k2_asymptotic_ratio

    assert n / newt.log_partition == pytest.approx(k2_asymptotic_ratio(gas.theta(NAT)), rel=1e-12)


def test_si_hydrogen_room_temperature():
    k = geo.PhysicalConstants()
    gas = geo.GasSpec(m=1.6735575e-27, T=300.0, mu=-8e-20)
    rep = thermo.finite_pressure(geo.Minkowski(), geo.Ball(1.0), gas, k)
    newt = thermo.newtonian_pressure(geo.Minkowski(), geo.Ball(1.0), gas, k)
    assert math.isfinite(rep.log_expected_n)
    rel = rep.pressure / newt.pressure_newt - 1.0
    assert rel == pytest.approx(15.0 / (8.0 * gas.theta(k)), rel=1e-3)


@pytest.mark.parametrize("sp,sign", [(geo.DeSitter(0.3), 1), (geo.AntiDeSitter(-0.3), -1)])
def test_density_profile_monotone(sp, sign):
    radii = np.linspace(0.0, 2.0, 41)
    log_i, inten = thermo.density_profile(sp, GAS, NAT, radii)
    d = np.diff(log_i)
    assert np.all(sign * d[1:] > 0)
    assert np.allclose(np.exp(log_i), inten)


def test_tolman_temperature():
    sp = geo.AntiDeSitter(-0.3)
    x = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    t = thermo.tolman_temperature(sp, x, 2.0, NAT)
    assert t[0] == 2.0
    assert t[1] == pytest.approx(2.0 / math.cosh(math.sqrt(0.1)), rel=1e-15)
    with pytest.raises(DomainError):
        thermo.tolman_temperature(sp, x, -1.0, NAT)


@given(st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_poisson_tv_vs_oracle(a, b):
    assert thermo.poisson_tv(a, b) == pytest.approx(poisson_tv_oracle(a, b), abs=1e-13)


@given(st.floats(0.01, 100.0))
def test_pmf_normalised(mean):
    n_max = int(mean + 20 * math.sqrt(mean) + 30)
    assert sum(thermo.particle_pmf(mean, n) for n in range(n_max)) == pytest.approx(1.0, abs=1e-12)


def test_ads_sequence_converges():
    gas = geo.GasSpec(1.0, 0.1)
    rows = thermo.ads_pressure_sequence(gas, NAT, -3.0, 10)
    gaps = [r.relative_gap for r in rows]
    assert all(b < a for a, b in zip(gaps[2:], gaps[3:]))
    assert gaps[-1] < 1e-8
    # direct finite_pressure on the same ball agrees with the shell accumulation
    rep = thermo.finite_pressure(geo.AntiDeSitter(-3.0), geo.Ball(rows[3].radius), gas, NAT)
    assert rep.pressure == pytest.approx(rows[3].pressure, rel=1e-9)


@pytest.mark.parametrize("m", [1e-30, 1.6726e-27, 3.0])
def test_dust_closure(m):
    k = geo.PhysicalConstants()
    d = thermo.dust_closure(geo.GasSpec(m, 1.0), k, 1e-52)
    assert d.kT == pytest.approx(0.5 * m * k.c**2, rel=1e-15)
    # zero pressure at that temperature and the dust density
    rho_vac = 1e-52 * k.c**4 / (8 * math.pi * k.G)
    assert d.rho_mass * d.kT / m == pytest.approx(rho_vac, rel=1e-14)
    with pytest.raises(DomainError):
        thermo.dust_closure(geo.GasSpec(m, 1.0), k, -1.0)


def test_newtonian_pressure_uses_chart_volume():
    gas = geo.GasSpec(1.0, 0.05, 0.01)
    es = geo.EinsteinStatic(0.3)
    rep = thermo.newtonian_pressure(es, geo.Ball(2.0), gas, NAT)
    zn = thermo.newtonian_activity(gas, NAT)
    assert rep.chart_volume == geo.Ball(2.0).chart_volume
    assert rep.pressure_newt + rep.rho_vac == pytest.approx(zn / gas.beta(NAT), rel=1e-12)


def test_sweep_refuses_unsupported_spacetime():
    with pytest.raises(UnsupportedLimitError):
        thermo.newtonian_limit_sweep(geo.DeSitter(0.3), geo.Ball(1.0), GAS, NAT, [1.0, 2.0])
    with pytest.raises(DomainError):
        thermo.newtonian_limit_sweep(geo.Minkowski(), geo.Ball(1.0), GAS, NAT, [2.0, 1.0])


def test_ordered_map_keeps_order(monkeypatch):
    monkeypatch.setenv("RELGAS_THREADS", "4")
    assert thermo.ordered_map(lambda v: v * v, range(20)) == [v * v for v in range(20)]
    monkeypatch.setenv("RELGAS_THREADS", "many")
    with pytest.raises(DomainError):
        thermo.thread_count()
