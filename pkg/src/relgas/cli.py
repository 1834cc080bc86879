"""Command-line front end.

Usage::

    relgas <subcommand> CONFIG.toml [--set section.key=value ...] [--format json|csv] [--out PATH]

Exit codes: 0 success, 1 usage error, 2 validation or domain error,
3 numerical failure, 4 model error (including an unsupported Newtonian
limit). Every emitted number carries its unit in the key or column name.
Output ordering depends only on the input, so equal configurations give
byte-identical files.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import geometry as geo
from . import thermo
from .config import float_list, load_config
from .errors import DomainError, ModelError, NumericError, RelGasError, ValidationError
from .gibbs import gcmc_chain, uniqueness_certificate
from .gibbs.sampler import GCMCSampler

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_MODEL = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- emitters ----------------------------------------------------------------


def _clean(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def emit(result, fmt, path):
    """Write ``result`` as JSON (any structure) or CSV (``{"rows": [...]}`` or one flat record)."""
    result = _clean(result)
    if fmt == "json":
        text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    else:
        rows = result["rows"] if isinstance(result, dict) and "rows" in result else [result]
        flat = [{k: v for k, v in r.items() if not isinstance(v, (list, dict))} for r in rows]
        buf = io.StringIO()
        if flat:
            w = csv.DictWriter(buf, fieldnames=list(flat[0]), lineterminator="\n")
            w.writeheader()
            for r in flat:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# --- subcommands -------------------------------------------------------------


def _meta(cfg):
    st = cfg.spacetime
    return {"spacetime": st.name, "lambda_per_m2": st.cosmological_constant}


def cmd_pressure(cfg):
    lam = cfg.section("vacuum").get("lambda")
    lam = None if lam is None else float(lam)
    rep = thermo.finite_pressure(cfg.spacetime, cfg.region, cfg.gas, cfg.constants, lam)
    out = {**_meta(cfg), **rep.as_dict()}
    out["vacuum_lambda_per_m2"] = cfg.spacetime.cosmological_constant if lam is None else lam
    return out


def _radial_grid(cfg, sec):
    n = int(sec.get("points", 50))
    if n < 2:
        raise ValidationError("profile.points must be at least 2")
    r_max = float(sec.get("rho_max", cfg.region.outer_radius))
    return np.linspace(0.0, r_max, n)


def cmd_density_profile(cfg):
    sec = cfg.section("profile")
    radii = _radial_grid(cfg, sec)
    st, gas, k = cfg.spacetime, cfg.gas, cfg.constants
    pts = radii[:, None] * np.array([1.0, 0.0, 0.0])
    log_i, inten = thermo.density_profile(st, gas, k, radii)
    alpha = geo.alpha_of(st, pts, k.c)
    rows = [
        {"rho_m": float(r), "alpha": float(a), "gamma": float(a * gas.theta(k)),
         "log_intensity": float(li), "intensity_per_m3": float(i)}
        for r, a, li, i in zip(radii, np.atleast_1d(alpha), log_i, inten)
    ]
    return {**_meta(cfg), "rows": rows}


def _c_values(cfg):
    sec = cfg.section("sweep")
    if "c_values" in sec:
        return float_list(sec["c_values"], "sweep.c_values")
    c0 = float(sec.get("c0", cfg.constants.c))
    factors = float_list(sec.get("factors", [1, 2, 4, 8, 16]), "sweep.factors")
    return [c0 * f for f in factors]


def cmd_newton_sweep(cfg):
    sec = cfg.section("sweep")
    res = thermo.newtonian_limit_sweep(cfg.spacetime, cfg.region, cfg.gas, cfg.constants, _c_values(cfg),
                                       threshold=float(sec.get("threshold", 1e-4)))
    rows = [
        {"c_m_per_s": r.c, "theta": r.theta, "mean_n_relativistic": r.mean_rel, "mean_n_newtonian": r.mean_newt,
         "mean_gap": r.gap, "relative_gap": r.relative_gap, "total_variation": r.tv}
        for r in res.rows
    ]
    return {**_meta(cfg), "rows": rows, "gap_ratios": res.gap_ratios, "tv_decreasing": res.tv_decreasing,
            "converged": res.converged, "threshold": res.threshold}


def cmd_kerr_potential(cfg):
    st = cfg.spacetime
    if not isinstance(st, geo.KerrCircularOrbit):
        raise ValidationError("kerr-potential needs spacetime.kind = 'kerr'")
    sec = cfg.section("kerr")
    pts = geo.kerr_grid(st, int(sec.get("grid", 5)), float(sec.get("extent_fraction", 0.01)))
    m, k = cfg.gas.m, cfg.constants
    coef, fd = geo.kerr_quadratic_fit(st, k, pts)
    _, err = geo.alpha_second_deriv_fd(st, pts, k, return_error=True)
    r, th = geo.kerr_fermi_to_bl(pts, st, math.inf)
    bl = geo.kerr_newtonian_potential_bl(r, th, st, m)
    fermi = geo.kerr_newtonian_potential_fermi(pts, st, m)
    rows = [
        {"x1_m": p[0], "x2_m": p[1], "x3_m": p[2], "alpha2_fd_m2_per_s2": f, "alpha2_fd_error_m2_per_s2": e,
         "U_fd_J": 0.5 * m * f, "U_fermi_J": uf, "U_bl_J": ub}
        for p, f, e, uf, ub in zip(pts.tolist(), fd.tolist(), err.tolist(), np.atleast_1d(fermi).tolist(),
                                   np.atleast_1d(bl).tolist())
    ]
    gm_r3 = st.GM / st.r0**3
    return {**_meta(cfg), "rows": rows,
            "quadratic_coefficients_per_s2": coef.tolist(),
            "expected_coefficients_per_s2": [-3.0 * gm_r3, gm_r3, 0.0, 0.0, 0.0, 0.0],
            "U_bl_at_orbit_J": float(geo.kerr_newtonian_potential_bl(st.r0, 0.5 * math.pi, st, m))}


def cmd_ads_limit(cfg):
    st = cfg.spacetime
    if not isinstance(st, geo.AntiDeSitter):
        raise ValidationError("ads-limit needs spacetime.kind = 'anti_de_sitter'")
    sec = cfg.section("ads")
    rows = thermo.ads_pressure_sequence(cfg.gas, cfg.constants, st.lam, int(sec.get("k_max", 10)),
                                        sec.get("r1"))
    out_rows = [
        {"k_index": r.k_index, "radius_m": r.radius, "pressure_Pa": r.pressure, "gas_pressure_Pa": r.gas_pressure,
         "limit_pressure_Pa": -r.rho_vac, "relative_gap": r.relative_gap, "proper_volume_m3": r.proper_volume}
        for r in rows
    ]
    return {**_meta(cfg), "rows": out_rows}


def cmd_dust_closure(cfg):
    lam = cfg.section("vacuum").get("lambda", cfg.spacetime.cosmological_constant)
    d = thermo.dust_closure(cfg.gas, cfg.constants, float(lam))
    return {"kT_J": d.kT, "half_rest_energy_J": d.rest_energy_half, "temperature_K": d.temperature,
            "rho_mass_kg_per_m3": d.rho_mass, "lambda_per_m2": float(lam)}


def _run_chain(cfg, seed, sink=None):
    sp = cfg.sampler
    lam = cfg.section("vacuum").get("lambda")
    return gcmc_chain(cfg.region, cfg.spacetime, cfg.gas, cfg.constants, cfg.potential, cfg.boundary, seed=seed,
                      sweeps=sp.sweeps, burn_in=sp.burn_in, moves_per_sweep=sp.moves_per_sweep,
                      lam=None if lam is None else float(lam), step=sp.step, sink=sink)


def cmd_sample(cfg):
    sp = cfg.sampler
    seeds = [sp.seed + i for i in range(sp.chains)]
    if sp.trajectory:
        # streaming keeps chains sequential so the file order is fixed
        with open(sp.trajectory, "w", encoding="utf-8") as fh:
            results = [_run_chain(cfg, s, fh) for s in seeds]
    else:
        results = thermo.ordered_map(lambda s: _run_chain(cfg, s), seeds)
    stats = results[0].stats
    for r in results[1:]:
        stats = stats.merge(r.stats)
    n_ideal = None
    if cfg.potential.is_ideal:
        n_ideal, _, _ = thermo.expected_particles(cfg.spacetime, cfg.region, cfg.gas, cfg.constants)
    return {**_meta(cfg), **stats.as_dict(), "poisson_mean_n": n_ideal}


def cmd_uniqueness_check(cfg):
    st = cfg.spacetime
    if not isinstance(st, geo.AntiDeSitter):
        raise ValidationError("uniqueness-check needs spacetime.kind = 'anti_de_sitter'")
    sec = cfg.section("certificate")
    rep = uniqueness_certificate(cfg.potential, cfg.gas, cfg.constants, st.lam, k_max=int(sec.get("k_max", 12)),
                                 threshold=float(sec.get("threshold", 1e-6)), k_check=int(sec.get("k_check", 8)),
                                 shell_width=sec.get("shell_width"))
    d = rep.as_dict()
    d["rows"] = [{"k": kk, "reciprocal_bound": t, "one_minus_reciprocal_bound": o}
                 for kk, t, o in zip(rep.k, rep.terms, rep.one_minus_terms)]
    return {**_meta(cfg), **d}


def cmd_tolman(cfg):
    sec = cfg.section("tolman")
    radii = _radial_grid(cfg, sec)
    st, k = cfg.spacetime, cfg.constants
    pts = radii[:, None] * np.array([1.0, 0.0, 0.0])
    temps = np.atleast_1d(thermo.tolman_temperature(st, pts, cfg.gas.T, k))
    alpha = np.atleast_1d(geo.alpha_of(st, pts, k.c))
    rows = [{"rho_m": float(r), "alpha": float(a), "temperature_K": float(t)} for r, a, t in zip(radii, alpha, temps)]
    return {**_meta(cfg), "rows": rows}


COMMANDS = {
    "pressure": cmd_pressure,
    "density-profile": cmd_density_profile,
    "newton-sweep": cmd_newton_sweep,
    "kerr-potential": cmd_kerr_potential,
    "ads-limit": cmd_ads_limit,
    "dust-closure": cmd_dust_closure,
    "sample": cmd_sample,
    "uniqueness-check": cmd_uniqueness_check,
    "tolman": cmd_tolman,
}


# tabular reports default to CSV, single records to JSON
TABULAR = {"density-profile", "newton-sweep", "kerr-potential", "ads-limit", "tolman"}


def build_parser():
    p = _Parser(prog="relgas", description="Relativistic grand-canonical gases on Killing-field spacetimes.")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", help="TOML run configuration")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
        sp.add_argument("--format", choices=("json", "csv"))
        sp.add_argument("--out", help="output path ('-' for stdout)")
    return p


def run(argv=None):
    """Parse ``argv``, run one subcommand and return the exit code."""
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    try:
        cfg = load_config(args.config, args.overrides)
        result = COMMANDS[args.command](cfg)
        fmt = args.format or cfg.output.format or ("csv" if args.command in TABULAR else "json")
        emit(result, fmt, args.out or cfg.output.path)
    except (ValidationError, DomainError) as exc:
        sys.stderr.write(f"validation error: {exc}\n")
        return EXIT_VALIDATION
    except NumericError as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return EXIT_NUMERIC
    except ModelError as exc:
        sys.stderr.write(f"model error: {exc}\n")
        return EXIT_MODEL
    except RelGasError as exc:  # pragma: no cover - every subclass is handled above
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_MODEL
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
