"""Run configuration: TOML file plus ``--set section.key=value`` overrides.

Example::

    [constants]
    preset = "si"            # or "natural"; individual keys override

    [gas]
    m = 1.6726e-27           # kg
    T = 300.0                # K
    mu = 0.0                 # J

    [spacetime]
    kind = "de_sitter"       # minkowski | einstein_static | de_sitter | anti_de_sitter | kerr
    lambda = 1e-20           # 1/m^2

    [region]
    kind = "ball"            # ball | box | shell
    radius = 1e8             # m

Everything is validated while building :class:`RunConfig`, so a bad file
fails before any computation starts.
"""

import copy
import math
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import geometry as geo
from .errors import DomainError, ValidationError
from .gibbs.potential import BoundaryCondition, Potential

SECTIONS = (
    "constants", "gas", "spacetime", "region", "potential", "boundary", "sampler", "output",
    "vacuum", "sweep", "ads", "profile", "certificate", "kerr", "tolman",
)


@dataclass(frozen=True)
class SamplerSpec:
    seed: int = 0
    sweeps: int = 10_000
    burn_in: int = 1_000
    moves_per_sweep: int = 25
    step: float = None
    chains: int = 1
    trajectory: str = None


@dataclass(frozen=True)
class OutputSpec:
    format: str = None  # None: the subcommand default
    path: str = "-"


@dataclass
class RunConfig:
    constants: geo.PhysicalConstants
    gas: geo.GasSpec
    spacetime: geo.Spacetime
    region: geo.Region
    potential: Potential = None
    boundary: BoundaryCondition = None
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    raw: dict = field(default_factory=dict)

    def section(self, name):
        return dict(self.raw.get(name, {}))


def _parse_value(text):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw, overrides):
    """Apply ``section.key=value`` strings; values are parsed as TOML, else kept as strings."""
    out = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not of the form section.key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        if len(parts) < 2 or parts[0] not in SECTIONS:
            raise ValidationError(f"override key {key!r} must be section.key with section in {SECTIONS}")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ValidationError(f"override path {key!r} crosses a non-table value")
        node[parts[-1]] = _parse_value(value.strip())
    return out


def _num(sec, key, name, default=None, required=True):
    if key not in sec:
        if required and default is None:
            raise ValidationError(f"missing {name}.{key}")
        return default
    v = sec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{name}.{key} must be a number, got {v!r}")
    return float(v)


def _check_keys(sec, name, allowed):
    extra = set(sec) - set(allowed)
    if extra:
        raise ValidationError(f"unknown keys in [{name}]: {sorted(extra)}")


def build_constants(sec):
    _check_keys(sec, "constants", ("preset", "c", "hbar", "G", "k_B"))
    preset = sec.get("preset", "si")
    if preset == "si":
        base = geo.PhysicalConstants()
    elif preset == "natural":
        base = geo.PhysicalConstants.natural()
    else:
        raise ValidationError(f"constants.preset must be 'si' or 'natural', got {preset!r}")
    vals = {k: _num(sec, k, "constants", getattr(base, k)) for k in ("c", "hbar", "G", "k_B")}
    return geo.PhysicalConstants(**vals)


def build_gas(sec):
    _check_keys(sec, "gas", ("m", "T", "mu"))
    return geo.GasSpec(m=_num(sec, "m", "gas"), T=_num(sec, "T", "gas"), mu=_num(sec, "mu", "gas", 0.0))


def build_spacetime(sec, k):
    kind = sec.get("kind", "minkowski")
    if kind == "minkowski":
        _check_keys(sec, "spacetime", ("kind",))
        return geo.Minkowski()
    if kind in ("einstein_static", "de_sitter", "anti_de_sitter"):
        _check_keys(sec, "spacetime", ("kind", "lambda"))
        lam = _num(sec, "lambda", "spacetime")
        cls = {"einstein_static": geo.EinsteinStatic, "de_sitter": geo.DeSitter,
               "anti_de_sitter": geo.AntiDeSitter}[kind]
        return cls(lam)
    if kind == "kerr":
        _check_keys(sec, "spacetime", ("kind", "M", "a", "r0", "trust_fraction"))
        return geo.KerrCircularOrbit(
            M=_num(sec, "M", "spacetime"),
            a=_num(sec, "a", "spacetime", 0.0),
            r0=_num(sec, "r0", "spacetime"),
            G=k.G,
            c=k.c,
            trust_fraction=_num(sec, "trust_fraction", "spacetime", 0.1),
        )
    raise ValidationError(f"unknown spacetime kind {kind!r}")


def build_region(sec):
    kind = sec.get("kind", "ball")
    if kind == "ball":
        _check_keys(sec, "region", ("kind", "radius"))
        return geo.Ball(_num(sec, "radius", "region"))
    if kind == "shell":
        _check_keys(sec, "region", ("kind", "inner", "outer"))
        return geo.Shell(_num(sec, "inner", "region"), _num(sec, "outer", "region"))
    if kind == "box":
        _check_keys(sec, "region", ("kind", "half_extents"))
        h = sec.get("half_extents")
        if not isinstance(h, list) or len(h) != 3:
            raise ValidationError("region.half_extents must be a list of three lengths")
        return geo.Box(tuple(float(v) for v in h))
    raise ValidationError(f"unknown region kind {kind!r}")


def build_potential(sec):
    if not sec:
        return Potential.ideal()
    kind = sec.get("kind", "ideal")
    _check_keys(sec, "potential", ("kind", "hard_core", "range", "depth", "stability_B", "strength"))
    if kind == "ideal":
        return Potential.ideal(_num(sec, "range", "potential", 0.0))
    if kind == "hard_core":
        return Potential.hard_spheres(_num(sec, "hard_core", "potential"))
    if kind == "square_well":
        r_hc = _num(sec, "hard_core", "potential")
        R = _num(sec, "range", "potential")
        if not r_hc < R:
            raise ValidationError("potential.hard_core must be smaller than potential.range")
        return Potential.square_well(r_hc, R, _num(sec, "depth", "potential"))
    if kind == "infinite_range":
        # bounded repulsive g/(1 + d) tail with no cutoff
        g = _num(sec, "strength", "potential", 1.0)
        return Potential.infinite_range(lambda d: g / (1.0 + d), stability_B=_num(sec, "stability_B", "potential", 0.0))
    raise ValidationError(f"unknown potential kind {kind!r}")


def build_sampler(sec):
    _check_keys(sec, "sampler", ("seed", "sweeps", "burn_in", "moves_per_sweep", "step", "chains", "trajectory"))
    out = {}
    for key in ("seed", "sweeps", "burn_in", "moves_per_sweep", "chains"):
        if key in sec:
            v = sec[key]
            if isinstance(v, bool) or not isinstance(v, int):
                raise ValidationError(f"sampler.{key} must be an integer")
            out[key] = v
    if "step" in sec:
        out["step"] = _num(sec, "step", "sampler")
    if "trajectory" in sec:
        out["trajectory"] = str(sec["trajectory"])
    spec = SamplerSpec(**out)
    if spec.sweeps < 1 or spec.burn_in < 0 or spec.moves_per_sweep < 1 or spec.chains < 1:
        raise ValidationError("sampler counts must be positive (burn_in may be 0)")
    if not 0 <= spec.seed < 2**64:
        raise ValidationError("sampler.seed must fit in 64 bits")
    return spec


def build_output(sec):
    _check_keys(sec, "output", ("format", "path"))
    spec = OutputSpec(format=sec.get("format"), path=str(sec.get("path", "-")))
    if spec.format not in (None, "json", "csv"):
        raise ValidationError(f"output.format must be json or csv, got {spec.format!r}")
    return spec


def build_config(raw):
    """Validate a parsed configuration mapping and build a :class:`RunConfig`."""
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise ValidationError(f"unknown sections: {sorted(unknown)}")
    try:
        k = build_constants(raw.get("constants", {}))
        gas = build_gas(raw.get("gas", {}))
        st = build_spacetime(raw.get("spacetime", {}), k)
        region = build_region(raw.get("region", {}))
        geo.check_region(st, region)
        pot = build_potential(raw.get("potential", {}))
        bsec = raw.get("boundary", {})
        boundary = BoundaryCondition(bsec.get("points", [])).validate(region) if bsec else BoundaryCondition()
        return RunConfig(
            constants=k,
            gas=gas,
            spacetime=st,
            region=region,
            potential=pot,
            boundary=boundary,
            sampler=build_sampler(raw.get("sampler", {})),
            output=build_output(raw.get("output", {})),
            raw=raw,
        )
    except ValidationError:
        raise
    except DomainError as exc:
        raise ValidationError(str(exc)) from exc


def load_config(path, overrides=()):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path!r}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"config {path!r} is not valid TOML: {exc}") from exc
    return build_config(apply_overrides(raw, overrides))


def float_list(value, name):
    if not isinstance(value, list) or not value:
        raise ValidationError(f"{name} must be a nonempty list of numbers")
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a nonempty list of numbers") from None
    if not all(math.isfinite(v) for v in out):
        raise ValidationError(f"{name} entries must be finite")
    return out
