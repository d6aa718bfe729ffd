"""Scenario files: sectioned key = value text, one file per run.

Example::

    [scenario]
    name = fig1a

    [coefficients]
    alpha_bar = 8e-3
    ...

    [initial]
    kind = single
    k = 2
    theta = pi/6
    phi = pi

    [grid]
    L = 20
    N = 1024

    [integrator]
    dt = 0.03
    t_final = 200

    [output]
    snapshots = 0, 50, 100, 150, 200

The ``[grid]`` section is optional; without it the scenario only supports the
moment hierarchy.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import re
from importlib import resources

from .dynamics import DEFAULT_SNAPSHOTS, ScenarioConfig
from .grid import SpatialGrid
from .params import COEFFICIENT_KEYS, CoefficientSet

REQUIRED = ([("coefficients", k) for k in COEFFICIENT_KEYS]
            + [("initial", "theta"), ("initial", "phi"), ("integrator", "t_final")])
SCENARIO_PACKAGE = "oqbm.scenarios"

_ANGLE = re.compile(r"^\s*([-+]?[0-9.eE+-]*)\s*\*?\s*pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


class ConfigError(ValueError):
    pass


def parse_angle(text: str) -> float:
    """Accepts plain numbers and multiples of pi such as ``pi/6`` or ``3*pi/4``."""
    s = str(text).strip()
    m = _ANGLE.match(s)
    try:
        if m is None:
            return float(s)
        num = m.group(1)
        coef = 1.0 if num in ("", "+") else -1.0 if num == "-" else float(num)
        den = float(m.group(2)) if m.group(2) else 1.0
        return coef * math.pi / den
    except ValueError:
        raise ConfigError(f"cannot read angle {text!r}") from None


def _get(cp, section, key, conv, default=None):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None


def _float_list(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def parse(text: str, source="<string>") -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    for section, key in REQUIRED:
        if not cp.has_option(section, key):
            raise ConfigError(f"{source}: missing required key [{section}] {key}")
    known = {"scenario", "coefficients", "initial", "grid", "integrator", "output"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"{source}: unknown section(s) {sorted(extra)}")
    unknown = set(cp.options("coefficients")) - set(COEFFICIENT_KEYS)
    if unknown:
        raise ConfigError(f"{source}: unknown coefficient(s) {sorted(unknown)}")
    try:
        coeffs = CoefficientSet(**{k: _get(cp, "coefficients", k, float) for k in COEFFICIENT_KEYS})
        grid = None
        if cp.has_section("grid"):
            grid = SpatialGrid(_get(cp, "grid", "L", float, 20.0), _get(cp, "grid", "N", int, 1024))
        t_final = _get(cp, "integrator", "t_final", float)
        snaps = _get(cp, "output", "snapshots", _float_list,
                     tuple(s for s in DEFAULT_SNAPSHOTS if s <= t_final))
        return ScenarioConfig(
            coefficients=coeffs,
            kind=_get(cp, "initial", "kind", str, "single"),
            k=_get(cp, "initial", "k", float, 2.0),
            theta=_get(cp, "initial", "theta", parse_angle),
            phi=_get(cp, "initial", "phi", parse_angle),
            grid=grid,
            dt=_get(cp, "integrator", "dt", float, 0.02),
            t_final=t_final,
            snapshots=snaps,
            stride=_get(cp, "integrator", "stride", int, 10),
            nmax=_get(cp, "integrator", "nmax", int, 8),
            name=_get(cp, "scenario", "name", str, "scenario"),
            out_dir=_get(cp, "output", "out_dir", str, None),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from None


def load(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse(text, source=str(path))


def serialize(cfg: ScenarioConfig) -> str:
    """Text form that parses back to an equal config (floats written with repr)."""
    lines = ["[scenario]", f"name = {cfg.name}", "", "[coefficients]"]
    lines += [f"{k} = {v!r}" for k, v in cfg.coefficients.to_dict().items()]
    lines += ["", "[initial]", f"kind = {cfg.kind}", f"k = {float(cfg.k)!r}",
              f"theta = {float(cfg.theta)!r}", f"phi = {float(cfg.phi)!r}"]
    if cfg.grid is not None:
        lines += ["", "[grid]", f"L = {float(cfg.grid.L)!r}", f"N = {cfg.grid.N}"]
    lines += ["", "[integrator]", f"dt = {float(cfg.dt)!r}", f"t_final = {float(cfg.t_final)!r}",
              f"stride = {cfg.stride}", f"nmax = {cfg.nmax}"]
    lines += ["", "[output]", "snapshots = " + ", ".join(repr(float(s)) for s in cfg.snapshots)]
    if cfg.out_dir is not None:
        lines.append(f"out_dir = {cfg.out_dir}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()


def bundled_names() -> list:
    root = resources.files(SCENARIO_PACKAGE)
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def bundled_text(name: str) -> str:
    path = resources.files(SCENARIO_PACKAGE) / f"{name}.ini"
    if not path.is_file():
        raise ConfigError(f"no bundled scenario {name!r}; available: {', '.join(bundled_names())}")
    return path.read_text(encoding="utf-8")


def bundled(name: str) -> ScenarioConfig:
    return parse(bundled_text(name), source=f"{name}.ini")


def resolve(spec) -> ScenarioConfig:
    """A path to a config file, or the name of a bundled scenario."""
    s = str(spec)
    if s.endswith(".ini") or "/" in s:
        return load(s)
    return bundled(s)
