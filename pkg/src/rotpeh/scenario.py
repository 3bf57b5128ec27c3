"""Scenario files: YAML with unit suffixes, validated into simulation inputs.

A scenario file looks like::

    name: baseline
    device:
      M1: 2.42 g
      L3: 57 mm
    sweep:
      direction: both
      f_start: 11 Hz
      f_end: 16.5 Hz
      df: 0.05 Hz
    stoppers:
      - preset: A
        d: 14.4 mm
    magnets:
      - target: main
        d: 48.5 mm

Bare numbers are taken as SI.  Every error carries the file line of the
offending key.  A JSON run manifest is also accepted: its embedded
``scenario`` block is loaded in place of the file body.
"""
from __future__ import annotations

import dataclasses
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .forces import MagnetConfig, StopperConfig, stopper_preset
from .geometry import ConfigError, HarvesterConfig
from .simulate import SweepPlan

log = logging.getLogger(__name__)

# unit -> (dimension, factor to SI)
UNITS = {
    "m": ("length", 1.0), "cm": ("length", 1e-2), "mm": ("length", 1e-3), "um": ("length", 1e-6),
    "kg": ("mass", 1.0), "g": ("mass", 1e-3), "mg": ("mass", 1e-6),
    "Hz": ("frequency", 1.0), "rpm": ("frequency", 1 / 60),
    "Pa": ("pressure", 1.0), "kPa": ("pressure", 1e3), "MPa": ("pressure", 1e6), "GPa": ("pressure", 1e9),
    "kg/m^3": ("density", 1.0), "kg/m3": ("density", 1.0), "g/cm^3": ("density", 1e3), "g/cm3": ("density", 1e3),
    "F": ("capacitance", 1.0), "uF": ("capacitance", 1e-6), "nF": ("capacitance", 1e-9),
    "pF": ("capacitance", 1e-12),
    "ohm": ("resistance", 1.0), "kohm": ("resistance", 1e3), "Mohm": ("resistance", 1e6),
    "m/s^2": ("acceleration", 1.0), "m/s2": ("acceleration", 1.0),
    "T": ("flux", 1.0), "mT": ("flux", 1e-3),
    "m/V": ("strain_coefficient", 1.0), "pm/V": ("strain_coefficient", 1e-12),
    "C/N": ("strain_coefficient", 1.0), "pC/N": ("strain_coefficient", 1e-12),
    "kg*m^2": ("inertia", 1.0), "g*mm^2": ("inertia", 1e-9),
}

LENGTH, MASS, FREQ = "length", "mass", "frequency"

DEVICE_DIMENSIONS = {
    "rotation_radius": LENGTH, "L1": LENGTH, "L2": LENGTH, "L3": LENGTH, "L4": LENGTH,
    "mass_length": LENGTH, "pzt_length": LENGTH, "pzt_offset": LENGTH, "b1": LENGTH, "b2": LENGTH,
    "be": LENGTH, "rail_width": LENGTH, "hs": LENGTH, "he": LENGTH, "inner_thickness": LENGTH,
    "Ys": "pressure", "Yp": "pressure", "Ype": "pressure", "rho_s": "density", "rho_e": "density",
    "M1": MASS, "M2": MASS, "d31": "strain_coefficient", "Cp": "capacitance", "Rl": "resistance",
    "zeta1": None, "zeta2": None, "g": "acceleration", "include_pzt_mass": bool,
    "tip_inertia": "inertia", "centrifugal_model": str, "coupling_form": str,
}
STOPPER_DIMENSIONS = {
    "preset": str, "target": str, "d": LENGTH, "L_st": LENGTH, "b_st": LENGTH, "h_st": LENGTH,
    "Y_st": "pressure", "rho_st": "density", "M_st": MASS, "mass_length": LENGTH, "zeta_st": None,
    "R_st": LENGTH, "side": str,
}
MAGNET_DIMENSIONS = {
    "target": str, "a1": LENGTH, "b1": LENGTH, "c1": LENGTH, "a2": LENGTH, "b2": LENGTH, "c2": LENGTH,
    "B1": "flux", "B2": "flux", "d": LENGTH, "polarity": str, "opening": None,
}
SWEEP_DIMENSIONS = {
    "direction": str, "f_start": FREQ, "f_end": FREQ, "df": FREQ, "settle_cycles": int,
    "measure_cycles": int, "carry_state": bool,
}
MAP_DIMENSIONS = {"f_start": FREQ, "f_end": FREQ, "df": FREQ}
SOLVER_DIMENSIONS = {"rtol": None, "atol": None, "samples_per_period": int}
MAGFORCE_DIMENSIONS = {"gap_start": LENGTH, "gap_end": LENGTH, "points": int}
TOP_KEYS = {"name", "device", "sweep", "frequency_map", "stoppers", "magnets", "solver", "magforce",
            "output"}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


class ScenarioError(ConfigError):
    """Scenario problem tied to a key path and, when known, a file line."""

    def __init__(self, field_name: str, message: str, line: int | None = None, source: str | None = None):
        where = f"{source or '<scenario>'}:{line}: " if line is not None else ""
        ValueError.__init__(self, f"{where}{field_name}: {message}")
        self.field = field_name
        self.line = line
        self.source = source


# --------------------------------------------------------------------------- YAML with line marks


def _plain(node, path: str, lines: dict):
    """Convert a composed YAML node to Python data, recording 1-based lines per key path."""
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = str(key_node.value)
            sub = f"{path}.{key}" if path else key
            if key in out:
                raise ScenarioError(sub, "duplicate key", key_node.start_mark.line + 1)
            out[key] = _plain(value_node, sub, lines)
            lines[sub] = key_node.start_mark.line + 1
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_plain(item, f"{path}[{k}]", lines) for k, item in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node)) if node.tag != "tag:yaml.org,2002:str" else node.value


def parse_quantity(value, dimension, key: str = "value"):
    """Resolve ``value`` (number or ``"<number> <unit>"``) to SI for ``dimension``.

    ``dimension`` None means dimensionless; the Python types ``str``, ``bool``
    and ``int`` request a value of that type.
    """
    if dimension is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if dimension is str:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected text, got {value!r}")
        return value
    if dimension is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if dimension == "inertia" and isinstance(value, (list, tuple)):
        return tuple(parse_quantity(v, dimension, key) for v in value)
    if isinstance(value, bool):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(key, f"expected a number with optional unit, got {value!r}")
    match = _NUMBER.match(value)
    if not match:
        raise ConfigError(key, f"cannot parse quantity {value!r}")
    number, unit = float(match.group(1)), match.group(2)
    if not unit:
        return number
    if unit not in UNITS:
        raise ConfigError(key, f"unknown unit {unit!r}")
    unit_dim, factor = UNITS[unit]
    if unit_dim != dimension:
        raise ConfigError(key, f"unit {unit!r} is a {unit_dim}, expected {dimension or 'a plain number'}")
    return number * factor


# --------------------------------------------------------------------------- scenario


@dataclass(frozen=True)
class MapRange:
    """Drive-frequency grid for the natural-frequency map."""

    f_start: float = 0.0
    f_end: float = 20.0
    df: float = 0.25

    def __post_init__(self):
        if self.df <= 0 or self.f_end <= self.f_start or self.f_start < 0:
            raise ConfigError("frequency_map", "need 0 <= f_start < f_end and df > 0")


@dataclass(frozen=True)
class MagforceRange:
    """Coaxial gaps (centre to centre) tabulated by the ``magforce`` subcommand."""

    gap_start: float = 20e-3
    gap_end: float = 60e-3
    points: int = 41

    def __post_init__(self):
        if self.gap_start <= 0 or self.gap_end <= self.gap_start or self.points < 2:
            raise ConfigError("magforce", "need 0 < gap_start < gap_end and points >= 2")


@dataclass(frozen=True)
class Scenario:
    """One fully validated simulation case."""

    name: str
    config: HarvesterConfig
    plan: SweepPlan
    directions: tuple[str, ...] = ("up", "down")
    stoppers: tuple[StopperConfig, ...] = ()
    magnets: tuple[MagnetConfig, ...] = ()
    fmap: MapRange = MapRange()
    magforce: MagforceRange = MagforceRange()
    rtol: float = 1e-8
    atol: float = 1e-10
    samples_per_period: int = 64
    output: str | None = None
    source: str | None = None
    raw: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        seen = set()
        for kind, items in (("stopper", self.stoppers), ("magnet", self.magnets)):
            for item in items:
                if (kind, item.target) in seen:
                    raise ConfigError(f"{kind}s", f"more than one {kind} on the {item.target} beam")
                seen.add((kind, item.target))
        if not self.rtol > 0 or not self.atol > 0:
            raise ConfigError("solver", "tolerances must be positive")
        if self.samples_per_period < 50:
            raise ConfigError("solver.samples_per_period", "need at least 50 samples per period")

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


def _section(data: dict, key: str, dims: dict, lines: dict, source, strict: bool, prefix: str) -> dict:
    out = {}
    for name, value in data.items():
        path = f"{prefix}.{name}" if prefix else name
        if name not in dims:
            msg = f"unknown key {name!r}"
            if strict:
                raise ScenarioError(path, msg, lines.get(path), source)
            log.warning("%s:%s: %s (ignored)", source or "<scenario>", lines.get(path), msg)
            continue
        try:
            out[name] = parse_quantity(value, dims[name], path)
        except ConfigError as exc:
            raise ScenarioError(path, str(exc).split(": ", 1)[-1], lines.get(path), source) from None
    return out


def _build(factory, kwargs: dict, prefix: str, lines: dict, source):
    try:
        return factory(**kwargs)
    except ConfigError as exc:
        path = f"{prefix}.{exc.field}" if prefix else exc.field
        line = lines.get(path, lines.get(prefix))
        raise ScenarioError(path, str(exc).split(": ", 1)[-1], line, source) from None
    except (TypeError, ValueError) as exc:
        raise ScenarioError(prefix, str(exc), lines.get(prefix), source) from None


def _mapping(data, path: str, lines: dict, source) -> dict:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ScenarioError(path, "expected a mapping", lines.get(path), source)
    return data


def scenario_from_dict(data: dict, *, lines: dict | None = None, source: str | None = None,
                       strict: bool = False) -> Scenario:
    """Validate plain scenario data (as parsed from YAML) into a ``Scenario``."""
    lines = lines or {}
    data = _mapping(data, "", lines, source)
    for key in data:
        if key not in TOP_KEYS:
            if strict:
                raise ScenarioError(key, f"unknown key {key!r}", lines.get(key), source)
            log.warning("%s:%s: unknown key %r (ignored)", source or "<scenario>", lines.get(key), key)
    name = data.get("name", Path(source).stem if source else "scenario")
    if not isinstance(name, str) or not name:
        raise ScenarioError("name", "expected a non-empty string", lines.get("name"), source)

    device = _section(_mapping(data.get("device"), "device", lines, source), "device", DEVICE_DIMENSIONS,
                      lines, source, strict, "device")
    config = _build(HarvesterConfig, device, "device", lines, source)

    sweep_data = _section(_mapping(data.get("sweep"), "sweep", lines, source), "sweep", SWEEP_DIMENSIONS,
                          lines, source, strict, "sweep")
    direction = sweep_data.pop("direction", "both")
    if direction not in ("up", "down", "both"):
        raise ScenarioError("sweep.direction", "expected up, down or both", lines.get("sweep.direction"),
                            source)
    directions = ("up", "down") if direction == "both" else (direction,)
    plan = _build(SweepPlan, {"direction": directions[0], **sweep_data}, "sweep", lines, source)

    stoppers = []
    stopper_list = data.get("stoppers") or []
    if not isinstance(stopper_list, list):
        raise ScenarioError("stoppers", "expected a list", lines.get("stoppers"), source)
    for k, item in enumerate(stopper_list):
        prefix = f"stoppers[{k}]"
        values = _section(_mapping(item, prefix, lines, source), prefix, STOPPER_DIMENSIONS, lines, source,
                          strict, prefix)
        preset = values.pop("preset", None)
        factory = (lambda **kw: stopper_preset(preset, **kw)) if preset else StopperConfig
        stoppers.append(_build(factory, values, prefix, lines, source))

    magnets = []
    magnet_list = data.get("magnets") or []
    if not isinstance(magnet_list, list):
        raise ScenarioError("magnets", "expected a list", lines.get("magnets"), source)
    for k, item in enumerate(magnet_list):
        prefix = f"magnets[{k}]"
        values = _section(_mapping(item, prefix, lines, source), prefix, MAGNET_DIMENSIONS, lines, source,
                          strict, prefix)
        magnets.append(_build(MagnetConfig, values, prefix, lines, source))

    fmap = _build(MapRange, _section(_mapping(data.get("frequency_map"), "frequency_map", lines, source),
                                     "frequency_map", MAP_DIMENSIONS, lines, source, strict, "frequency_map"),
                  "frequency_map", lines, source)
    magforce = _build(MagforceRange, _section(_mapping(data.get("magforce"), "magforce", lines, source),
                                              "magforce", MAGFORCE_DIMENSIONS, lines, source, strict,
                                              "magforce"), "magforce", lines, source)
    solver = _section(_mapping(data.get("solver"), "solver", lines, source), "solver", SOLVER_DIMENSIONS,
                      lines, source, strict, "solver")
    output = data.get("output")
    return _build(Scenario, dict(name=name, config=config, plan=plan, directions=directions,
                                 stoppers=tuple(stoppers), magnets=tuple(magnets), fmap=fmap,
                                 magforce=magforce, output=output, source=source, raw=data, **solver),
                  "", lines, source)


def read_yaml(path) -> tuple[dict, dict]:
    """Parse a YAML (or JSON) file into plain data plus a key-path to line map."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ScenarioError("<file>", f"parse error: {getattr(exc, 'problem', exc)}", line, str(path)) from None
    lines: dict = {}
    if node is None:
        return {}, lines
    return _plain(node, "", lines), lines


def load_scenario(path, *, strict: bool = False) -> Scenario:
    """Load and validate a scenario file or the scenario embedded in a run manifest."""
    data, lines = read_yaml(path)
    if isinstance(data, dict) and "manifest_version" in data:
        data = data.get("scenario", {})
        lines = {}
    return scenario_from_dict(data, lines=lines, source=str(path), strict=strict)


def scenario_to_dict(scenario: Scenario) -> dict:
    """Plain SI description that loads back into an identical scenario."""
    cfg = dataclasses.asdict(scenario.config)
    if cfg["tip_inertia"] is not None:
        cfg["tip_inertia"] = list(cfg["tip_inertia"])
    plan = dataclasses.asdict(scenario.plan)
    plan.pop("direction")
    plan["direction"] = "both" if len(scenario.directions) == 2 else scenario.directions[0]
    out = {
        "name": scenario.name,
        "device": cfg,
        "sweep": plan,
        "stoppers": [dataclasses.asdict(s) for s in scenario.stoppers],
        "magnets": [dataclasses.asdict(m) for m in scenario.magnets],
        "frequency_map": dataclasses.asdict(scenario.fmap),
        "magforce": dataclasses.asdict(scenario.magforce),
        "solver": {"rtol": scenario.rtol, "atol": scenario.atol,
                   "samples_per_period": scenario.samples_per_period},
    }
    for s in out["stoppers"]:
        if s["side"] is None:
            s.pop("side")
    for key in ("device",):
        out[key] = {k: v for k, v in out[key].items() if v is not None}
    return out
