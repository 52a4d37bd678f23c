"""
Scenario files: a flat JSON document describing the frequency plan, the room,
the transmitters, the receiver and the named receiver grids of a run.

Unknown keys are rejected, and every validation error names the field path
that caused it, e.g. ``transmitters[1].position_m``.
"""
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

from mpcsd import conf
from mpcsd.coverage import GridSpec
from mpcsd.exceptions import InvalidPlanError, ScenarioParseError, ScenarioValidationError
from mpcsd.propagation import (
    FREE_SPACE,
    SURFACES,
    Antenna,
    Material,
    Room,
    Transmitter,
    check_regulatory,
)
from mpcsd.schemes import Scheme
from mpcsd.spectrum import FrequencyPlan, plan_offsets

logger = logging.getLogger(__name__)

BUNDLED_DIR = Path(__file__).resolve().parent / "scenarios"
ALIASES_FILE = BUNDLED_DIR / "aliases.json"
SUFFIX = ".scenario"
FREE_SPACE_KEYWORD = "free_space"
_REQUIRED = object()


@dataclass(frozen=True)
class CoverageOptions:
    p_req_min: float = -80.0
    p_req_max: float = 20.0
    p_req_step: float = 0.1


@dataclass(frozen=True)
class Scenario:
    name: str
    plan: FrequencyPlan
    room: Room
    transmitters: tuple
    receiver: Antenna
    load_ohms: float
    grids: tuple
    max_order: int
    schemes: tuple
    coverage: CoverageOptions = CoverageOptions()

    @property
    def center_frequency(self):
        return self.plan.center_frequency

    @property
    def offsets(self):
        return tuple(tx.carrier_offset for tx in self.transmitters)

    def grid(self, name):
        for grid in self.grids:
            if grid.name == name:
                return grid
        raise ScenarioValidationError("grids", f"no grid named {name!r}")

    def restricted(self, schemes=None, grids=None, max_order=None):
        """Copy of the scenario limited to ``schemes``/``grids`` and with another reflection order."""
        changes = {}
        if schemes:
            changes["schemes"] = tuple(_scheme(name, "schemes", len(self.transmitters)).name for name in schemes)
        if grids:
            changes["grids"] = tuple(self.grid(name) for name in grids)
        if max_order is not None:
            if max_order < 0:
                raise ScenarioValidationError("max_order", f"must be non-negative, got {max_order}")
            changes["max_order"] = max_order
        return replace(self, **changes)


class _Section:
    """A JSON object being consumed key by key, remembering where it sits in the document."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ScenarioValidationError(path or "<root>", f"expected an object, got {type(data).__name__}")
        self.data = data
        self.path = path
        self.seen = set()

    def child(self, key):
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, default=_REQUIRED):
        self.seen.add(key)
        if key in self.data:
            return self.data[key]
        if default is _REQUIRED:
            raise ScenarioValidationError(self.child(key), "missing required key")
        return default

    def number(self, key, default=_REQUIRED):
        value = self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioValidationError(self.child(key), f"expected a number, got {value!r}")
        return float(value)

    def integer(self, key, default=_REQUIRED):
        value = self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioValidationError(self.child(key), f"expected an integer, got {value!r}")
        return value

    def string(self, key, default=_REQUIRED):
        value = self.get(key, default)
        if not isinstance(value, str):
            raise ScenarioValidationError(self.child(key), f"expected a string, got {value!r}")
        return value

    def vector(self, key, length, default=_REQUIRED):
        value = self.get(key, default)
        if (
            not isinstance(value, list)
            or len(value) != length
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
        ):
            raise ScenarioValidationError(self.child(key), f"expected {length} numbers, got {value!r}")
        return tuple(float(v) for v in value)

    def section(self, key, default=_REQUIRED):
        return _Section(self.get(key, default), self.child(key))

    def items(self, key, default=_REQUIRED):
        value = self.get(key, default)
        if not isinstance(value, list):
            raise ScenarioValidationError(self.child(key), f"expected a list, got {type(value).__name__}")
        return [(f"{self.child(key)}[{i}]", item) for i, item in enumerate(value)]

    def finish(self):
        for key in self.data:
            if key not in self.seen:
                raise ScenarioValidationError(self.child(key), "unknown key")


def _guarded(path, build):
    try:
        return build()
    except (ValueError, InvalidPlanError) as exc:
        if isinstance(exc, ScenarioValidationError):
            raise
        raise ScenarioValidationError(path, str(exc)) from exc


def _scheme(name, path, tx_count):
    scheme = _guarded(path, lambda: Scheme.parse(name))
    if scheme.tx_index is not None and scheme.tx_index >= tx_count:
        raise ScenarioValidationError(path, f"scheme {name!r} refers to a missing transmitter")
    return scheme


def _antenna(section, position=(0.0, 0.0, 0.0)):
    exponent = section.get("pattern_exponent", None)
    return _guarded(
        section.path,
        lambda: Antenna(
            position=position,
            boresight=section.vector("boresight", 3, [1.0, 0.0, 0.0]),
            gain_dbi=section.number("gain_dbi", 0.0),
            polarization=section.string("polarization", "horizontal"),
            pattern=section.string("pattern", "isotropic"),
            exponent=None if exponent is None else section.number("pattern_exponent"),
        ),
    )


def _material(section):
    material = _guarded(
        section.path,
        lambda: Material(
            permittivity=section.number("permittivity"),
            conductivity=section.number("conductivity_s_m", 0.0),
        ),
    )
    section.finish()
    return material


def _room(root):
    value = root.get("room", FREE_SPACE_KEYWORD)
    if value == FREE_SPACE_KEYWORD:
        return FREE_SPACE
    section = _Section(value, "room")
    bounds_path = section.child("bounds_m")
    bounds = section.get("bounds_m")
    if not isinstance(bounds, list) or len(bounds) != 3:
        raise ScenarioValidationError(bounds_path, "expected three [low, high] pairs")
    pairs = [_Section({"range": pair}, f"{bounds_path}[{i}]").vector("range", 2) for i, pair in enumerate(bounds)]
    materials = section.section("materials", {})
    default = materials.get("default", None)
    default = _material(materials.section("default")) if default is not None else Material()
    per_surface = {}
    for surface in SURFACES:
        if materials.get(surface, None) is not None:
            per_surface[surface] = _material(materials.section(surface))
    materials.finish()
    section.finish()
    return _guarded("room", lambda: Room.box(pairs, material=default, **per_surface))


def _transmitters(root, room):
    transmitters = []
    for path, item in root.items("transmitters"):
        section = _Section(item, path)
        name = section.string("name", f"tx{len(transmitters) + 1}")
        position = section.vector("position_m", 3)
        antenna = _antenna(section, position)
        tx = Transmitter(antenna=antenna, power_dbm=section.number("power_dbm"), name=name)
        section.finish()
        _guarded(f"{path}.power_dbm", lambda: check_regulatory(tx))
        if not room.contains(antenna.position):
            raise ScenarioValidationError(path, f"transmitter {name!r} lies outside the room")
        transmitters.append(tx)
    if not transmitters:
        raise ScenarioValidationError("transmitters", "at least one transmitter is required")
    return transmitters


def _frequency(root, tx_count):
    section = root.section("frequency")
    explicit = section.get("offsets_hz", None)
    subcarriers = section.integer("subcarrier_count", tx_count)
    plan = _guarded(
        section.path,
        lambda: FrequencyPlan(
            center_frequency=section.number("center_hz"),
            bandwidth=section.number("bandwidth_hz"),
            subcarrier_count=subcarriers,
        ),
    )
    if explicit is None:
        if subcarriers != tx_count:
            raise ScenarioValidationError(
                section.child("subcarrier_count"), f"{subcarriers} subcarriers for {tx_count} transmitters"
            )
        offsets = plan_offsets(plan)
    else:
        offsets = section.vector("offsets_hz", tx_count)
        half_band = plan.bandwidth / 2
        if any(abs(offset) >= half_band for offset in offsets):
            raise ScenarioValidationError(section.child("offsets_hz"), "offsets must stay inside the channel")
    section.finish()
    return plan, offsets


def _grids(root, room):
    grids = []
    for path, item in root.items("grids"):
        section = _Section(item, path)
        grid = _guarded(
            path,
            lambda: GridSpec(
                name=section.string("name"),
                x=section.vector("x_m", 2),
                y=section.vector("y_m", 2),
                z=section.vector("z_m", 2),
                step=section.number("step_m"),
                slice_axis=section.get("slice_axis", None),
            ),
        )
        section.finish()
        if any(g.name == grid.name for g in grids):
            raise ScenarioValidationError(f"{path}.name", f"duplicate grid name {grid.name!r}")
        if not room.is_free_space and not all(room.contains(point) for point in grid.points()):
            raise ScenarioValidationError(path, f"grid {grid.name!r} leaves the room")
        grids.append(grid)
    if not grids:
        raise ScenarioValidationError("grids", "at least one grid is required")
    return grids


def _coverage_options(root):
    section = root.section("coverage", {})
    defaults = CoverageOptions()
    options = CoverageOptions(
        p_req_min=section.number("p_req_min_dbm", defaults.p_req_min),
        p_req_max=section.number("p_req_max_dbm", defaults.p_req_max),
        p_req_step=section.number("p_req_step_db", defaults.p_req_step),
    )
    section.finish()
    if not options.p_req_max >= options.p_req_min or not options.p_req_step > 0:
        raise ScenarioValidationError("coverage", "expected p_req_min_dbm <= p_req_max_dbm and a positive step")
    return options


def scenario_from_dict(data, name="scenario"):
    root = _Section(data, "")
    name = root.string("name", name)
    room = _room(root)
    transmitters = _transmitters(root, room)
    plan, offsets = _frequency(root, len(transmitters))
    transmitters = tuple(replace(tx, carrier_offset=float(offset)) for tx, offset in zip(transmitters, offsets))

    receiver_section = root.section("receiver", {})
    load_ohms = receiver_section.number("load_ohms", conf.DEFAULT_LOAD_OHMS)
    if not load_ohms > 0:
        raise ScenarioValidationError("receiver.load_ohms", f"must be positive, got {load_ohms}")
    receiver = _antenna(receiver_section)
    receiver_section.finish()

    grids = _grids(root, room)
    max_order = root.integer("max_order", conf.DEFAULT_MAX_ORDER)
    if max_order < 0:
        raise ScenarioValidationError("max_order", f"must be non-negative, got {max_order}")
    default_schemes = [f"sp{n}" for n in range(1, len(transmitters) + 1)] + ["mp", "mpcsd"]
    schemes = []
    for path, label in root.items("schemes", default_schemes):
        if not isinstance(label, str):
            raise ScenarioValidationError(path, f"expected a scheme name, got {label!r}")
        schemes.append(_scheme(label, path, len(transmitters)).name)
    coverage = _coverage_options(root)
    root.finish()
    return Scenario(
        name=name,
        plan=plan,
        room=room,
        transmitters=transmitters,
        receiver=receiver,
        load_ohms=load_ohms,
        grids=tuple(grids),
        max_order=max_order,
        schemes=tuple(schemes),
        coverage=coverage,
    )


def parse_scenario(text, path="<string>", name="scenario"):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(path, exc.lineno, exc.colno, exc.msg) from exc
    return scenario_from_dict(data, name=name)


def bundled_aliases():
    """Alternative names the bundled scenarios answer to, mapped to their file stems."""
    with ALIASES_FILE.open(encoding="utf-8") as handle:
        return json.load(handle)


def resolve_path(path):
    """``path`` itself, or the bundled scenario of that name or alias."""
    candidate = Path(path)
    if candidate.exists():
        return candidate
    stem = candidate.stem if candidate.suffix == SUFFIX else candidate.name
    stem = bundled_aliases().get(stem, stem)
    bundled = BUNDLED_DIR / (f"{stem}{SUFFIX}" if candidate.suffix in ("", SUFFIX) else stem)
    return bundled if bundled.exists() else candidate


def load_scenario(path):
    path = resolve_path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(str(path), 0, 0, exc.strerror or str(exc)) from exc
    scenario = parse_scenario(text, path=str(path), name=path.stem)
    logger.debug("loaded scenario %r from %s", scenario.name, path)
    return scenario


def _antenna_dict(antenna):
    data = {
        "boresight": list(antenna.boresight),
        "gain_dbi": antenna.gain_dbi,
        "polarization": antenna.polarization.value,
        "pattern": antenna.pattern.value,
    }
    if antenna.exponent is not None:
        data["pattern_exponent"] = antenna.exponent
    return data


def _material_dict(material):
    return {"permittivity": material.permittivity, "conductivity_s_m": material.conductivity}


def scenario_to_dict(scenario):
    if scenario.room.is_free_space:
        room = FREE_SPACE_KEYWORD
    else:
        room = {
            "bounds_m": [list(pair) for pair in scenario.room.bounds],
            "materials": {s: _material_dict(m) for s, m in zip(SURFACES, scenario.room.materials)},
        }
    grids = []
    for grid in scenario.grids:
        item = {"name": grid.name, "x_m": list(grid.x), "y_m": list(grid.y), "z_m": list(grid.z), "step_m": grid.step}
        if grid.slice_axis is not None:
            item["slice_axis"] = grid.slice_axis
        grids.append(item)
    return {
        "name": scenario.name,
        "frequency": {
            "center_hz": scenario.plan.center_frequency,
            "bandwidth_hz": scenario.plan.bandwidth,
            "subcarrier_count": scenario.plan.subcarrier_count,
            "offsets_hz": list(scenario.offsets),
        },
        "room": room,
        "transmitters": [
            {"name": tx.name, "position_m": list(tx.antenna.position), "power_dbm": tx.power_dbm, **_antenna_dict(tx.antenna)}
            for tx in scenario.transmitters
        ],
        "receiver": {"load_ohms": scenario.load_ohms, **_antenna_dict(scenario.receiver)},
        "grids": grids,
        "max_order": scenario.max_order,
        "schemes": list(scenario.schemes),
        "coverage": {
            "p_req_min_dbm": scenario.coverage.p_req_min,
            "p_req_max_dbm": scenario.coverage.p_req_max,
            "p_req_step_db": scenario.coverage.p_req_step,
        },
    }


def dump_scenario(scenario):
    return json.dumps(scenario_to_dict(scenario), indent=2) + "\n"
