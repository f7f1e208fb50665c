"""Scenario documents: the declarative setup for one simulation run.

A scenario is a YAML document with a fixed schema. Validation is strict:
unknown fields are rejected with the path to the offending key, every number
must be finite, and referential rules (event ids, priority permutation) are
checked up front so a scenario that loads is a scenario that runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

import yaml

from .errors import ScenarioError
from .geometry import Disc, Polygon, Shape, Vec2, is_convex, polygon_area, shape_to_dict
from .safety import (
    Behavior,
    ConstraintId,
    GuidanceZoneParams,
    Occluder,
    SafetyParams,
    Side,
)


@dataclass(frozen=True)
class RobotSetup:
    position: Vec2
    heading: float
    cruise_speed: float


@dataclass(frozen=True)
class WorkerSetup:
    worker_id: str
    position: Vec2
    speed: float


@dataclass(frozen=True)
class OccluderSetup:
    occluder_id: str
    kind: str
    shape: Shape  # already placed in workspace coordinates
    speed: float

    def to_occluder(self) -> Occluder:
        return Occluder(occluder_id=self.occluder_id, kind=self.kind, shape=self.shape)


@dataclass(frozen=True)
class SetWorkerWaypoint:
    tick: int
    target: Vec2


@dataclass(frozen=True)
class SetOccluderWaypoint:
    tick: int
    occluder_id: str
    target: Vec2


@dataclass(frozen=True)
class SpawnOccluder:
    tick: int
    setup: OccluderSetup


@dataclass(frozen=True)
class RemoveOccluderEvent:
    tick: int
    occluder_id: str


@dataclass(frozen=True)
class SetNominal:
    tick: int
    behavior: Behavior


Event = Union[
    SetWorkerWaypoint, SetOccluderWaypoint, SpawnOccluder, RemoveOccluderEvent, SetNominal
]


@dataclass(frozen=True)
class Scenario:
    name: str
    tick_duration: float
    horizon: int
    seed: int
    params: SafetyParams
    robot: RobotSetup
    worker: WorkerSetup
    occluders: tuple[OccluderSetup, ...] = ()
    events: tuple[Event, ...] = ()
    nominal: tuple[tuple[int, Behavior], ...] = ()

    def nominal_changes(self) -> dict[int, Behavior]:
        """Tick -> behavior map of explicit nominal entries, including
        SetNominal events. An entry marks a fresh plan from that tick on."""
        changes = {tick: behavior for tick, behavior in self.nominal}
        for event in self.events:
            if isinstance(event, SetNominal):
                changes[event.tick] = event.behavior
        return changes

    def to_dict(self) -> dict:
        """Normalized document form, suitable for re-serialization."""
        return {
            "name": self.name,
            "tick_duration": self.tick_duration,
            "horizon": self.horizon,
            "seed": self.seed,
            "params": {
                "d_min": self.params.d_min,
                "v_min": self.params.v_min,
                "guidance_zone": self.params.guidance_zone.to_dict(),
                "priorities": [p.value for p in self.params.rule_priorities],
            },
            "robot": {
                "x": self.robot.position.x,
                "y": self.robot.position.y,
                "heading": self.robot.heading,
                "cruise_speed": self.robot.cruise_speed,
            },
            "worker": {
                "id": self.worker.worker_id,
                "x": self.worker.position.x,
                "y": self.worker.position.y,
                "speed": self.worker.speed,
            },
            "occluders": [_occluder_setup_dict(o) for o in self.occluders],
            "events": [_event_dict(e) for e in self.events],
            "nominal": [
                {"tick": tick, "behavior": behavior.value} for tick, behavior in self.nominal
            ],
        }


def _occluder_setup_dict(setup: OccluderSetup) -> dict:
    ref = setup.shape.reference_point()
    shape = shape_to_dict(setup.shape)
    if shape["type"] == "disc":
        local: dict[str, Any] = {"type": "disc", "radius": shape["radius"]}
    else:
        local = {
            "type": "polygon",
            "points": [[x - ref.x, y - ref.y] for x, y in shape["points"]],
        }
    return {
        "id": setup.occluder_id,
        "kind": setup.kind,
        "shape": local,
        "x": ref.x,
        "y": ref.y,
        "speed": setup.speed,
    }


def _event_dict(event: Event) -> dict:
    if isinstance(event, SetWorkerWaypoint):
        return {
            "tick": event.tick,
            "type": "set_worker_waypoint",
            "x": event.target.x,
            "y": event.target.y,
        }
    if isinstance(event, SetOccluderWaypoint):
        return {
            "tick": event.tick,
            "type": "set_occluder_waypoint",
            "id": event.occluder_id,
            "x": event.target.x,
            "y": event.target.y,
        }
    if isinstance(event, SpawnOccluder):
        entry = _occluder_setup_dict(event.setup)
        entry.update({"tick": event.tick, "type": "spawn_occluder"})
        return entry
    if isinstance(event, RemoveOccluderEvent):
        return {"tick": event.tick, "type": "remove_occluder", "id": event.occluder_id}
    if isinstance(event, SetNominal):
        return {"tick": event.tick, "type": "set_nominal", "behavior": event.behavior.value}
    raise TypeError(f"unknown event type: {event!r}")


# --- validation helpers ------------------------------------------------------

_BEHAVIOR_ALIASES = {
    "continue": Behavior.CONTINUE,
    "slowdown": Behavior.SLOW_DOWN,
    "slow_down": Behavior.SLOW_DOWN,
    "pause": Behavior.PAUSE,
    "stop": Behavior.STOP,
    "manual": Behavior.MANUAL_FOLLOW,
    "manual_follow": Behavior.MANUAL_FOLLOW,
}


def _require_mapping(value: Any, path: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise ScenarioError("expected a mapping", path)
    return value


def _require_keys(data: Mapping, path: str, required: Sequence[str], optional: Sequence[str] = ()) -> None:
    for key in data:
        if key not in required and key not in optional:
            raise ScenarioError("unknown field", f"{path}.{key}" if path else str(key))
    for key in required:
        if key not in data:
            raise ScenarioError("missing required field", f"{path}.{key}" if path else str(key))


def _number(data: Mapping, path: str, key: str) -> float:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError("expected a number", f"{path}.{key}")
    value = float(value)
    if not math.isfinite(value):
        raise ScenarioError("number must be finite", f"{path}.{key}")
    return value


def _integer(data: Mapping, path: str, key: str) -> int:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError("expected an integer", f"{path}.{key}")
    return value


def _string(data: Mapping, path: str, key: str) -> str:
    value = data[key]
    if not isinstance(value, str) or not value:
        raise ScenarioError("expected a non-empty string", f"{path}.{key}")
    return value


def _behavior(data: Mapping, path: str, key: str) -> Behavior:
    raw = _string(data, path, key).lower()
    if raw not in _BEHAVIOR_ALIASES:
        raise ScenarioError(
            f"unknown behavior {raw!r}; expected one of {sorted(set(_BEHAVIOR_ALIASES))}",
            f"{path}.{key}",
        )
    return _BEHAVIOR_ALIASES[raw]


def _shape(data: Any, path: str, anchor: Vec2) -> Shape:
    data = _require_mapping(data, path)
    if "type" not in data:
        raise ScenarioError("missing required field", f"{path}.type")
    kind = data["type"]
    if kind == "disc":
        _require_keys(data, path, ["type", "radius"])
        radius = _number(data, path, "radius")
        if radius <= 0:
            raise ScenarioError("radius must be > 0", f"{path}.radius")
        return Disc(anchor, radius)
    if kind == "polygon":
        _require_keys(data, path, ["type", "points"])
        raw_points = data["points"]
        if not isinstance(raw_points, Sequence) or isinstance(raw_points, (str, bytes)):
            raise ScenarioError("expected a list of [x, y] pairs", f"{path}.points")
        if len(raw_points) < 3:
            raise ScenarioError("polygon needs at least 3 points", f"{path}.points")
        vertices = []
        for i, pair in enumerate(raw_points):
            if (
                not isinstance(pair, Sequence)
                or isinstance(pair, (str, bytes))
                or len(pair) != 2
                or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in pair)
                or any(not math.isfinite(float(c)) for c in pair)
            ):
                raise ScenarioError("expected a finite [x, y] pair", f"{path}.points[{i}]")
            vertices.append(anchor + Vec2(float(pair[0]), float(pair[1])))
        polygon = Polygon(tuple(vertices))
        if not is_convex(vertices) or polygon_area(vertices) == 0.0:
            raise ScenarioError("polygon must be convex with nonzero area", f"{path}.points")
        return polygon
    raise ScenarioError(f"unknown shape type {kind!r}; expected disc or polygon", f"{path}.type")


def _occluder_setup(data: Any, path: str) -> OccluderSetup:
    data = _require_mapping(data, path)
    _require_keys(data, path, ["id", "kind", "shape", "x", "y", "speed"])
    anchor = Vec2(_number(data, path, "x"), _number(data, path, "y"))
    speed = _number(data, path, "speed")
    if speed < 0:
        raise ScenarioError("speed must be >= 0", f"{path}.speed")
    return OccluderSetup(
        occluder_id=_string(data, path, "id"),
        kind=_string(data, path, "kind"),
        shape=_shape(data["shape"], f"{path}.shape", anchor),
        speed=speed,
    )


def _params(data: Any, path: str) -> SafetyParams:
    data = _require_mapping(data, path)
    _require_keys(data, path, ["d_min", "v_min", "guidance_zone", "priorities"])
    zone_data = _require_mapping(data["guidance_zone"], f"{path}.guidance_zone")
    _require_keys(zone_data, f"{path}.guidance_zone", ["side", "max_distance"])
    side_raw = _string(zone_data, f"{path}.guidance_zone", "side").lower()
    if side_raw not in (Side.LEFT.value, Side.RIGHT.value):
        raise ScenarioError("side must be left or right", f"{path}.guidance_zone.side")
    max_distance = _number(zone_data, f"{path}.guidance_zone", "max_distance")
    if max_distance <= 0:
        raise ScenarioError("max_distance must be > 0", f"{path}.guidance_zone.max_distance")

    priorities_raw = data["priorities"]
    if not isinstance(priorities_raw, Sequence) or isinstance(priorities_raw, (str, bytes)):
        raise ScenarioError("expected a list of constraint ids", f"{path}.priorities")
    priorities = []
    valid = {c.value for c in ConstraintId}
    for i, entry in enumerate(priorities_raw):
        if not isinstance(entry, str) or entry not in valid:
            raise ScenarioError(
                f"unknown constraint id {entry!r}; expected one of {sorted(valid)}",
                f"{path}.priorities[{i}]",
            )
        priorities.append(ConstraintId(entry))
    if sorted(priorities) != sorted(ConstraintId):
        raise ScenarioError(
            "priorities must list each constraint id exactly once", f"{path}.priorities"
        )

    d_min = _number(data, path, "d_min")
    v_min = _number(data, path, "v_min")
    if d_min <= 0:
        raise ScenarioError("d_min must be > 0", f"{path}.d_min")
    if not (0.0 <= v_min <= 1.0):
        raise ScenarioError("v_min must lie in [0, 1]", f"{path}.v_min")
    return SafetyParams(
        d_min=d_min,
        v_min=v_min,
        guidance_zone=GuidanceZoneParams(side=Side(side_raw), max_distance=max_distance),
        rule_priorities=tuple(priorities),
    )


def _event(data: Any, path: str, horizon: int) -> Event:
    data = _require_mapping(data, path)
    if "type" not in data:
        raise ScenarioError("missing required field", f"{path}.type")
    if "tick" not in data:
        raise ScenarioError("missing required field", f"{path}.tick")
    tick = _integer(data, path, "tick")
    if not (1 <= tick <= horizon):
        raise ScenarioError(f"tick must lie in [1, {horizon}]", f"{path}.tick")
    etype = data["type"]
    if etype == "set_worker_waypoint":
        _require_keys(data, path, ["tick", "type", "x", "y"])
        return SetWorkerWaypoint(tick, Vec2(_number(data, path, "x"), _number(data, path, "y")))
    if etype == "set_occluder_waypoint":
        _require_keys(data, path, ["tick", "type", "id", "x", "y"])
        return SetOccluderWaypoint(
            tick,
            _string(data, path, "id"),
            Vec2(_number(data, path, "x"), _number(data, path, "y")),
        )
    if etype == "spawn_occluder":
        _require_keys(data, path, ["tick", "type", "id", "kind", "shape", "x", "y", "speed"])
        setup = _occluder_setup(
            {k: v for k, v in data.items() if k not in ("tick", "type")}, path
        )
        return SpawnOccluder(tick, setup)
    if etype == "remove_occluder":
        _require_keys(data, path, ["tick", "type", "id"])
        return RemoveOccluderEvent(tick, _string(data, path, "id"))
    if etype == "set_nominal":
        _require_keys(data, path, ["tick", "type", "behavior"])
        return SetNominal(tick, _behavior(data, path, "behavior"))
    raise ScenarioError(
        f"unknown event type {etype!r}; expected set_worker_waypoint, "
        "set_occluder_waypoint, spawn_occluder, remove_occluder, or set_nominal",
        f"{path}.type",
    )


def validate_scenario(document: Any) -> Scenario:
    """Validate a parsed scenario document and return the typed Scenario.

    Raises ScenarioError with the path to the first offending field.
    """
    data = _require_mapping(document, "")
    _require_keys(
        data,
        "",
        ["name", "tick_duration", "horizon", "seed", "params", "robot", "worker"],
        ["occluders", "events", "nominal"],
    )
    name = _string(data, "", "name")
    tick_duration = _number(data, "", "tick_duration")
    if tick_duration <= 0:
        raise ScenarioError("tick_duration must be > 0", "tick_duration")
    horizon = _integer(data, "", "horizon")
    if horizon < 1:
        raise ScenarioError("horizon must be >= 1", "horizon")
    seed = _integer(data, "", "seed")

    params = _params(data["params"], "params")

    robot_data = _require_mapping(data["robot"], "robot")
    _require_keys(robot_data, "robot", ["x", "y", "heading", "cruise_speed"])
    cruise = _number(robot_data, "robot", "cruise_speed")
    if cruise < 0:
        raise ScenarioError("cruise_speed must be >= 0", "robot.cruise_speed")
    robot = RobotSetup(
        position=Vec2(_number(robot_data, "robot", "x"), _number(robot_data, "robot", "y")),
        heading=_number(robot_data, "robot", "heading"),
        cruise_speed=cruise,
    )

    worker_data = _require_mapping(data["worker"], "worker")
    _require_keys(worker_data, "worker", ["id", "x", "y", "speed"])
    worker_speed = _number(worker_data, "worker", "speed")
    if worker_speed < 0:
        raise ScenarioError("speed must be >= 0", "worker.speed")
    worker = WorkerSetup(
        worker_id=_string(worker_data, "worker", "id"),
        position=Vec2(_number(worker_data, "worker", "x"), _number(worker_data, "worker", "y")),
        speed=worker_speed,
    )

    occluders: list[OccluderSetup] = []
    seen_ids = {worker.worker_id}
    raw_occluders = data.get("occluders", [])
    if not isinstance(raw_occluders, Sequence) or isinstance(raw_occluders, (str, bytes)):
        raise ScenarioError("expected a list", "occluders")
    for i, entry in enumerate(raw_occluders):
        setup = _occluder_setup(entry, f"occluders[{i}]")
        if setup.occluder_id in seen_ids:
            raise ScenarioError(f"duplicate id {setup.occluder_id!r}", f"occluders[{i}].id")
        seen_ids.add(setup.occluder_id)
        occluders.append(setup)

    raw_events = data.get("events", [])
    if not isinstance(raw_events, Sequence) or isinstance(raw_events, (str, bytes)):
        raise ScenarioError("expected a list", "events")
    events: list[Event] = []
    for i, entry in enumerate(raw_events):
        events.append(_event(entry, f"events[{i}]", horizon))

    # Referential checks: every event id must name an occluder that exists
    # by that event's tick (initial or spawned earlier, not yet removed).
    alive = {o.occluder_id for o in occluders}
    for i, event in enumerate(sorted(events, key=lambda e: e.tick)):
        path = f"events[{events.index(event)}]"
        if isinstance(event, SpawnOccluder):
            if event.setup.occluder_id in alive or event.setup.occluder_id == worker.worker_id:
                raise ScenarioError(
                    f"id {event.setup.occluder_id!r} already in use at tick {event.tick}",
                    f"{path}.id",
                )
            alive.add(event.setup.occluder_id)
        elif isinstance(event, (SetOccluderWaypoint, RemoveOccluderEvent)):
            if event.occluder_id not in alive:
                raise ScenarioError(
                    f"unknown occluder {event.occluder_id!r} at tick {event.tick}",
                    f"{path}.id",
                )
            if isinstance(event, RemoveOccluderEvent):
                alive.remove(event.occluder_id)

    raw_nominal = data.get("nominal", [])
    if not isinstance(raw_nominal, Sequence) or isinstance(raw_nominal, (str, bytes)):
        raise ScenarioError("expected a list", "nominal")
    nominal: list[tuple[int, Behavior]] = []
    seen_ticks: set[int] = set()
    for i, entry in enumerate(raw_nominal):
        entry = _require_mapping(entry, f"nominal[{i}]")
        _require_keys(entry, f"nominal[{i}]", ["tick", "behavior"])
        tick = _integer(entry, f"nominal[{i}]", "tick")
        if not (1 <= tick <= horizon):
            raise ScenarioError(f"tick must lie in [1, {horizon}]", f"nominal[{i}].tick")
        if tick in seen_ticks:
            raise ScenarioError(f"duplicate nominal entry for tick {tick}", f"nominal[{i}].tick")
        seen_ticks.add(tick)
        nominal.append((tick, _behavior(entry, f"nominal[{i}]", "behavior")))

    return Scenario(
        name=name,
        tick_duration=tick_duration,
        horizon=horizon,
        seed=seed,
        params=params,
        robot=robot,
        worker=worker,
        occluders=tuple(occluders),
        events=tuple(sorted(events, key=lambda e: e.tick)),
        nominal=tuple(sorted(nominal)),
    )


def parse_scenario_text(text: str) -> Scenario:
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from exc
    return validate_scenario(document)


def load_scenario(path: Union[str, Path]) -> Scenario:
    return parse_scenario_text(Path(path).read_text(encoding="utf-8"))


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped inside the package."""
    return Path(__file__).parent / "scenarios" / f"{name}.scenario"


def load_bundled_scenario(name: str) -> Scenario:
    path = bundled_scenario_path(name)
    if not path.exists():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return load_scenario(path)


def list_bundled_scenarios() -> list[str]:
    directory = Path(__file__).parent / "scenarios"
    return sorted(p.stem for p in directory.glob("*.scenario"))
