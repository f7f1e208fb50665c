"""Safety state model, constraint rules, and behavior arbitration.

The controller is a pure function of the state snapshot: ``evaluate_constraints``
finds which safety rules fire, ``select_behavior`` arbitrates them against the
nominal plan by priority, and ``make_decision`` packages one tick's outcome as
an immutable, replayable record. Nothing in this module performs I/O or keeps
hidden state, which is what makes decision traces self-certifying.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from .geometry import (
    Shape,
    Vec2,
    all_finite,
    distance as point_distance,
    heading_vec,
    shape_from_dict,
    shape_to_dict,
)


class Behavior(str, Enum):
    """Closed set of robot behaviors the arbiter can select."""

    CONTINUE = "continue"
    SLOW_DOWN = "slow_down"
    PAUSE = "pause"
    STOP = "stop"
    MANUAL_FOLLOW = "manual_follow"


class ConstraintId(str, Enum):
    PROXIMITY = "proximity"
    VISIBILITY = "visibility"
    GUIDANCE_ZONE = "guidance_zone"


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class LoadStatus(str, Enum):
    UNLOADED = "unloaded"
    LOADED = "loaded"


#: Behavior each constraint enforces when it binds.
CONSTRAINT_BEHAVIOR: dict[ConstraintId, Behavior] = {
    ConstraintId.PROXIMITY: Behavior.STOP,
    ConstraintId.VISIBILITY: Behavior.PAUSE,
    ConstraintId.GUIDANCE_ZONE: Behavior.MANUAL_FOLLOW,
}

#: Default priority order, highest first.
DEFAULT_PRIORITIES: tuple[ConstraintId, ...] = (
    ConstraintId.PROXIMITY,
    ConstraintId.VISIBILITY,
    ConstraintId.GUIDANCE_ZONE,
)


@dataclass(frozen=True)
class HumanState:
    worker_id: str
    position: Vec2
    velocity: Vec2 = Vec2(0.0, 0.0)
    role: str = "worker"

    def to_dict(self) -> dict:
        return {
            "worker_id": self.worker_id,
            "position": [self.position.x, self.position.y],
            "velocity": [self.velocity.x, self.velocity.y],
            "role": self.role,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "HumanState":
        return cls(
            worker_id=str(data["worker_id"]),
            position=Vec2(*map(float, data["position"])),
            velocity=Vec2(*map(float, data["velocity"])),
            role=str(data.get("role", "worker")),
        )


@dataclass(frozen=True)
class RobotState:
    position: Vec2
    heading: float
    speed: float = 0.0
    load: LoadStatus = LoadStatus.UNLOADED
    mode: Behavior = Behavior.CONTINUE

    def __post_init__(self) -> None:
        if self.speed < 0:
            raise ValueError("robot speed must be >= 0")
        # Keep heading in [-pi, pi] so traces stay canonical.
        wrapped = math.atan2(math.sin(self.heading), math.cos(self.heading))
        object.__setattr__(self, "heading", wrapped)

    def heading_vector(self) -> Vec2:
        return heading_vec(self.heading)

    def to_dict(self) -> dict:
        return {
            "position": [self.position.x, self.position.y],
            "heading": self.heading,
            "speed": self.speed,
            "load": self.load.value,
            "mode": self.mode.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RobotState":
        return cls(
            position=Vec2(*map(float, data["position"])),
            heading=float(data["heading"]),
            speed=float(data["speed"]),
            load=LoadStatus(data["load"]),
            mode=Behavior(data["mode"]),
        )


@dataclass(frozen=True)
class Occluder:
    occluder_id: str
    kind: str
    shape: Shape
    velocity: Vec2 = Vec2(0.0, 0.0)

    def position(self) -> Vec2:
        return self.shape.reference_point()

    def to_dict(self) -> dict:
        return {
            "occluder_id": self.occluder_id,
            "kind": self.kind,
            "shape": shape_to_dict(self.shape),
            "velocity": [self.velocity.x, self.velocity.y],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Occluder":
        return cls(
            occluder_id=str(data["occluder_id"]),
            kind=str(data["kind"]),
            shape=shape_from_dict(data["shape"]),
            velocity=Vec2(*map(float, data["velocity"])),
        )


@dataclass(frozen=True)
class EnvState:
    """Occluders plus the per-worker visibility confidence computed for
    this snapshot. Treated as immutable; the visibility mapping is never
    mutated after construction."""

    occluders: tuple[Occluder, ...] = ()
    visibility: Mapping[str, float] = field(default_factory=dict)

    def visibility_of(self, worker_id: str) -> float:
        return float(self.visibility.get(worker_id, 1.0))

    def to_dict(self) -> dict:
        return {
            "occluders": [o.to_dict() for o in self.occluders],
            "visibility": {k: float(v) for k, v in sorted(self.visibility.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EnvState":
        return cls(
            occluders=tuple(Occluder.from_dict(o) for o in data["occluders"]),
            visibility={str(k): float(v) for k, v in data["visibility"].items()},
        )


@dataclass(frozen=True)
class GuidanceZoneParams:
    side: Side = Side.RIGHT
    max_distance: float = 1.0

    def __post_init__(self) -> None:
        if not (self.max_distance > 0):
            raise ValueError("guidance zone max_distance must be > 0")

    def to_dict(self) -> dict:
        return {"side": self.side.value, "max_distance": self.max_distance}

    @classmethod
    def from_dict(cls, data: Mapping) -> "GuidanceZoneParams":
        return cls(side=Side(data["side"]), max_distance=float(data["max_distance"]))


@dataclass(frozen=True)
class SafetyParams:
    """Safety envelope. Immutable for the lifetime of a session; the content
    hash of this object is embedded in every trace and checked on replay."""

    d_min: float = 1.5
    v_min: float = 0.6
    guidance_zone: GuidanceZoneParams = GuidanceZoneParams()
    rule_priorities: tuple[ConstraintId, ...] = DEFAULT_PRIORITIES

    def __post_init__(self) -> None:
        if not (self.d_min > 0 and math.isfinite(self.d_min)):
            raise ValueError("d_min must be a positive finite number")
        if not (0.0 <= self.v_min <= 1.0):
            raise ValueError("v_min must lie in [0, 1]")
        prios = tuple(ConstraintId(p) for p in self.rule_priorities)
        if sorted(prios) != sorted(ConstraintId):
            raise ValueError("rule_priorities must be a permutation of all constraint ids")
        object.__setattr__(self, "rule_priorities", prios)

    def rank(self, cid: ConstraintId) -> int:
        """0 is the highest priority."""
        return self.rule_priorities.index(cid)

    def to_dict(self) -> dict:
        return {
            "d_min": self.d_min,
            "v_min": self.v_min,
            "guidance_zone": self.guidance_zone.to_dict(),
            "rule_priorities": [p.value for p in self.rule_priorities],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SafetyParams":
        return cls(
            d_min=float(data["d_min"]),
            v_min=float(data["v_min"]),
            guidance_zone=GuidanceZoneParams.from_dict(data["guidance_zone"]),
            rule_priorities=tuple(ConstraintId(p) for p in data["rule_priorities"]),
        )


def params_hash(params: SafetyParams) -> str:
    """Stable content hash of the safety envelope.

    SHA-256 over the canonical JSON serialization (sorted keys, no spaces).
    The algorithm is fixed for trace schema_version 1.
    """
    canonical = json.dumps(params.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SafetyState:
    """One immutable snapshot of everything the safety rules read."""

    tick: int
    human: HumanState
    robot: RobotState
    env: EnvState
    params: SafetyParams

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "human": self.human.to_dict(),
            "robot": self.robot.to_dict(),
            "env": self.env.to_dict(),
            "params": self.params.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SafetyState":
        return cls(
            tick=int(data["tick"]),
            human=HumanState.from_dict(data["human"]),
            robot=RobotState.from_dict(data["robot"]),
            env=EnvState.from_dict(data["env"]),
            params=SafetyParams.from_dict(data["params"]),
        )


@dataclass(frozen=True)
class ActiveConstraint:
    """A fired safety rule with its measurement at the moment of firing."""

    id: ConstraintId
    measured: float
    threshold: float
    margin: float
    subjects: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not all_finite(self.measured, self.threshold, self.margin):
            raise ValueError("constraint measurements must be finite")

    def to_dict(self) -> dict:
        return {
            "id": self.id.value,
            "measured": self.measured,
            "threshold": self.threshold,
            "margin": self.margin,
            "subjects": list(self.subjects),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ActiveConstraint":
        return cls(
            id=ConstraintId(data["id"]),
            measured=float(data["measured"]),
            threshold=float(data["threshold"]),
            margin=float(data["margin"]),
            subjects=tuple(str(s) for s in data["subjects"]),
        )


@dataclass(frozen=True)
class DecisionRecord:
    """One arbitration outcome: the state it saw, the plan it was given, the
    behavior it selected, and the constraints that were active.

    ``active`` is stored sorted by rule priority (highest first), so
    ``active[0]`` is always the binding constraint when the set is nonempty.
    """

    tick: int
    state: SafetyState
    nominal: Behavior
    selected: Behavior
    active: tuple[ActiveConstraint, ...] = ()

    def binding(self) -> Optional[ActiveConstraint]:
        """The constraint that dictated ``selected``; None for nominal
        pass-through ticks."""
        _, bound = arbitrate(
            self.active,
            self.nominal,
            self.state.params.rule_priorities,
            mode=self.state.robot.mode,
        )
        return bound

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "state": self.state.to_dict(),
            "nominal": self.nominal.value,
            "selected": self.selected.value,
            "active": [c.to_dict() for c in self.active],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DecisionRecord":
        return cls(
            tick=int(data["tick"]),
            state=SafetyState.from_dict(data["state"]),
            nominal=Behavior(data["nominal"]),
            selected=Behavior(data["selected"]),
            active=tuple(ActiveConstraint.from_dict(c) for c in data["active"]),
        )


def distance(human: HumanState, robot: RobotState) -> float:
    """Euclidean worker-robot separation in meters."""
    return point_distance(human.position, robot.position)


def worker_in_guidance_zone(
    human: HumanState, robot: RobotState, zone: GuidanceZoneParams
) -> bool:
    """True when the worker stands in the guidance half-disc: within
    ``max_distance`` of the robot, strictly on the configured side of the
    robot's heading (sign of heading x robot-to-worker)."""
    offset = human.position - robot.position
    dist = offset.norm()
    if dist == 0.0 or dist > zone.max_distance:
        return False
    cross = robot.heading_vector().cross(offset)
    if zone.side is Side.LEFT:
        return cross > 0.0
    return cross < 0.0


def evaluate_constraints(state: SafetyState) -> tuple[ActiveConstraint, ...]:
    """Check every safety rule against the snapshot.

    Rules:
      * proximity: separation strictly below d_min.
      * visibility: sensing confidence for the worker strictly below v_min.
      * guidance_zone: worker inside the configured half-disc. Reported with
        measured 1.0 against threshold 1.0 since the predicate is boolean.

    Each rule is a pure predicate on the snapshot; whether a fired rule gets
    to dictate the behavior is arbitration's business (see ``arbitrate``),
    not evaluation's. Returns constraints sorted by rule priority, highest
    first. Identical snapshots give identical results.
    """
    params = state.params
    worker = state.human
    active: list[ActiveConstraint] = []

    in_zone = worker_in_guidance_zone(worker, state.robot, params.guidance_zone)

    d = distance(worker, state.robot)
    if d < params.d_min:
        active.append(
            ActiveConstraint(
                id=ConstraintId.PROXIMITY,
                measured=d,
                threshold=params.d_min,
                margin=d - params.d_min,
                subjects=(worker.worker_id,),
            )
        )

    v = state.env.visibility_of(worker.worker_id)
    if v < params.v_min:
        active.append(
            ActiveConstraint(
                id=ConstraintId.VISIBILITY,
                measured=v,
                threshold=params.v_min,
                margin=v - params.v_min,
                subjects=(worker.worker_id,),
            )
        )

    if in_zone:
        active.append(
            ActiveConstraint(
                id=ConstraintId.GUIDANCE_ZONE,
                measured=1.0,
                threshold=1.0,
                margin=0.0,
                subjects=(worker.worker_id,),
            )
        )

    active.sort(key=lambda c: params.rank(c.id))
    return tuple(active)


def arbitrate(
    active: Sequence[ActiveConstraint],
    nominal: Behavior,
    priorities: Sequence[ConstraintId] = DEFAULT_PRIORITIES,
    *,
    mode: Behavior = Behavior.CONTINUE,
    commanded: bool = False,
) -> tuple[Behavior, Optional[ActiveConstraint]]:
    """Arbitrate active constraints against the nominal behavior.

    The highest-priority eligible constraint wins and maps to its behavior
    (proximity -> stop, visibility -> pause, guidance_zone -> manual_follow).
    With nothing eligible the nominal behavior passes through untouched.

    Eligibility encodes the guided-handoff rules:

      * The guidance zone is enabling rather than overriding. It can bind
        only under follow intent: the robot is already in manual_follow
        mode, the selection is a commanded transition, or the nominal
        itself is manual_follow. A worker merely standing in the zone
        never yanks the robot into manual-follow.
      * Under follow intent with the zone active, proximity is not
        eligible: the zone radius is the separation contract for guided
        close-quarters work, and station-keeping at the zone boundary
        sits inside d_min by design. The moment the worker leaves the
        zone, proximity binds again and halts the robot. Visibility is
        never suppressed.
      * A nominal of manual_follow with no zone active degrades to stop:
        following someone who is not there to be followed has no safe
        reading, and the rule makes refused follow requests re-derivable
        from (active, nominal, mode) alone.

    Returns the selected behavior and the constraint that bound, or None
    when the nominal passed through (or was degraded by the last rule).
    Pure and deterministic.
    """
    rank = {ConstraintId(cid): i for i, cid in enumerate(priorities)}
    follow_intent = (
        mode is Behavior.MANUAL_FOLLOW
        or commanded
        or nominal is Behavior.MANUAL_FOLLOW
    )
    zone_active = any(c.id is ConstraintId.GUIDANCE_ZONE for c in active)
    handoff = follow_intent and zone_active

    def eligible(c: ActiveConstraint) -> bool:
        if c.id is ConstraintId.GUIDANCE_ZONE:
            return follow_intent
        if c.id is ConstraintId.PROXIMITY:
            return not handoff
        return True

    candidates = [c for c in active if eligible(c)]
    if candidates:
        binding = min(candidates, key=lambda c: rank[c.id])
        return CONSTRAINT_BEHAVIOR[binding.id], binding
    if nominal is Behavior.MANUAL_FOLLOW and not zone_active:
        return Behavior.STOP, None
    return nominal, None


def select_behavior(
    active: Sequence[ActiveConstraint],
    nominal: Behavior,
    priorities: Sequence[ConstraintId] = DEFAULT_PRIORITIES,
    *,
    mode: Behavior = Behavior.CONTINUE,
    commanded: bool = False,
) -> Behavior:
    """Behavior half of ``arbitrate``; see there for the rules."""
    selected, _ = arbitrate(
        active, nominal, priorities, mode=mode, commanded=commanded
    )
    return selected


def make_decision(
    state: SafetyState, nominal: Behavior, *, commanded: bool = False
) -> DecisionRecord:
    """Evaluate and arbitrate one snapshot, returning the trace record.

    The snapshot inside the record is the immutable state object itself, so
    the record can always be re-derived: ``evaluate_constraints(record.state)``
    must equal ``record.active`` and ``select_behavior`` on those must equal
    ``record.selected``.
    """
    active = evaluate_constraints(state)
    selected = select_behavior(
        active,
        nominal,
        state.params.rule_priorities,
        mode=state.robot.mode,
        commanded=commanded,
    )
    return DecisionRecord(
        tick=state.tick,
        state=state,
        nominal=nominal,
        selected=selected,
        active=active,
    )
