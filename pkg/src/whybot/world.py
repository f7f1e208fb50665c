"""Deterministic discrete-time world simulation.

One ``step`` advances the world a single tick: scripted events fire, the
worker and occluders move toward their waypoints at constant speed, the robot
moves according to its current mode, and visibility is recomputed. The result
of every step is an immutable SafetyState snapshot; the mutable world itself
never leaks into decision records.

Waypoint motion snaps onto the target once it is within one step's reach, so
entities come to rest at exact coordinates and repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .geometry import Vec2, distance, heading_vec
from .safety import (
    Behavior,
    EnvState,
    HumanState,
    Occluder,
    RobotState,
    SafetyState,
    Side,
)
from .scenario import (
    RemoveOccluderEvent,
    Scenario,
    SetNominal,
    SetOccluderWaypoint,
    SetWorkerWaypoint,
    SpawnOccluder,
)
from .visibility import compute_visibility

#: Speed factor applied to cruise speed while in slow_down.
SLOW_FACTOR = 0.5

#: Fraction of the guidance-zone radius the follower holds the worker at.
#: Aiming at the boundary itself would leave the zone test one float ulp
#: from flickering, so the controller stations the worker well inside.
FOLLOW_OFFSET_FACTOR = 0.8


@dataclass
class _MovingBody:
    position: Vec2
    speed: float
    waypoint: Optional[Vec2] = None
    velocity: Vec2 = Vec2(0.0, 0.0)

    def advance(self, dt: float) -> None:
        """Move toward the waypoint at constant speed; snap on arrival."""
        if self.waypoint is None:
            self.velocity = Vec2(0.0, 0.0)
            return
        offset = self.waypoint - self.position
        remaining = offset.norm()
        reach = self.speed * dt
        if remaining <= reach or remaining == 0.0:
            moved = self.waypoint - self.position
            self.position = self.waypoint
            self.waypoint = None
            self.velocity = moved.scaled(1.0 / dt)
            if remaining == 0.0:
                self.velocity = Vec2(0.0, 0.0)
            return
        step_vec = offset.unit().scaled(reach)
        self.position = self.position + step_vec
        self.velocity = step_vec.scaled(1.0 / dt)


class World:
    """Mutable simulation state for one session."""

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.params = scenario.params
        self.tick = 0
        self.robot_position = scenario.robot.position
        self.robot_heading = scenario.robot.heading
        self.robot_speed = 0.0
        self.robot_mode = Behavior.CONTINUE
        self.cruise_speed = scenario.robot.cruise_speed
        self.worker = _MovingBody(
            position=scenario.worker.position, speed=scenario.worker.speed
        )
        self.worker_id = scenario.worker.worker_id
        self._occluders: dict[str, Occluder] = {
            o.occluder_id: o.to_occluder() for o in scenario.occluders
        }
        self._occluder_speed: dict[str, float] = {
            o.occluder_id: o.speed for o in scenario.occluders
        }
        self._occluder_waypoint: dict[str, Vec2] = {}
        self._events_by_tick: dict[int, list] = {}
        for event in scenario.events:
            self._events_by_tick.setdefault(event.tick, []).append(event)

    # --- queries -------------------------------------------------------------

    @property
    def horizon(self) -> int:
        return self.scenario.horizon

    def occluders(self) -> tuple[Occluder, ...]:
        return tuple(self._occluders.values())

    def human_state(self) -> HumanState:
        return HumanState(
            worker_id=self.worker_id,
            position=self.worker.position,
            velocity=self.worker.velocity,
        )

    def robot_state(self) -> RobotState:
        return RobotState(
            position=self.robot_position,
            heading=self.robot_heading,
            speed=self.robot_speed,
            mode=self.robot_mode,
        )

    def snapshot(self, tick: Optional[int] = None) -> SafetyState:
        """Immutable snapshot of the world as it stands, with visibility
        recomputed for the current geometry."""
        human = self.human_state()
        robot = self.robot_state()
        occluders = self.occluders()
        env = EnvState(
            occluders=occluders,
            visibility={self.worker_id: compute_visibility(robot, human, occluders)},
        )
        return SafetyState(
            tick=self.tick if tick is None else tick,
            human=human,
            robot=robot,
            env=env,
            params=self.params,
        )

    # --- mutation --------------------------------------------------------------

    def set_mode(self, mode: Behavior) -> None:
        self.robot_mode = mode
        if mode in (Behavior.PAUSE, Behavior.STOP):
            self.robot_speed = 0.0

    def _apply_event(self, event) -> None:
        if isinstance(event, SetWorkerWaypoint):
            self.worker.waypoint = event.target
        elif isinstance(event, SetOccluderWaypoint):
            if event.occluder_id in self._occluders:
                self._occluder_waypoint[event.occluder_id] = event.target
        elif isinstance(event, SpawnOccluder):
            setup = event.setup
            self._occluders[setup.occluder_id] = setup.to_occluder()
            self._occluder_speed[setup.occluder_id] = setup.speed
        elif isinstance(event, RemoveOccluderEvent):
            self._occluders.pop(event.occluder_id, None)
            self._occluder_speed.pop(event.occluder_id, None)
            self._occluder_waypoint.pop(event.occluder_id, None)
        elif isinstance(event, SetNominal):
            pass  # consumed by the session's nominal schedule, not the world
        else:
            raise TypeError(f"unknown event: {event!r}")

    def _advance_occluders(self, dt: float) -> None:
        for occluder_id, target in list(self._occluder_waypoint.items()):
            occluder = self._occluders[occluder_id]
            body = _MovingBody(
                position=occluder.shape.reference_point(),
                speed=self._occluder_speed[occluder_id],
                waypoint=target,
            )
            body.advance(dt)
            moved = body.position - occluder.shape.reference_point()
            self._occluders[occluder_id] = Occluder(
                occluder_id=occluder.occluder_id,
                kind=occluder.kind,
                shape=occluder.shape.translate(moved),
                velocity=body.velocity,
            )
            if body.waypoint is None:
                del self._occluder_waypoint[occluder_id]
        # Occluders without a waypoint are at rest.
        for occluder_id, occluder in self._occluders.items():
            if occluder_id not in self._occluder_waypoint and occluder.velocity != Vec2(0.0, 0.0):
                self._occluders[occluder_id] = Occluder(
                    occluder_id=occluder.occluder_id,
                    kind=occluder.kind,
                    shape=occluder.shape,
                    velocity=Vec2(0.0, 0.0),
                )

    def _advance_robot(self, dt: float) -> None:
        mode = self.robot_mode
        if mode is Behavior.CONTINUE or mode is Behavior.SLOW_DOWN:
            speed = self.cruise_speed * (SLOW_FACTOR if mode is Behavior.SLOW_DOWN else 1.0)
            step_vec = heading_vec(self.robot_heading).scaled(speed * dt)
            self.robot_position = self.robot_position + step_vec
            self.robot_speed = speed
        elif mode is Behavior.MANUAL_FOLLOW:
            # Station-keep so the worker sits at the guidance offset on the
            # configured side of the robot's heading.
            zone = self.params.guidance_zone
            lateral = heading_vec(self.robot_heading).perp_left()
            if zone.side is Side.RIGHT:
                lateral = lateral.scaled(-1.0)
            hold = zone.max_distance * FOLLOW_OFFSET_FACTOR
            target = self.worker.position - lateral.scaled(hold)
            offset = target - self.robot_position
            remaining = offset.norm()
            reach = self.cruise_speed * dt
            if remaining <= reach:
                self.robot_position = target
                self.robot_speed = remaining / dt
            else:
                self.robot_position = self.robot_position + offset.unit().scaled(reach)
                self.robot_speed = self.cruise_speed
        else:  # pause, stop
            self.robot_speed = 0.0

    def step(self) -> SafetyState:
        """Advance one tick and return the snapshot for it.

        Pre: tick < horizon. Events scheduled for the new tick fire before
        any motion.
        """
        if self.tick >= self.horizon:
            raise ValueError(f"world already at horizon {self.horizon}")
        t = self.tick + 1
        for event in self._events_by_tick.get(t, []):
            self._apply_event(event)
        dt = self.scenario.tick_duration
        self.worker.advance(dt)
        self._advance_occluders(dt)
        self._advance_robot(dt)
        self.tick = t
        return self.snapshot()

    def consume_command_tick(self) -> int:
        """Reserve the next tick number for a command decision. The world
        does not move; commands are evaluated on frozen geometry."""
        if self.tick >= self.horizon:
            raise ValueError(f"world already at horizon {self.horizon}")
        self.tick += 1
        return self.tick
