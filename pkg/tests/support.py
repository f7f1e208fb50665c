"""Shared builders for handcrafted states used across the test modules."""

from __future__ import annotations

from typing import Optional, Sequence

from whybot.geometry import Vec2
from whybot.safety import (
    Behavior,
    ConstraintId,
    DEFAULT_PRIORITIES,
    EnvState,
    GuidanceZoneParams,
    HumanState,
    Occluder,
    RobotState,
    SafetyParams,
    SafetyState,
    Side,
)

WORKER = "worker1"


def default_params(
    d_min: float = 1.5,
    v_min: float = 0.6,
    side: Side = Side.RIGHT,
    max_distance: float = 1.0,
    priorities: Sequence[ConstraintId] = DEFAULT_PRIORITIES,
) -> SafetyParams:
    return SafetyParams(
        d_min=d_min,
        v_min=v_min,
        guidance_zone=GuidanceZoneParams(side=side, max_distance=max_distance),
        rule_priorities=tuple(priorities),
    )


def state_at(
    worker_pos: tuple[float, float],
    robot_pos: tuple[float, float] = (0.0, 0.0),
    heading: float = 0.0,
    mode: Behavior = Behavior.CONTINUE,
    visibility: float = 1.0,
    occluders: tuple[Occluder, ...] = (),
    params: Optional[SafetyParams] = None,
    tick: int = 0,
    worker_id: str = WORKER,
) -> SafetyState:
    """A snapshot with the worker and robot placed explicitly.

    The visibility value is injected directly; tests that need it to agree
    with the occluder geometry must compute it themselves.
    """
    return SafetyState(
        tick=tick,
        human=HumanState(
            worker_id=worker_id, position=Vec2(*worker_pos), velocity=Vec2(0.0, 0.0)
        ),
        robot=RobotState(
            position=Vec2(*robot_pos), heading=heading, speed=0.0, mode=mode
        ),
        env=EnvState(occluders=occluders, visibility={worker_id: visibility}),
        params=params or default_params(),
    )
