"""Session orchestration: one scenario run with its trace and dialogue.

A Session owns the world, the append-only trace, and the dialogue memory for
one scenario execution. The tick loop is sense -> evaluate -> select ->
record: the world produces a snapshot, the safety rules arbitrate it against
the scheduled nominal behavior, and the outcome is appended to the trace
before the robot's mode is updated. Queries read the trace and never touch
the world; commands consume a tick of their own so that every accepted or
refused command is a first-class decision record.

All public methods are serialized on an internal lock, so one session can be
shared by the HTTP service's worker threads. Distinct sessions share nothing.
"""

from __future__ import annotations

import threading
from enum import Enum
from typing import Optional, Union

from .errors import SessionStateError, UnknownTickError
from .explain import (
    DialogueMemory,
    Explanation,
    command_outcome,
    explain,
)
from .query import Command, QueryAST, parse
from .safety import Behavior, DecisionRecord, make_decision
from .scenario import Scenario
from .trace import Trace
from .world import World


class RunStatus(str, Enum):
    IDLE = "idle"
    RUNNING = "running"
    PAUSED_BY_USER = "paused_by_user"
    FINISHED = "finished"


class Session:
    """One live scenario execution."""

    def __init__(self, scenario: Scenario, session_id: Optional[str] = None) -> None:
        self.session_id = session_id or scenario.name
        self.scenario = scenario
        self.world = World(scenario)
        self.trace = Trace(self.session_id, scenario.params)
        self.memory = DialogueMemory(session_id=self.session_id)
        self.status = RunStatus.IDLE
        #: Ordered (event_name, payload) feed for stream consumers. Append-only;
        #: readers poll by index.
        self.events: list[tuple[str, dict]] = []
        self._nominal = Behavior.CONTINUE
        self._schedule = scenario.nominal_changes()
        self._lock = threading.RLock()

    # --- tick loop -------------------------------------------------------------

    def tick_once(self) -> Optional[DecisionRecord]:
        """Advance one tick; None when the session is finished.

        A scheduled nominal entry for the new tick replaces the running
        nominal before arbitration. A selected stop latches the nominal to
        stop: stop does not auto-resume, it takes a scheduled nominal or an
        accepted command to move again. Pause is not latched; it clears the
        moment its constraint does.
        """
        with self._lock:
            if self.status is RunStatus.FINISHED:
                return None
            if self.world.tick >= self.world.horizon:
                self.status = RunStatus.FINISHED
                return None

            state = self.world.step()
            if state.tick in self._schedule:
                self._nominal = self._schedule[state.tick]
            record = make_decision(state, self._nominal)
            self.trace.append(record)
            self.world.set_mode(record.selected)
            if record.selected is Behavior.STOP:
                self._nominal = Behavior.STOP
            self.status = (
                RunStatus.FINISHED
                if self.world.tick >= self.world.horizon
                else RunStatus.RUNNING
            )
            self.events.append(("decision", _decision_event(record)))
            return record

    def run(self, ticks: int) -> list[DecisionRecord]:
        """Advance up to ``ticks`` ticks, stopping early at the horizon."""
        records = []
        for _ in range(ticks):
            record = self.tick_once()
            if record is None:
                break
            records.append(record)
        return records

    def pause_by_user(self) -> None:
        """Mark the run paused by its operator. Purely a run-status flag for
        clients that stop ticking; the next tick resumes."""
        with self._lock:
            if self.status is RunStatus.RUNNING:
                self.status = RunStatus.PAUSED_BY_USER

    # --- dialogue --------------------------------------------------------------

    def ask(
        self, query: Union[str, QueryAST], at: Optional[int] = None
    ) -> Explanation:
        """Answer a query against the trace. Never advances the simulation.

        The record interrogated is, in order of precedence: the query's own
        at-clause, the ``at`` argument, else the latest record. Command
        queries get an advisory preview; actually switching behavior goes
        through ``command``.
        """
        with self._lock:
            ast = parse(query) if isinstance(query, str) else query
            tick = ast.at if ast.at is not None else at
            if tick is not None:
                record = self.trace.get_at(tick)
            else:
                record = self.trace.latest()
                if record is None:
                    raise UnknownTickError(
                        "no decisions recorded yet; tick the session first"
                    )
            explanation, self.memory = explain(record, ast, self.memory)
            self.events.append(("explanation", explanation.to_dict()))
            return explanation

    def command(self, behavior: Behavior) -> tuple[bool, Explanation]:
        """Request a behavior change, re-validated against the live state.

        The command consumes a tick: the world's clock advances with frozen
        geometry and the arbitration outcome is appended to the trace with
        the commanded behavior as nominal. Acceptance means arbitration
        selected exactly the commanded behavior. Either way the robot's mode
        follows the record, so a refused follow leaves the robot halted, not
        confused.
        """
        with self._lock:
            if self.status is RunStatus.FINISHED:
                raise SessionStateError(
                    f"session {self.session_id} is finished; commands need a live run"
                )
            tick = self.world.consume_command_tick()
            state = self.world.snapshot(tick)
            record = make_decision(
                state, behavior, commanded=behavior is Behavior.MANUAL_FOLLOW
            )
            self.trace.append(record)
            self.world.set_mode(record.selected)
            if record.selected is Behavior.STOP:
                self._nominal = Behavior.STOP
            accepted = record.selected is behavior
            if accepted:
                self._nominal = behavior
            if self.status is RunStatus.IDLE:
                self.status = RunStatus.RUNNING
            if self.world.tick >= self.world.horizon:
                self.status = RunStatus.FINISHED

            ok, explanation = command_outcome(record, behavior)
            assert ok is accepted, "preview rule diverged from the applied rule"
            self.events.append(("decision", _decision_event(record)))
            self.events.append(("explanation", explanation.to_dict()))
            return accepted, explanation

    # --- introspection -----------------------------------------------------------

    def state_dict(self) -> dict:
        """Wire snapshot for GET /state and client resyncs."""
        with self._lock:
            latest = self.trace.latest()
            return {
                "session_id": self.session_id,
                "scenario": self.scenario.name,
                "status": self.status.value,
                "tick": self.world.tick,
                "horizon": self.world.horizon,
                "tick_duration": self.scenario.tick_duration,
                "params": self.scenario.params.to_dict(),
                "params_hash": self.trace.envelope_hash,
                "trace_length": len(self.trace.records),
                "latest": latest.to_dict() if latest else None,
            }


def _decision_event(record: DecisionRecord) -> dict:
    return {
        "tick": record.tick,
        "state": record.state.to_dict(),
        "selected": record.selected.value,
        "active": [c.to_dict() for c in record.active],
    }
