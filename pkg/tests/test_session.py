import pytest

from whybot.errors import SessionStateError, UnknownTickError
from whybot.explain import ExplanationKind
from whybot.safety import Behavior, ConstraintId
from whybot.scenario import validate_scenario
from whybot.session import RunStatus, Session


def scenario_doc(**overrides):
    base = {
        "name": "s",
        "tick_duration": 0.1,
        "horizon": 30,
        "seed": 0,
        "params": {
            "d_min": 1.5,
            "v_min": 0.6,
            "guidance_zone": {"side": "right", "max_distance": 1.0},
            "priorities": ["proximity", "visibility", "guidance_zone"],
        },
        "robot": {"x": 0.0, "y": 0.0, "heading": 0.0, "cruise_speed": 0.2},
        "worker": {"id": "worker1", "x": 6.0, "y": 0.0, "speed": 1.0},
    }
    base.update(overrides)
    return validate_scenario(base)


def session(**overrides):
    return Session(scenario_doc(**overrides))


class TestTickLoop:
    def test_run_produces_consecutive_records(self):
        s = session()
        records = s.run(5)
        assert [r.tick for r in records] == [1, 2, 3, 4, 5]
        assert s.status is RunStatus.RUNNING
        assert len(s.trace.records) == 5

    def test_finishes_at_horizon(self):
        s = session(horizon=4)
        records = s.run(10)
        assert len(records) == 4
        assert s.status is RunStatus.FINISHED
        assert s.tick_once() is None
        assert s.run(3) == []

    def test_stop_latches(self):
        # worker walks into d_min and out again; stop must persist after
        # the proximity violation clears
        s = session(
            worker={"id": "worker1", "x": 1.2, "y": 0.0, "speed": 1.0},
            events=[{"tick": 1, "type": "set_worker_waypoint", "x": 6.0, "y": 0.0}],
            horizon=30,
        )
        records = s.run(30)
        stopped = [r for r in records if r.selected is Behavior.STOP]
        assert stopped, "expected a stop while inside d_min"
        first_stop = stopped[0].tick
        assert all(r.selected is Behavior.STOP for r in records if r.tick >= first_stop)
        # the latch is the nominal, visible in the later records
        far_and_stopped = [
            r for r in records if r.tick > first_stop and not r.active
        ]
        assert far_and_stopped
        assert all(r.nominal is Behavior.STOP for r in far_and_stopped)

    def test_pause_auto_resumes(self):
        # visibility dips while a disc crosses the fan, then recovers
        s = session(
            robot={"x": 0.0, "y": 0.0, "heading": 0.0, "cruise_speed": 0.0},
            worker={"id": "worker1", "x": 6.0, "y": 0.0, "speed": 0.0},
            occluders=[
                {
                    "id": "cart1",
                    "kind": "cart",
                    "shape": {"type": "disc", "radius": 0.5},
                    "x": 3.0,
                    "y": -3.0,
                    "speed": 1.5,
                }
            ],
            events=[
                {"tick": 1, "type": "set_occluder_waypoint", "id": "cart1", "x": 3.0, "y": 3.0}
            ],
            horizon=45,
        )
        records = s.run(45)
        kinds = [r.selected for r in records]
        assert Behavior.PAUSE in kinds, "expected a pause while occluded"
        last_pause = max(i for i, k in enumerate(kinds) if k is Behavior.PAUSE)
        assert Behavior.CONTINUE in kinds[last_pause + 1 :], "pause must clear on its own"

    def test_scheduled_nominal_changes_apply(self):
        s = session(nominal=[{"tick": 3, "behavior": "slowdown"}], horizon=6)
        records = s.run(6)
        assert records[0].nominal is Behavior.CONTINUE
        assert records[2].nominal is Behavior.SLOW_DOWN
        assert records[5].nominal is Behavior.SLOW_DOWN
        assert records[2].selected is Behavior.SLOW_DOWN

    def test_scheduled_nominal_can_clear_stop_latch(self):
        s = session(
            worker={"id": "worker1", "x": 1.2, "y": 0.0, "speed": 2.0},
            events=[{"tick": 1, "type": "set_worker_waypoint", "x": 6.0, "y": 0.0}],
            nominal=[{"tick": 20, "behavior": "continue"}],
            horizon=25,
        )
        records = s.run(25)
        by_tick = {r.tick: r for r in records}
        assert by_tick[19].selected is Behavior.STOP  # latched
        assert by_tick[20].selected is Behavior.CONTINUE  # fresh plan entry

    def test_pause_by_user_is_a_flag_only(self):
        s = session()
        s.run(2)
        s.pause_by_user()
        assert s.status is RunStatus.PAUSED_BY_USER
        assert len(s.trace.records) == 2
        s.run(1)
        assert s.status is RunStatus.RUNNING
        assert len(s.trace.records) == 3

    def test_events_feed_appends_decisions(self):
        s = session()
        s.run(3)
        names = [name for name, _ in s.events]
        assert names == ["decision"] * 3
        assert s.events[0][1]["tick"] == 1


class TestAsk:
    def test_ask_latest_by_default(self):
        s = session()
        s.run(4)
        answer = s.ask("why")
        assert answer.text.startswith("At tick 4:")

    def test_ask_at_clause_wins_over_argument(self):
        s = session()
        s.run(5)
        answer = s.ask("why at 2", at=4)
        assert answer.text.startswith("At tick 2:")

    def test_ask_at_argument(self):
        s = session()
        s.run(5)
        answer = s.ask("why", at=3)
        assert answer.text.startswith("At tick 3:")

    def test_ask_before_any_tick(self):
        s = session()
        with pytest.raises(UnknownTickError, match="tick the session first"):
            s.ask("why")

    def test_ask_never_advances_the_world(self):
        s = session()
        s.run(3)
        before = (s.world.tick, len(s.trace.records))
        for text in ("why", "why not stop", "whatif worker back 2", "was it worker1"):
            s.ask(text)
        assert (s.world.tick, len(s.trace.records)) == before

    def test_ask_command_is_preview_only(self):
        s = session()
        s.run(3)
        answer = s.ask("resume")
        assert answer.kind in (ExplanationKind.COMMAND_ACK, ExplanationKind.REFUSAL)
        assert s.world.tick == 3
        assert len(s.trace.records) == 3

    def test_ask_evolves_dialogue_memory(self):
        s = session(
            robot={"x": 1.0, "y": 0.0, "heading": 0.0, "cruise_speed": 0.0},
            worker={"id": "worker1", "x": 4.0, "y": 0.15, "speed": 0.0},
            occluders=[
                {
                    "id": "forklift1",
                    "kind": "forklift",
                    "shape": {
                        "type": "polygon",
                        "points": [[-0.9, -0.4], [0.9, -0.4], [0.9, 0.4], [-0.9, 0.4]],
                    },
                    "x": 2.4,
                    "y": -0.3754,
                    "speed": 0.0,
                }
            ],
        )
        s.run(1)
        s.ask("why")
        assert s.memory.salient_entities[0] == "forklift1"
        answer = s.ask("was it it")
        assert "forklift1" in answer.text


class TestCommand:
    def euclid_session(self):
        # worker parked in the right zone from the start
        return session(
            robot={"x": 0.0, "y": 0.0, "heading": 0.0, "cruise_speed": 0.2},
            worker={"id": "worker1", "x": 0.5, "y": -0.5, "speed": 0.0},
        )

    def test_accepted_follow_consumes_a_tick(self):
        s = self.euclid_session()
        s.run(2)
        accepted, outcome = s.command(Behavior.MANUAL_FOLLOW)
        assert accepted is True
        assert outcome.kind is ExplanationKind.COMMAND_ACK
        record = s.trace.latest()
        assert record.tick == 3
        assert s.world.tick == 3
        assert record.nominal is Behavior.MANUAL_FOLLOW
        assert record.selected is Behavior.MANUAL_FOLLOW
        assert s.world.robot_mode is Behavior.MANUAL_FOLLOW

    def test_refused_follow_still_appends_and_applies(self):
        s = session()  # worker 6 m out: not in any zone
        s.run(2)
        ticks_before = s.world.tick
        accepted, outcome = s.command(Behavior.MANUAL_FOLLOW)
        assert accepted is False
        assert outcome.kind is ExplanationKind.REFUSAL
        record = s.trace.latest()
        assert record.tick == ticks_before + 1
        assert record.nominal is Behavior.MANUAL_FOLLOW
        assert record.selected is Behavior.STOP  # degrade rule
        assert s.world.robot_mode is Behavior.STOP

    def test_command_record_is_replayable(self):
        from whybot.trace import replay_verify

        s = self.euclid_session()
        s.run(2)
        s.command(Behavior.MANUAL_FOLLOW)
        s.run(3)
        results = replay_verify(s.trace.serialize())
        assert all(r.ok for r in results)

    def test_resume_after_stop(self):
        s = session(
            worker={"id": "worker1", "x": 1.2, "y": 0.0, "speed": 2.0},
            events=[{"tick": 1, "type": "set_worker_waypoint", "x": 6.0, "y": 0.0}],
        )
        s.run(10)
        assert s.trace.latest().selected is Behavior.STOP  # latched by now
        accepted, outcome = s.command(Behavior.CONTINUE)
        assert accepted is True
        assert "resuming" in outcome.text
        follow_up = s.tick_once()
        assert follow_up.nominal is Behavior.CONTINUE
        assert follow_up.selected is Behavior.CONTINUE

    def test_command_on_finished_session(self):
        s = session(horizon=2)
        s.run(2)
        with pytest.raises(SessionStateError, match="finished"):
            s.command(Behavior.CONTINUE)

    def test_command_at_last_tick_finishes_session(self):
        s = session(horizon=3)
        s.run(2)
        s.command(Behavior.CONTINUE)
        assert s.world.tick == 3
        assert s.status is RunStatus.FINISHED

    def test_command_events_emitted(self):
        s = self.euclid_session()
        s.run(1)
        s.command(Behavior.MANUAL_FOLLOW)
        names = [name for name, _ in s.events]
        assert names == ["decision", "decision", "explanation"]


class TestStateDict:
    def test_shape(self):
        s = session()
        s.run(2)
        snap = s.state_dict()
        assert snap["session_id"] == "s"
        assert snap["scenario"] == "s"
        assert snap["status"] == "running"
        assert snap["tick"] == 2
        assert snap["horizon"] == 30
        assert snap["trace_length"] == 2
        assert snap["latest"]["tick"] == 2
        assert snap["params_hash"] == s.trace.envelope_hash

    def test_idle_shape(self):
        s = session()
        snap = s.state_dict()
        assert snap["status"] == "idle"
        assert snap["tick"] == 0
        assert snap["latest"] is None

    def test_custom_session_id(self):
        s = Session(scenario_doc(), session_id="custom-1")
        assert s.session_id == "custom-1"
        assert s.trace.session_id == "custom-1"


class TestBundledEpisode:
    def test_full_run_matches_golden(self, bundled_scenario, golden_trace_text):
        s = Session(bundled_scenario)
        s.run(bundled_scenario.horizon)
        assert s.status is RunStatus.FINISHED
        assert s.trace.serialize() == golden_trace_text

    def test_pause_at_trigger_tick(self, bundled_scenario):
        s = Session(bundled_scenario)
        s.run(50)
        record = s.trace.get_at(50)
        assert record.selected is Behavior.PAUSE
        assert [c.id for c in record.active] == [ConstraintId.VISIBILITY]
        assert record.active[0].measured == 0.52
        prior = s.trace.get_at(49)
        assert prior.selected is Behavior.CONTINUE
