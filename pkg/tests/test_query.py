import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whybot.errors import QueryError
from whybot.geometry import Vec2
from whybot.query import (
    Command,
    Confirm,
    EnterGuidanceZone,
    MoveOccluderBy,
    MoveWorkerBy,
    RemoveOccluder,
    SetVisibility,
    SetWorkerDistance,
    SetWorkerPosition,
    WhatIf,
    Why,
    WhyNot,
    delta_from_dict,
    delta_to_dict,
    parse,
    parse_structured,
    query_to_dict,
    render,
)
from whybot.safety import Behavior, ConstraintId, Side

CORPUS = json.loads(
    (Path(__file__).parent / "data" / "query_corpus.json").read_text(encoding="utf-8")
)


class TestCorpus:
    def test_corpus_is_large_enough(self):
        assert len(CORPUS) >= 30

    @pytest.mark.parametrize(
        "case", CORPUS, ids=[c["text"] for c in CORPUS]
    )
    def test_text_and_structured_forms_agree(self, case):
        assert parse(case["text"]) == parse_structured(case["structured"])

    @pytest.mark.parametrize(
        "case", CORPUS, ids=[c["text"] for c in CORPUS]
    )
    def test_canonical_render_round_trips(self, case):
        ast = parse(case["text"])
        assert parse(render(ast)) == ast

    @pytest.mark.parametrize(
        "case", CORPUS, ids=[c["text"] for c in CORPUS]
    )
    def test_structured_round_trips(self, case):
        ast = parse(case["text"])
        assert parse_structured(query_to_dict(ast)) == ast


class TestTextGrammar:
    def test_why_variants(self):
        assert parse("why") == Why()
        assert parse("why stop") == Why(ConstraintId.PROXIMITY)
        assert parse("why pause") == Why(ConstraintId.VISIBILITY)
        assert parse("why slow") == Why(None)
        assert parse("why at 3") == Why(at=3)

    def test_whynot_spellings_agree(self):
        assert parse("why not manual") == parse("whynot manual") == WhyNot(Behavior.MANUAL_FOLLOW)
        assert parse("whynot slow_down") == WhyNot(Behavior.SLOW_DOWN)

    def test_case_and_punctuation_insensitive(self):
        assert parse("WHY NOT STOP?") == WhyNot(Behavior.STOP)
        assert parse("  do it!  ") == Command(Behavior.MANUAL_FOLLOW)

    def test_point_forms(self):
        bare = parse("whatif worker to 1.5,-2.0")
        wrapped = parse("whatif worker to (1.5, -2.0)")
        assert bare == wrapped == WhatIf((SetWorkerPosition(Vec2(1.5, -2.0)),))

    def test_multi_delta_conjunction(self):
        ast = parse("what if worker back 0.5 and guide left and visibility 0.9")
        assert ast == WhatIf(
            (
                MoveWorkerBy(away=0.5),
                EnterGuidanceZone(Side.LEFT),
                SetVisibility(0.9),
            )
        )

    def test_scientific_notation_numbers(self):
        ast = parse("whatif worker by 1e-3,-2.5E2")
        assert ast == WhatIf((MoveWorkerBy(offset=Vec2(0.001, -250.0)),))

    def test_commands(self):
        assert parse("do it") == Command(Behavior.MANUAL_FOLLOW)
        assert parse("follow") == Command(Behavior.MANUAL_FOLLOW)
        assert parse("resume") == Command(Behavior.CONTINUE)


class TestTextErrors:
    def test_unknown_query_word(self):
        with pytest.raises(QueryError) as e:
            parse("explain yourself")
        assert e.value.position == 0
        assert "accepted forms" in e.value.hint

    def test_error_position_points_at_token(self):
        text = "why not sprint"
        with pytest.raises(QueryError) as e:
            parse(text)
        assert e.value.position == text.index("sprint")
        assert "valid behaviors" in e.value.hint

    def test_follow_is_not_a_behavior(self):
        # "follow" commands a transition; the behavior name is "manual"
        with pytest.raises(QueryError, match="unknown behavior"):
            parse("why not follow")

    def test_missing_delta(self):
        with pytest.raises(QueryError) as e:
            parse("what if")
        assert "state change" in str(e.value)

    def test_incomplete_worker_delta(self):
        with pytest.raises(QueryError) as e:
            parse("whatif worker")
        assert "expected 'to', 'by', 'back', or 'distance'" in str(e.value)
        assert "worker back <meters>" in e.value.hint

    def test_visibility_range(self):
        with pytest.raises(QueryError, match="lie in"):
            parse("whatif visibility 1.5")

    def test_negative_distance(self):
        with pytest.raises(QueryError, match=">= 0"):
            parse("whatif worker distance -1")

    def test_trailing_garbage(self):
        with pytest.raises(QueryError, match="trailing"):
            parse("follow now")

    def test_missing_tick_number(self):
        with pytest.raises(QueryError, match="tick"):
            parse("why at")
        with pytest.raises(QueryError, match="nonnegative integer"):
            parse("why at 1.5")

    def test_empty_and_non_string(self):
        with pytest.raises(QueryError, match="empty"):
            parse("   ")
        with pytest.raises(QueryError, match="string"):
            parse(12)  # type: ignore[arg-type]

    def test_unexpected_character(self):
        with pytest.raises(QueryError) as e:
            parse("why @ 3")
        assert e.value.position == 4

    def test_error_message_carries_position(self):
        with pytest.raises(QueryError, match=r"at position"):
            parse("why not sprint")


class TestStructuredErrors:
    def test_non_mapping(self):
        with pytest.raises(QueryError, match="object"):
            parse_structured("why")

    def test_unknown_type(self):
        with pytest.raises(QueryError) as e:
            parse_structured({"type": "explain"})
        assert "types:" in e.value.hint

    def test_unknown_field(self):
        with pytest.raises(QueryError, match="unknown field"):
            parse_structured({"type": "why", "tick": 3})

    def test_why_target_restricted(self):
        with pytest.raises(QueryError, match="proximity or visibility"):
            parse_structured({"type": "why", "target": "guidance_zone"})

    def test_whatif_requires_deltas(self):
        with pytest.raises(QueryError, match="non-empty"):
            parse_structured({"type": "whatif", "deltas": []})

    def test_unknown_delta_op(self):
        with pytest.raises(QueryError) as e:
            parse_structured({"type": "whatif", "deltas": [{"op": "teleport"}]})
        assert "valid ops" in e.value.hint

    def test_command_behavior_restricted(self):
        with pytest.raises(QueryError, match="limited to"):
            parse_structured({"type": "command", "behavior": "stop"})

    def test_at_must_be_nonnegative_int(self):
        for bad in (-1, 1.5, True, "7"):
            with pytest.raises(QueryError):
                parse_structured({"type": "why", "target": None, "at": bad})

    def test_delta_field_types(self):
        with pytest.raises(QueryError, match="must be a number"):
            delta_from_dict({"op": "set_worker_position", "x": "1", "y": 2})
        with pytest.raises(QueryError, match="requires field"):
            delta_from_dict({"op": "move_by", "id": "o1", "dx": 1.0})


# strategy: arbitrary ASTs built from realistic components
idents = st.sampled_from(["forklift1", "stack1", "cart_2", "it", "agv-7"])
safe_floats = st.floats(min_value=-100, max_value=100, allow_nan=False)
points = st.builds(Vec2, safe_floats, safe_floats)
at_clause = st.one_of(st.none(), st.integers(min_value=0, max_value=10_000))

deltas = st.one_of(
    st.builds(SetWorkerPosition, points),
    st.builds(MoveWorkerBy, offset=points),
    safe_floats.map(lambda a: MoveWorkerBy(away=a)),
    st.builds(SetWorkerDistance, st.floats(min_value=0, max_value=100)),
    st.builds(RemoveOccluder, idents),
    st.builds(MoveOccluderBy, idents, points),
    st.builds(EnterGuidanceZone, st.sampled_from(list(Side))),
    st.builds(SetVisibility, st.floats(min_value=0, max_value=1)),
)

asts = st.one_of(
    st.builds(Why, st.one_of(st.none(), st.sampled_from([ConstraintId.PROXIMITY, ConstraintId.VISIBILITY])), at_clause),
    st.builds(WhyNot, st.sampled_from(list(Behavior)), at_clause),
    st.builds(WhatIf, st.lists(deltas, min_size=1, max_size=4).map(tuple), at_clause),
    st.builds(Confirm, idents, at_clause),
    st.builds(Command, st.sampled_from([Behavior.MANUAL_FOLLOW, Behavior.CONTINUE]), at_clause),
)


class TestRoundTripProperties:
    @given(asts)
    @settings(max_examples=400)
    def test_render_parse_inverse(self, ast):
        assert parse(render(ast)) == ast

    @given(asts)
    @settings(max_examples=400)
    def test_structured_inverse(self, ast):
        wire = query_to_dict(ast)
        json.dumps(wire)  # must be JSON-serializable
        assert parse_structured(wire) == ast

    @given(deltas)
    @settings(max_examples=300)
    def test_delta_dict_inverse(self, delta):
        assert delta_from_dict(delta_to_dict(delta)) == delta

    @given(st.text(max_size=60))
    @settings(max_examples=500)
    def test_parse_is_total(self, text):
        try:
            parse(text)
        except QueryError:
            pass
