"""Explanation engine: grounded answers about recorded decisions.

Every answer is derived from one DecisionRecord plus, for counterfactuals, a
hypothetical state produced by ``apply_delta``. The engine cites only
constraints it can re-check, renders numbers to two decimals with units, and
never lets dialogue memory influence a verdict: memory is consulted solely to
resolve "it" back to an entity id and to track the conversation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

from .errors import ConflictingDeltasError, UnknownReferentError
from .geometry import Vec2
from .query import (
    Command,
    Confirm,
    EnterGuidanceZone,
    MoveOccluderBy,
    MoveWorkerBy,
    QueryAST,
    RemoveOccluder,
    SetVisibility,
    SetWorkerDistance,
    SetWorkerPosition,
    StateDelta,
    WhatIf,
    Why,
    WhyNot,
    delta_to_dict,
)
from .safety import (
    CONSTRAINT_BEHAVIOR,
    ActiveConstraint,
    Behavior,
    ConstraintId,
    DecisionRecord,
    EnvState,
    SafetyState,
    Side,
    arbitrate,
    distance as worker_distance,
    evaluate_constraints,
)
from .visibility import attribute_occlusion, compute_visibility


class ExplanationKind(str, Enum):
    CAUSAL = "causal"
    CONTRASTIVE = "contrastive"
    COUNTERFACTUAL = "counterfactual"
    CONFIRMATION = "confirmation"
    COMMAND_ACK = "command_ack"
    REFUSAL = "refusal"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a (possibly hypothetical) arbitration."""

    behavior: Behavior
    active: tuple[ActiveConstraint, ...] = ()

    def to_dict(self) -> dict:
        return {
            "behavior": self.behavior.value,
            "active": [c.to_dict() for c in self.active],
        }


@dataclass(frozen=True)
class Explanation:
    kind: ExplanationKind
    text: str
    cited: tuple[ActiveConstraint, ...] = ()
    attribution: tuple[str, ...] = ()
    verdict: Optional[Verdict] = None
    enabling_condition: Optional[tuple[StateDelta, ...]] = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "cited": [c.to_dict() for c in self.cited],
            "attribution": list(self.attribution),
            "verdict": self.verdict.to_dict() if self.verdict else None,
            "enabling_condition": (
                [delta_to_dict(d) for d in self.enabling_condition]
                if self.enabling_condition is not None
                else None
            ),
            "text": self.text,
        }


@dataclass(frozen=True)
class DialogueMemory:
    """Conversation context. Only ever used for referent resolution and
    phrasing; constraint evaluation never sees it."""

    session_id: str = ""
    salient_entities: tuple[str, ...] = ()  # most recent first, capped
    last_constraint: Optional[ConstraintId] = None
    last_whatif: Optional[tuple[tuple[StateDelta, ...], Verdict]] = None
    turn_count: int = 0


MAX_SALIENT = 8

#: Step-back distances (meters) tried by suggest_enabling_condition, in
#: order, before zone-entry and occluder-removal templates.
AWAY_GRID = tuple(0.5 * k for k in range(1, 11))


def _remember(
    memory: DialogueMemory,
    entities: Sequence[str] = (),
    constraint: Optional[ConstraintId] = None,
    whatif: Optional[tuple[tuple[StateDelta, ...], Verdict]] = None,
) -> DialogueMemory:
    salient = list(memory.salient_entities)
    for entity in reversed([e for e in entities if e]):
        if entity in salient:
            salient.remove(entity)
        salient.insert(0, entity)
    return replace(
        memory,
        salient_entities=tuple(salient[:MAX_SALIENT]),
        last_constraint=constraint if constraint is not None else memory.last_constraint,
        last_whatif=whatif if whatif is not None else memory.last_whatif,
        turn_count=memory.turn_count + 1,
    )


# --- formatting helpers -----------------------------------------------------------

_VERB = {
    Behavior.CONTINUE: "continue",
    Behavior.SLOW_DOWN: "slow down",
    Behavior.PAUSE: "pause",
    Behavior.STOP: "stop",
    Behavior.MANUAL_FOLLOW: "switch to manual-follow",
}

_DOING = {
    Behavior.CONTINUE: "continuing",
    Behavior.SLOW_DOWN: "slowing down",
    Behavior.PAUSE: "pausing",
    Behavior.STOP: "stopping",
    Behavior.MANUAL_FOLLOW: "following you in manual-follow",
}


def _m(value: float) -> str:
    return f"{value:.2f} m"


def _v(value: float) -> str:
    return f"{value:.2f}"


def _zone_clause(state: SafetyState) -> str:
    zone = state.params.guidance_zone
    return f"within {_m(zone.max_distance)} on my {zone.side.value} side"


def _constraint_brief(c: ActiveConstraint, state: SafetyState) -> str:
    if c.id is ConstraintId.PROXIMITY:
        return f"proximity ({_m(c.measured)} < d_min {_m(c.threshold)})"
    if c.id is ConstraintId.VISIBILITY:
        return f"visibility ({_v(c.measured)} < v_min {_v(c.threshold)})"
    return f"guidance zone (you are {_zone_clause(state)})"


def _constraint_clause(
    c: ActiveConstraint, state: SafetyState, attribution: Sequence[str]
) -> str:
    if c.id is ConstraintId.PROXIMITY:
        return (
            f"you are {_m(c.measured)} away, {_m(-c.margin)} inside the minimum "
            f"separation d_min = {_m(c.threshold)}"
        )
    if c.id is ConstraintId.VISIBILITY:
        clause = (
            f"my visibility confidence for you is {_v(c.measured)}, below the "
            f"required v_min = {_v(c.threshold)}"
        )
        if attribution:
            clause += f" due to occlusion by {', '.join(attribution)}"
        return clause
    return f"you are in my guidance zone, {_zone_clause(state)}"


def _with_tick(text: str, tick: int) -> str:
    return f"At tick {tick}: {text}"


def _visibility_attribution(state: SafetyState) -> tuple[str, ...]:
    return attribute_occlusion(state.robot, state.human, state.env.occluders)


def _unmet_zone_citation(state: SafetyState) -> ActiveConstraint:
    """Citation for a follow request without the zone. Measured 0.0 against
    threshold 1.0 encodes the unmet boolean prerequisite; unlike the other
    citations this one reports a requirement that failed to hold, not a
    limit that was crossed."""
    return ActiveConstraint(
        id=ConstraintId.GUIDANCE_ZONE,
        measured=0.0,
        threshold=1.0,
        margin=-1.0,
        subjects=(state.human.worker_id,),
    )


def _blockers(
    state: SafetyState,
    active: Sequence[ActiveConstraint],
    alternative: Behavior,
) -> tuple[ActiveConstraint, ...]:
    """Active constraints that individually rule out the alternative: those
    eligible under the alternative's own follow intent whose mapped behavior
    differs from it. Mirrors the eligibility rules in arbitrate."""
    follow_intent = (
        state.robot.mode is Behavior.MANUAL_FOLLOW
        or alternative is Behavior.MANUAL_FOLLOW
    )
    zone_active = any(c.id is ConstraintId.GUIDANCE_ZONE for c in active)
    handoff = follow_intent and zone_active

    def eligible(c: ActiveConstraint) -> bool:
        if c.id is ConstraintId.GUIDANCE_ZONE:
            return follow_intent
        if c.id is ConstraintId.PROXIMITY:
            return not handoff
        return True

    return tuple(
        c for c in active if eligible(c) and CONSTRAINT_BEHAVIOR[c.id] is not alternative
    )


# --- apply_delta ------------------------------------------------------------------


def apply_delta(state: SafetyState, deltas: Sequence[StateDelta]) -> SafetyState:
    """Apply hypothetical changes to a snapshot, in order, and return the
    hypothetical state.

    Positions move, occluders appear or vanish, and visibility is recomputed
    from the changed geometry (unless a diagnostic SetVisibility overrides
    it). Safety parameters are carried over unchanged by construction: the
    returned state aliases the immutable params object of the input. At most
    one delta may place the worker absolutely (worker-to, worker-distance,
    or zone entry); two such deltas conflict.

    Raises UnknownReferentError for ids not present in the state (anaphors
    must be resolved before calling) and ConflictingDeltasError for
    conflicting placements.
    """
    absolute_ops = [
        d for d in deltas
        if isinstance(d, (SetWorkerPosition, SetWorkerDistance, EnterGuidanceZone))
    ]
    if len(absolute_ops) > 1:
        names = " and ".join(type(d).__name__ for d in absolute_ops)
        raise ConflictingDeltasError(
            f"conflicting deltas: {names} both place the worker absolutely"
        )

    robot = state.robot
    worker_pos = state.human.position
    occluders = {o.occluder_id: o for o in state.env.occluders}
    visibility_override: Optional[float] = None

    def bearing_from_robot() -> Vec2:
        offset = worker_pos - robot.position
        if offset.norm() == 0.0:
            # Worker exactly on the robot: fall back to the heading direction.
            return robot.heading_vector()
        return offset.unit()

    def resolve(ref: str) -> str:
        if ref == "it":
            raise UnknownReferentError(
                "anaphor 'it' was not resolved; no salient entity to refer to"
            )
        if ref not in occluders:
            known = ", ".join(sorted(occluders)) or "none"
            raise UnknownReferentError(
                f"no occluder named {ref!r} in this state (known: {known})"
            )
        return ref

    for delta in deltas:
        if isinstance(delta, SetWorkerPosition):
            worker_pos = delta.point
        elif isinstance(delta, MoveWorkerBy):
            if delta.offset is not None:
                worker_pos = worker_pos + delta.offset
            else:
                worker_pos = worker_pos + bearing_from_robot().scaled(delta.away)
        elif isinstance(delta, SetWorkerDistance):
            worker_pos = robot.position + bearing_from_robot().scaled(delta.meters)
        elif isinstance(delta, RemoveOccluder):
            del occluders[resolve(delta.ref)]
        elif isinstance(delta, MoveOccluderBy):
            ref = resolve(delta.ref)
            old = occluders[ref]
            occluders[ref] = replace(old, shape=old.shape.translate(delta.offset))
        elif isinstance(delta, EnterGuidanceZone):
            zone = state.params.guidance_zone
            lateral = robot.heading_vector().perp_left()
            if delta.side is Side.RIGHT:
                lateral = lateral.scaled(-1.0)
            worker_pos = robot.position + lateral.scaled(zone.max_distance)
        elif isinstance(delta, SetVisibility):
            visibility_override = delta.value
        else:
            raise TypeError(f"unknown delta: {delta!r}")

    human = replace(state.human, position=worker_pos)
    occluder_tuple = tuple(occluders.values())
    if visibility_override is None:
        confidence = compute_visibility(robot, human, occluder_tuple)
    else:
        confidence = visibility_override
    env = EnvState(
        occluders=occluder_tuple,
        visibility={human.worker_id: confidence},
    )
    return SafetyState(
        tick=state.tick, human=human, robot=robot, env=env, params=state.params
    )


def _hypothetical(
    record: DecisionRecord, deltas: Sequence[StateDelta]
) -> tuple[
    SafetyState, tuple[ActiveConstraint, ...], Behavior, Optional[ActiveConstraint]
]:
    """Hypothetical state, its active set, and the arbitration outcome under
    the record's nominal. Entering the guidance zone counts as a commanded
    transition, since the question presumes the handoff."""
    hypothetical = apply_delta(record.state, deltas)
    active = evaluate_constraints(hypothetical)
    commanded = any(isinstance(d, EnterGuidanceZone) for d in deltas)
    selected, binding = arbitrate(
        active,
        record.nominal,
        hypothetical.params.rule_priorities,
        mode=record.state.robot.mode,
        commanded=commanded,
    )
    return hypothetical, active, selected, binding


# --- answers ----------------------------------------------------------------------


def answer_why(record: DecisionRecord) -> Explanation:
    """Causal answer: the constraint that bound, with its measurement, and
    the remaining active constraints as secondary citations."""
    state = record.state
    binding = record.binding()

    attribution: tuple[str, ...] = ()
    if any(c.id is ConstraintId.VISIBILITY for c in record.active):
        attribution = _visibility_attribution(state)

    if binding is None:
        if (
            record.nominal is Behavior.MANUAL_FOLLOW
            and record.selected is Behavior.STOP
        ):
            text = (
                f"I am stopping because manual-follow was requested but you "
                f"are not {_zone_clause(state)} (guidance zone)."
            )
            cited: tuple[ActiveConstraint, ...] = record.active
        elif record.active:
            # Zone active without follow intent: enabling only, nothing forced.
            text = (
                f"you are in my guidance zone ({_zone_clause(state)}), which "
                f"enables manual-follow on command; no overriding constraint "
                f"is active, so I am {_DOING[record.selected]}."
            )
            cited = record.active
        else:
            text = (
                f"no safety constraint is active; I am {_DOING[record.selected]} "
                f"because the plan calls for it."
            )
            cited = ()
        return Explanation(
            kind=ExplanationKind.CAUSAL,
            text=_with_tick(text, record.tick),
            cited=cited,
            attribution=attribution,
        )

    clause = _constraint_clause(binding, state, attribution)
    text = f"I am {_DOING[record.selected]} because {clause}."
    secondary = [c for c in record.active if c is not binding]
    if secondary:
        briefs = []
        for c in secondary:
            brief = _constraint_brief(c, state)
            if (
                c.id is ConstraintId.PROXIMITY
                and binding.id is ConstraintId.GUIDANCE_ZONE
            ):
                brief += ", superseded by the zone while you guide me"
            briefs.append(brief)
        text += " Also active: " + "; ".join(briefs) + "."
    return Explanation(
        kind=ExplanationKind.CAUSAL,
        text=_with_tick(text, record.tick),
        cited=record.active,
        attribution=attribution,
    )


def answer_why_not(record: DecisionRecord, alternative: Behavior) -> Explanation:
    """Contrastive answer: why the alternative was not selected.

    Admissibility reuses the arbiter itself: the alternative is admissible
    exactly when arbitration with the alternative as nominal returns it.
    Inadmissibility cites every active constraint that individually rules
    the alternative out, naming the violated parameter and margin; a follow
    request without the zone additionally cites the unmet zone prerequisite.
    """
    state = record.state
    if alternative is record.selected:
        text = _with_tick(
            f"{_VERB[alternative]} is exactly what I am doing.", record.tick
        )
        return Explanation(kind=ExplanationKind.CONFIRMATION, text=text)

    commanded = alternative is Behavior.MANUAL_FOLLOW
    would, _ = arbitrate(
        record.active,
        alternative,
        state.params.rule_priorities,
        mode=state.robot.mode,
        commanded=commanded,
    )
    zone_active = any(c.id is ConstraintId.GUIDANCE_ZONE for c in record.active)

    if would is alternative:
        if alternative is Behavior.MANUAL_FOLLOW:
            text = (
                f"nothing blocks manual-follow: you are in my guidance zone "
                f"({_zone_clause(state)}). Manual-follow engages on command; "
                f"say 'follow' or 'do it'."
            )
        else:
            text = (
                f"nothing blocks {_VERB[alternative]}; the plan called for "
                f"{_VERB[record.nominal]}, so I am {_DOING[record.selected]}."
            )
        return Explanation(
            kind=ExplanationKind.CONTRASTIVE, text=_with_tick(text, record.tick)
        )

    blockers = _blockers(state, record.active, alternative)
    attribution = (
        _visibility_attribution(state)
        if any(c.id is ConstraintId.VISIBILITY for c in blockers)
        else ()
    )
    clauses = [_constraint_clause(c, state, attribution) for c in blockers]
    cited = blockers
    if alternative is Behavior.MANUAL_FOLLOW and not zone_active:
        clauses.insert(0, f"you are not {_zone_clause(state)} (guidance zone)")
        cited = (_unmet_zone_citation(state),) + blockers
    text = f"I am not {_DOING[alternative]} because " + "; ".join(clauses) + "."
    return Explanation(
        kind=ExplanationKind.CONTRASTIVE,
        text=_with_tick(text, record.tick),
        cited=cited,
        attribution=attribution,
    )


def _describe_delta(delta: StateDelta) -> str:
    if isinstance(delta, SetWorkerPosition):
        return f"you move to ({delta.point.x:.2f}, {delta.point.y:.2f})"
    if isinstance(delta, MoveWorkerBy):
        if delta.offset is not None:
            return f"you move by ({delta.offset.x:.2f}, {delta.offset.y:.2f})"
        return f"you step back {_m(delta.away)}"
    if isinstance(delta, SetWorkerDistance):
        return f"you stand {_m(delta.meters)} from me"
    if isinstance(delta, RemoveOccluder):
        return f"{delta.ref} is removed"
    if isinstance(delta, MoveOccluderBy):
        return f"{delta.ref} moves by ({delta.offset.x:.2f}, {delta.offset.y:.2f})"
    if isinstance(delta, EnterGuidanceZone):
        return f"you enter my {delta.side.value} guidance zone"
    if isinstance(delta, SetVisibility):
        return f"visibility is overridden to {_v(delta.value)} (diagnostic)"
    raise TypeError(f"unknown delta: {delta!r}")


def answer_what_if(record: DecisionRecord, deltas: Sequence[StateDelta]) -> Explanation:
    """Counterfactual: re-evaluate the tick under the given changes.

    The hypothetical keeps the record's nominal and safety parameters; only
    the state changes. If the outcome would still be more restrictive than
    the nominal, a feasible enabling condition is searched for and attached.
    """
    hypothetical, active, selected, binding = _hypothetical(record, deltas)
    verdict = Verdict(selected, active)
    params = hypothetical.params

    d = worker_distance(hypothetical.human, hypothetical.robot)
    v = hypothetical.env.visibility_of(hypothetical.human.worker_id)
    setting = ", ".join(_describe_delta(delta) for delta in deltas)
    outcome = (
        f"distance would be {_m(d)} (d_min {_m(params.d_min)}) and "
        f"visibility {_v(v)} (v_min {_v(params.v_min)})"
    )

    attribution: tuple[str, ...] = ()
    if any(c.id is ConstraintId.VISIBILITY for c in active):
        attribution = _visibility_attribution(hypothetical)

    if binding is None:
        if active:
            text = (
                f"if {setting}: {outcome}; you would be in my guidance zone "
                f"({_zone_clause(hypothetical)}, available on command) and "
                f"I would {_VERB[selected]}."
            )
        else:
            text = (
                f"if {setting}: {outcome}; no constraint would be active and "
                f"I would {_VERB[selected]}."
            )
    else:
        text = (
            f"if {setting}: {outcome}; I would {_VERB[selected]} because "
            f"{_constraint_clause(binding, hypothetical, attribution)}."
        )
        if (
            any(c.id is ConstraintId.GUIDANCE_ZONE for c in active)
            and binding.id is not ConstraintId.GUIDANCE_ZONE
        ):
            text += (
                f" You would be in my guidance zone ({_zone_clause(hypothetical)})."
            )

    enabling: Optional[tuple[StateDelta, ...]] = None
    if selected is not record.nominal and record.selected is not record.nominal:
        enabling = suggest_enabling_condition(record, record.nominal)
        if enabling:
            steps = ", ".join(_describe_delta(delta) for delta in enabling)
            text += f" One way to {_VERB[record.nominal]}: {steps}."

    return Explanation(
        kind=ExplanationKind.COUNTERFACTUAL,
        text=_with_tick(text, record.tick),
        cited=active,
        attribution=attribution,
        verdict=verdict,
        enabling_condition=enabling,
    )


def suggest_enabling_condition(
    record: DecisionRecord, target: Behavior
) -> Optional[tuple[StateDelta, ...]]:
    """Search a fixed template library for changes that would make the target
    behavior the selected one.

    Templates, in documented order: step-back moves over AWAY_GRID, guidance
    zone entry (left, then right), removal of each occluder currently blamed
    for occlusion; then all pairs of those singletons in the same order.
    The first candidate whose re-evaluation selects the target is returned;
    None if the target is already selected or no template reaches it. The
    search makes no minimality claim; it returns the first workable offer.
    """
    if target is record.selected:
        return None

    state = record.state
    singles: list[StateDelta] = [MoveWorkerBy(away=d) for d in AWAY_GRID]
    singles.append(EnterGuidanceZone(Side.LEFT))
    singles.append(EnterGuidanceZone(Side.RIGHT))
    singles.extend(RemoveOccluder(ref) for ref in _visibility_attribution(state))

    candidates: list[tuple[StateDelta, ...]] = [(s,) for s in singles]
    for i in range(len(singles)):
        for j in range(i + 1, len(singles)):
            candidates.append((singles[i], singles[j]))

    for deltas in candidates:
        try:
            _, _, selected, _ = _hypothetical(record, deltas)
        except ConflictingDeltasError:
            continue
        if selected is target:
            return deltas
    return None


def confirm_involvement(record: DecisionRecord, referent: str) -> Explanation:
    """Affirm or deny that an entity is implicated in the current decision."""
    state = record.state
    known_ids = {o.occluder_id for o in state.env.occluders}
    known_ids.add(state.human.worker_id)
    if referent not in known_ids:
        text = _with_tick(
            f"there is no entity named {referent} in the workspace.", record.tick
        )
        return Explanation(kind=ExplanationKind.CONFIRMATION, text=text)

    attribution = _visibility_attribution(state)
    subjects = {s for c in record.active for s in c.subjects}
    occluder_kinds = {o.occluder_id: o.kind for o in state.env.occluders}

    if referent in attribution and any(
        c.id is ConstraintId.VISIBILITY for c in record.active
    ):
        kind = occluder_kinds.get(referent, "object")
        text = (
            f"yes. The {kind} {referent} obstructs my view of you and "
            f"reduces sensing reliability."
        )
        cited = tuple(c for c in record.active if c.id is ConstraintId.VISIBILITY)
        mentioned = attribution
    elif referent in subjects:
        text = f"yes. {referent} is a subject of the active constraints."
        cited = record.active
        mentioned = ()
    else:
        text = f"no. {referent} plays no part in this decision."
        cited = ()
        mentioned = ()
    return Explanation(
        kind=ExplanationKind.CONFIRMATION,
        text=_with_tick(text, record.tick),
        cited=cited,
        attribution=mentioned,
    )


# --- command admissibility (shared with the dialogue service) ----------------------


def command_outcome(
    record: DecisionRecord, behavior: Behavior
) -> tuple[bool, Explanation]:
    """Would this command be accepted against the given decision record?

    The same rule the live service applies: arbitration with the commanded
    behavior as nominal must select it. For manual-follow that means the
    guidance zone must be active at this instant.
    """
    state = record.state
    would, _ = arbitrate(
        record.active,
        behavior,
        state.params.rule_priorities,
        mode=state.robot.mode,
        commanded=behavior is Behavior.MANUAL_FOLLOW,
    )
    accepted = would is behavior
    if accepted:
        if behavior is Behavior.MANUAL_FOLLOW:
            text = f"switching to manual-follow. Please remain {_zone_clause(state)}."
        else:
            text = "resuming the planned task."
        return True, Explanation(
            kind=ExplanationKind.COMMAND_ACK,
            text=_with_tick(text, record.tick),
            verdict=Verdict(would, record.active),
        )

    zone_active = any(c.id is ConstraintId.GUIDANCE_ZONE for c in record.active)
    blockers = _blockers(state, record.active, behavior)
    attribution = (
        _visibility_attribution(state)
        if any(c.id is ConstraintId.VISIBILITY for c in blockers)
        else ()
    )
    clauses = [_constraint_clause(c, state, attribution) for c in blockers]
    cited = blockers
    if behavior is Behavior.MANUAL_FOLLOW and not zone_active:
        clauses.insert(0, f"you are not {_zone_clause(state)} (guidance zone)")
        cited = (_unmet_zone_citation(state),) + blockers
    text = f"I cannot {_VERB[behavior]}: " + "; ".join(clauses) + "."
    return False, Explanation(
        kind=ExplanationKind.REFUSAL,
        text=_with_tick(text, record.tick),
        cited=cited,
        attribution=attribution,
        verdict=Verdict(would, record.active),
    )


# --- anaphora resolution and dispatch -----------------------------------------------


def _resolve_occluder_anaphor(memory: DialogueMemory, state: SafetyState) -> str:
    present = {o.occluder_id for o in state.env.occluders}
    for entity in memory.salient_entities:
        if entity in present:
            return entity
    raise UnknownReferentError(
        "cannot resolve 'it': no salient occluder in this state"
    )


def _resolve_entity_anaphor(memory: DialogueMemory, state: SafetyState) -> str:
    present = {o.occluder_id for o in state.env.occluders}
    present.add(state.human.worker_id)
    for entity in memory.salient_entities:
        if entity in present:
            return entity
    raise UnknownReferentError("cannot resolve 'it': nothing salient to refer to")


def _resolve_query(
    query: QueryAST, memory: DialogueMemory, state: SafetyState
) -> QueryAST:
    if isinstance(query, Confirm) and query.referent == "it":
        return replace(query, referent=_resolve_entity_anaphor(memory, state))
    if isinstance(query, WhatIf):
        resolved: list[StateDelta] = []
        changed = False
        for delta in query.deltas:
            if isinstance(delta, (RemoveOccluder, MoveOccluderBy)) and delta.ref == "it":
                resolved.append(
                    replace(delta, ref=_resolve_occluder_anaphor(memory, state))
                )
                changed = True
            else:
                resolved.append(delta)
        if changed:
            return replace(query, deltas=tuple(resolved))
    return query


def explain(
    record: DecisionRecord, query: QueryAST, memory: Optional[DialogueMemory] = None
) -> tuple[Explanation, DialogueMemory]:
    """Answer one query against one decision record.

    Returns the explanation and the evolved dialogue memory. Memory is used
    only to resolve anaphoric references before dispatch; identical queries
    with explicit referents produce identical verdicts regardless of memory.
    """
    memory = memory or DialogueMemory()
    query = _resolve_query(query, memory, record.state)

    if isinstance(query, Why):
        explanation = answer_why(record)
        entities = list(explanation.attribution)
        entities.extend(s for c in explanation.cited for s in c.subjects)
        binding = record.binding()
        memory = _remember(
            memory, entities, constraint=binding.id if binding else None
        )
        return explanation, memory

    if isinstance(query, WhyNot):
        explanation = answer_why_not(record, query.alternative)
        entities = list(explanation.attribution)
        entities.extend(s for c in explanation.cited for s in c.subjects)
        constraint = explanation.cited[0].id if explanation.cited else None
        memory = _remember(memory, entities, constraint=constraint)
        return explanation, memory

    if isinstance(query, WhatIf):
        explanation = answer_what_if(record, query.deltas)
        entities = [
            delta.ref
            for delta in query.deltas
            if isinstance(delta, (RemoveOccluder, MoveOccluderBy))
        ]
        assert explanation.verdict is not None
        memory = _remember(
            memory, entities, whatif=(query.deltas, explanation.verdict)
        )
        return explanation, memory

    if isinstance(query, Confirm):
        explanation = confirm_involvement(record, query.referent)
        known = {o.occluder_id for o in record.state.env.occluders}
        known.add(record.state.human.worker_id)
        entities = [query.referent] if query.referent in known else []
        return explanation, _remember(memory, entities)

    if isinstance(query, Command):
        # Advisory preview only: asking never executes. The live service runs
        # the same rule against the current state and appends a record.
        accepted, outcome = command_outcome(record, query.behavior)
        if not accepted:
            return outcome, _remember(memory)
        preview = Explanation(
            kind=ExplanationKind.COMMAND_ACK,
            text=_with_tick(
                f"I can {_VERB[query.behavior]} now; send the command to proceed.",
                record.tick,
            ),
            verdict=outcome.verdict,
        )
        return preview, _remember(memory)

    raise TypeError(f"unknown query: {query!r}")
