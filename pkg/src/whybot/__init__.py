"""Rule-based safety arbitration with replayable, interrogable decisions.

Every control cycle evaluates a closed set of safety constraints against a
world snapshot, arbitrates them by priority into one selected behavior, and
appends a self-contained decision record to the session trace. Records can
be re-derived offline (``whybot replay --verify``) and interrogated through
a small natural-language query surface (why / why not / what if / commands),
with every explanation grounded in the stored record it answers for.
"""

from .errors import (
    ConflictingDeltasError,
    DeltaError,
    EnvelopeViolation,
    QueryError,
    ScenarioError,
    SessionStateError,
    TickOrderError,
    TraceError,
    TraceFormatError,
    UnknownReferentError,
    UnknownSessionError,
    UnknownTickError,
    WhybotError,
)
from .explain import (
    DialogueMemory,
    Explanation,
    ExplanationKind,
    Verdict,
    answer_what_if,
    answer_why,
    answer_why_not,
    apply_delta,
    command_outcome,
    confirm_involvement,
    explain,
    suggest_enabling_condition,
)
from .query import QueryAST, parse, parse_structured
from .safety import (
    ActiveConstraint,
    Behavior,
    ConstraintId,
    DecisionRecord,
    EnvState,
    GuidanceZoneParams,
    HumanState,
    Occluder,
    RobotState,
    SafetyParams,
    SafetyState,
    Side,
    arbitrate,
    distance,
    evaluate_constraints,
    make_decision,
    params_hash,
    select_behavior,
    worker_in_guidance_zone,
)
from .scenario import (
    Scenario,
    list_bundled_scenarios,
    load_bundled_scenario,
    load_scenario,
    parse_scenario_text,
    validate_scenario,
)
from .session import RunStatus, Session
from .trace import ReplayResult, Trace, record_check, replay_verify
from .visibility import compute_visibility
from .world import World

__version__ = "0.1.0"

__all__ = [
    "ActiveConstraint",
    "Behavior",
    "ConflictingDeltasError",
    "ConstraintId",
    "DecisionRecord",
    "DeltaError",
    "DialogueMemory",
    "EnvState",
    "EnvelopeViolation",
    "Explanation",
    "ExplanationKind",
    "GuidanceZoneParams",
    "HumanState",
    "Occluder",
    "QueryAST",
    "QueryError",
    "ReplayResult",
    "RobotState",
    "RunStatus",
    "SafetyParams",
    "SafetyState",
    "Scenario",
    "ScenarioError",
    "Session",
    "SessionStateError",
    "Side",
    "TickOrderError",
    "Trace",
    "TraceError",
    "TraceFormatError",
    "UnknownReferentError",
    "UnknownSessionError",
    "UnknownTickError",
    "Verdict",
    "WhybotError",
    "World",
    "answer_what_if",
    "answer_why",
    "answer_why_not",
    "apply_delta",
    "arbitrate",
    "command_outcome",
    "compute_visibility",
    "confirm_involvement",
    "distance",
    "evaluate_constraints",
    "explain",
    "list_bundled_scenarios",
    "load_bundled_scenario",
    "load_scenario",
    "make_decision",
    "params_hash",
    "parse",
    "parse_scenario_text",
    "parse_structured",
    "record_check",
    "replay_verify",
    "select_behavior",
    "suggest_enabling_condition",
    "validate_scenario",
    "worker_in_guidance_zone",
    "__version__",
]
