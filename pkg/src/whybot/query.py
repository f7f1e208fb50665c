"""Query language for interrogating decisions.

Text grammar (keywords are case-insensitive; a trailing ``at N`` addresses a
specific tick; trailing sentence punctuation is ignored):

    query    := why | whynot | whatif | confirm | command ["at" integer]
    why      := "why" ["stop" | "pause" | "slow"]
    whynot   := "whynot" behavior | "why" "not" behavior
    whatif   := ("whatif" | "what" "if") delta {"and" delta}
    delta    := "worker" ("to" point | "by" vector | "back" number
                          | "distance" number)
              | "remove" ident | "move" ident "by" vector
              | "guide" ("left" | "right")
              | "visibility" number
    confirm  := "was" "it" (ident | "it")
    command  := "do" "it" | "follow" | "resume"
    behavior := "continue" | "slowdown" | "stop" | "pause" | "manual"
    point    := ["("] number "," number [")"]

Every query also has a structured JSON form (see ``parse_structured``); the
two forms parse to identical ASTs. Parsing is total: any input yields either
a QueryAST or a QueryError carrying the offending position and the accepted
forms, never a crash.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence, Union

from .errors import QueryError
from .geometry import Vec2
from .safety import Behavior, ConstraintId, Side

# --- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class SetWorkerPosition:
    point: Vec2


@dataclass(frozen=True)
class MoveWorkerBy:
    """Relative worker move: either a workspace vector, or ``away`` meters
    along the robot-to-worker bearing (the "worker back d" form)."""

    offset: Optional[Vec2] = None
    away: Optional[float] = None

    def __post_init__(self) -> None:
        if (self.offset is None) == (self.away is None):
            raise ValueError("exactly one of offset/away must be set")


@dataclass(frozen=True)
class SetWorkerDistance:
    meters: float


@dataclass(frozen=True)
class RemoveOccluder:
    ref: str  # occluder id, or "it" for anaphoric reference


@dataclass(frozen=True)
class MoveOccluderBy:
    ref: str
    offset: Vec2


@dataclass(frozen=True)
class EnterGuidanceZone:
    side: Side


@dataclass(frozen=True)
class SetVisibility:
    """Diagnostic override of the visibility confidence; bypasses geometry
    and is flagged as such in explanations."""

    value: float


StateDelta = Union[
    SetWorkerPosition,
    MoveWorkerBy,
    SetWorkerDistance,
    RemoveOccluder,
    MoveOccluderBy,
    EnterGuidanceZone,
    SetVisibility,
]


@dataclass(frozen=True)
class Why:
    target: Optional[ConstraintId] = None
    at: Optional[int] = None


@dataclass(frozen=True)
class WhyNot:
    alternative: Behavior
    at: Optional[int] = None


@dataclass(frozen=True)
class WhatIf:
    deltas: tuple[StateDelta, ...]
    at: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.deltas:
            raise ValueError("what-if requires at least one delta")


@dataclass(frozen=True)
class Confirm:
    referent: str  # entity id, or "it"
    at: Optional[int] = None


@dataclass(frozen=True)
class Command:
    behavior: Behavior
    at: Optional[int] = None

    def __post_init__(self) -> None:
        if self.behavior not in (Behavior.MANUAL_FOLLOW, Behavior.CONTINUE):
            raise ValueError("commands are limited to manual_follow and continue")


QueryAST = Union[Why, WhyNot, WhatIf, Confirm, Command]


# --- tokenizer ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<space>\s+)
  | (?P<number>[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<word>[A-Za-z_][A-Za-z0-9_\-]*)
  | (?P<comma>,)
  | (?P<lparen>\()
  | (?P<rparen>\))
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "word" | "comma" | "lparen" | "rparen" | "end"
    text: str
    position: int

    def lowered(self) -> str:
        return self.text.lower()


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise QueryError(
                f"unexpected character {text[pos]!r}",
                position=pos,
                hint="queries use words, numbers, commas, and parentheses",
            )
        kind = match.lastgroup or ""
        if kind != "space":
            tokens.append(_Token(kind, match.group(), match.start()))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


_TOP_LEVEL_HINT = (
    "accepted forms: why [stop|pause|slow], why not <behavior>, "
    "whynot <behavior>, what if <delta> [and <delta>...], whatif <delta>..., "
    "was it <id|it>, do it, follow, resume; append 'at <tick>' to address a tick"
)

_DELTA_HINT = (
    "accepted deltas: worker to <x>,<y>; worker by <dx>,<dy>; "
    "worker back <meters>; worker distance <meters>; remove <id|it>; "
    "move <id|it> by <dx>,<dy>; guide left|right; visibility <0..1>"
)

_BEHAVIOR_TOKENS: dict[str, Behavior] = {
    "continue": Behavior.CONTINUE,
    "slowdown": Behavior.SLOW_DOWN,
    "slow_down": Behavior.SLOW_DOWN,
    "stop": Behavior.STOP,
    "pause": Behavior.PAUSE,
    "manual": Behavior.MANUAL_FOLLOW,
    "manual_follow": Behavior.MANUAL_FOLLOW,
}

_CANONICAL_BEHAVIOR_TOKEN: dict[Behavior, str] = {
    Behavior.CONTINUE: "continue",
    Behavior.SLOW_DOWN: "slowdown",
    Behavior.STOP: "stop",
    Behavior.PAUSE: "pause",
    Behavior.MANUAL_FOLLOW: "manual",
}

_WHY_VERB_TARGET: dict[str, Optional[ConstraintId]] = {
    "stop": ConstraintId.PROXIMITY,
    "pause": ConstraintId.VISIBILITY,
    "slow": None,  # no constraint maps to slow_down; verb is accepted but lossy
}


class _Parser:
    def __init__(self, tokens: list[_Token]) -> None:
        self.tokens = tokens
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        if token.kind != "end":
            self.index += 1
        return token

    def error(self, message: str, token: Optional[_Token] = None, hint: str = "") -> QueryError:
        token = token or self.peek()
        return QueryError(message, position=token.position, hint=hint)

    def expect_word(self, *words: str, hint: str = "") -> _Token:
        token = self.peek()
        if token.kind == "word" and token.lowered() in words:
            return self.advance()
        expected = " or ".join(repr(w) for w in words)
        raise self.error(f"expected {expected}, found {token.text or 'end of query'!r}", token, hint)

    def number(self, what: str) -> float:
        token = self.peek()
        if token.kind != "number":
            raise self.error(
                f"expected a number for {what}, found {token.text or 'end of query'!r}",
                token,
                _DELTA_HINT,
            )
        self.advance()
        value = float(token.text)
        if not math.isfinite(value):
            raise self.error(f"{what} is out of range", token)
        return value

    def point(self, what: str) -> Vec2:
        wrapped = False
        if self.peek().kind == "lparen":
            self.advance()
            wrapped = True
        x = self.number(f"{what} x")
        if self.peek().kind != "comma":
            raise self.error(
                f"expected ',' between {what} coordinates", self.peek(), _DELTA_HINT
            )
        self.advance()
        y = self.number(f"{what} y")
        if wrapped:
            if self.peek().kind != "rparen":
                raise self.error(f"expected ')' after {what}", self.peek())
            self.advance()
        return Vec2(x, y)

    def ident(self, what: str) -> str:
        token = self.peek()
        if token.kind != "word":
            raise self.error(
                f"expected an entity id for {what}, found {token.text or 'end of query'!r}",
                token,
                _DELTA_HINT,
            )
        self.advance()
        return token.text

    def behavior(self) -> Behavior:
        token = self.peek()
        if token.kind == "word" and token.lowered() in _BEHAVIOR_TOKENS:
            self.advance()
            return _BEHAVIOR_TOKENS[token.lowered()]
        raise self.error(
            f"unknown behavior {token.text or 'end of query'!r}",
            token,
            "valid behaviors: continue, slowdown, stop, pause, manual",
        )


def _parse_delta(p: _Parser) -> StateDelta:
    token = p.peek()
    word = token.lowered() if token.kind == "word" else ""
    if word == "worker":
        p.advance()
        selector = p.peek()
        sel = selector.lowered() if selector.kind == "word" else ""
        if sel == "to":
            p.advance()
            return SetWorkerPosition(p.point("worker position"))
        if sel == "by":
            p.advance()
            return MoveWorkerBy(offset=p.point("worker offset"))
        if sel == "back":
            p.advance()
            return MoveWorkerBy(away=p.number("worker back distance"))
        if sel == "distance":
            p.advance()
            meters = p.number("worker distance")
            if meters < 0:
                raise p.error("worker distance must be >= 0", selector)
            return SetWorkerDistance(meters)
        raise p.error(
            f"expected 'to', 'by', 'back', or 'distance' after 'worker', "
            f"found {selector.text or 'end of query'!r}",
            selector,
            _DELTA_HINT,
        )
    if word == "remove":
        p.advance()
        return RemoveOccluder(p.ident("remove"))
    if word == "move":
        p.advance()
        ref = p.ident("move")
        p.expect_word("by", hint=_DELTA_HINT)
        return MoveOccluderBy(ref, p.point("move offset"))
    if word == "guide":
        p.advance()
        side_token = p.expect_word("left", "right", hint="guide takes 'left' or 'right'")
        return EnterGuidanceZone(Side(side_token.lowered()))
    if word == "visibility":
        p.advance()
        value = p.number("visibility")
        if not (0.0 <= value <= 1.0):
            raise p.error("visibility must lie in [0, 1]", token)
        return SetVisibility(value)
    raise p.error(
        f"expected a state change, found {token.text or 'end of query'!r}",
        token,
        _DELTA_HINT,
    )


def _parse_at(p: _Parser) -> Optional[int]:
    token = p.peek()
    if token.kind == "word" and token.lowered() == "at":
        p.advance()
        number_token = p.peek()
        if number_token.kind != "number":
            raise p.error("expected a tick number after 'at'", number_token)
        p.advance()
        value = float(number_token.text)
        if value != int(value) or value < 0:
            raise p.error("tick must be a nonnegative integer", number_token)
        return int(value)
    return None


def parse(text: str) -> QueryAST:
    """Parse query text into an AST. Raises QueryError on any invalid input."""
    if not isinstance(text, str):
        raise QueryError("query must be a string", hint=_TOP_LEVEL_HINT)
    stripped = text.strip().rstrip("?.!").strip()
    if not stripped:
        raise QueryError("empty query", hint=_TOP_LEVEL_HINT)
    p = _Parser(_tokenize(stripped))

    first = p.peek()
    word = first.lowered() if first.kind == "word" else ""
    ast: QueryAST
    if word == "why":
        p.advance()
        follower = p.peek()
        fw = follower.lowered() if follower.kind == "word" else ""
        if fw == "not":
            p.advance()
            ast = WhyNot(p.behavior(), at=_parse_at(p))
        elif fw in _WHY_VERB_TARGET:
            p.advance()
            ast = Why(_WHY_VERB_TARGET[fw], at=_parse_at(p))
        elif follower.kind == "end" or fw == "at":
            ast = Why(at=_parse_at(p))
        else:
            raise p.error(
                f"expected 'not', 'stop', 'pause', 'slow', or end after 'why', "
                f"found {follower.text!r}",
                follower,
                _TOP_LEVEL_HINT,
            )
    elif word == "whynot":
        p.advance()
        ast = WhyNot(p.behavior(), at=_parse_at(p))
    elif word in ("whatif", "what"):
        p.advance()
        if word == "what":
            p.expect_word("if", hint=_TOP_LEVEL_HINT)
        deltas = [_parse_delta(p)]
        while p.peek().kind == "word" and p.peek().lowered() == "and":
            p.advance()
            deltas.append(_parse_delta(p))
        ast = WhatIf(tuple(deltas), at=_parse_at(p))
    elif word == "was":
        p.advance()
        p.expect_word("it", hint="confirmation form: was it <id|it>")
        ast = Confirm(p.ident("confirmation"), at=_parse_at(p))
    elif word == "do":
        p.advance()
        p.expect_word("it", hint="command forms: do it, follow, resume")
        ast = Command(Behavior.MANUAL_FOLLOW, at=_parse_at(p))
    elif word == "follow":
        p.advance()
        ast = Command(Behavior.MANUAL_FOLLOW, at=_parse_at(p))
    elif word == "resume":
        p.advance()
        ast = Command(Behavior.CONTINUE, at=_parse_at(p))
    else:
        raise p.error(
            f"unknown query {first.text or 'end of query'!r}", first, _TOP_LEVEL_HINT
        )

    trailing = p.peek()
    if trailing.kind != "end":
        raise p.error(f"unexpected trailing input {trailing.text!r}", trailing, _TOP_LEVEL_HINT)
    return ast


# --- structured form ---------------------------------------------------------

_COMMAND_ALIASES: dict[str, Behavior] = {
    "manual": Behavior.MANUAL_FOLLOW,
    "manual_follow": Behavior.MANUAL_FOLLOW,
    "follow": Behavior.MANUAL_FOLLOW,
    "continue": Behavior.CONTINUE,
    "resume": Behavior.CONTINUE,
}


def _structured_error(message: str, hint: str = "") -> QueryError:
    return QueryError(message, hint=hint)


def _require_fields(data: Mapping, allowed: Sequence[str], context: str) -> None:
    for key in data:
        if key not in allowed:
            raise _structured_error(
                f"unknown field {key!r} in {context}",
                hint=f"allowed fields: {', '.join(allowed)}",
            )


def _structured_number(data: Mapping, key: str, context: str) -> float:
    if key not in data:
        raise _structured_error(f"{context} requires field {key!r}")
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _structured_error(f"{context}.{key} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise _structured_error(f"{context}.{key} must be finite")
    return value


def _structured_string(data: Mapping, key: str, context: str) -> str:
    if key not in data:
        raise _structured_error(f"{context} requires field {key!r}")
    value = data[key]
    if not isinstance(value, str) or not value:
        raise _structured_error(f"{context}.{key} must be a non-empty string")
    return value


def delta_from_dict(data: Mapping) -> StateDelta:
    if not isinstance(data, Mapping):
        raise _structured_error("each delta must be an object with an 'op' field")
    op = data.get("op")
    context = f"delta op {op!r}"
    if op == "set_worker_position":
        _require_fields(data, ["op", "x", "y"], context)
        return SetWorkerPosition(
            Vec2(_structured_number(data, "x", context), _structured_number(data, "y", context))
        )
    if op == "move_worker_by":
        _require_fields(data, ["op", "dx", "dy"], context)
        return MoveWorkerBy(
            offset=Vec2(
                _structured_number(data, "dx", context),
                _structured_number(data, "dy", context),
            )
        )
    if op == "move_worker_back":
        _require_fields(data, ["op", "meters"], context)
        return MoveWorkerBy(away=_structured_number(data, "meters", context))
    if op == "set_worker_distance":
        _require_fields(data, ["op", "meters"], context)
        meters = _structured_number(data, "meters", context)
        if meters < 0:
            raise _structured_error("set_worker_distance meters must be >= 0")
        return SetWorkerDistance(meters)
    if op == "remove":
        _require_fields(data, ["op", "id"], context)
        return RemoveOccluder(_structured_string(data, "id", context))
    if op == "move_by":
        _require_fields(data, ["op", "id", "dx", "dy"], context)
        return MoveOccluderBy(
            _structured_string(data, "id", context),
            Vec2(
                _structured_number(data, "dx", context),
                _structured_number(data, "dy", context),
            ),
        )
    if op == "enter_guidance_zone":
        _require_fields(data, ["op", "side"], context)
        side = _structured_string(data, "side", context).lower()
        if side not in (Side.LEFT.value, Side.RIGHT.value):
            raise _structured_error("enter_guidance_zone side must be left or right")
        return EnterGuidanceZone(Side(side))
    if op == "set_visibility":
        _require_fields(data, ["op", "value"], context)
        value = _structured_number(data, "value", context)
        if not (0.0 <= value <= 1.0):
            raise _structured_error("set_visibility value must lie in [0, 1]")
        return SetVisibility(value)
    raise _structured_error(
        f"unknown delta op {op!r}",
        hint=(
            "valid ops: set_worker_position, move_worker_by, move_worker_back, "
            "set_worker_distance, remove, move_by, enter_guidance_zone, set_visibility"
        ),
    )


def delta_to_dict(delta: StateDelta) -> dict:
    if isinstance(delta, SetWorkerPosition):
        return {"op": "set_worker_position", "x": delta.point.x, "y": delta.point.y}
    if isinstance(delta, MoveWorkerBy):
        if delta.offset is not None:
            return {"op": "move_worker_by", "dx": delta.offset.x, "dy": delta.offset.y}
        return {"op": "move_worker_back", "meters": delta.away}
    if isinstance(delta, SetWorkerDistance):
        return {"op": "set_worker_distance", "meters": delta.meters}
    if isinstance(delta, RemoveOccluder):
        return {"op": "remove", "id": delta.ref}
    if isinstance(delta, MoveOccluderBy):
        return {"op": "move_by", "id": delta.ref, "dx": delta.offset.x, "dy": delta.offset.y}
    if isinstance(delta, EnterGuidanceZone):
        return {"op": "enter_guidance_zone", "side": delta.side.value}
    if isinstance(delta, SetVisibility):
        return {"op": "set_visibility", "value": delta.value}
    raise TypeError(f"unknown delta: {delta!r}")


def _structured_at(data: Mapping) -> Optional[int]:
    if "at" not in data or data["at"] is None:
        return None
    value = data["at"]
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise _structured_error("'at' must be a nonnegative integer tick")
    return value


def parse_structured(data: Any) -> QueryAST:
    """Parse the structured (JSON object) query form into the same ASTs as
    the text grammar."""
    if not isinstance(data, Mapping):
        raise _structured_error(
            "structured query must be an object with a 'type' field",
            hint="types: why, whynot, whatif, confirm, command",
        )
    qtype = data.get("type")
    if qtype == "why":
        _require_fields(data, ["type", "target", "at"], "why query")
        target = data.get("target")
        if target is None:
            return Why(at=_structured_at(data))
        if target not in (ConstraintId.PROXIMITY.value, ConstraintId.VISIBILITY.value):
            raise _structured_error(
                f"why target must be proximity or visibility, got {target!r}"
            )
        return Why(ConstraintId(target), at=_structured_at(data))
    if qtype == "whynot":
        _require_fields(data, ["type", "behavior", "at"], "whynot query")
        behavior = _structured_string(data, "behavior", "whynot query").lower()
        if behavior not in _BEHAVIOR_TOKENS:
            raise _structured_error(
                f"unknown behavior {behavior!r}",
                hint="valid behaviors: continue, slowdown, stop, pause, manual",
            )
        return WhyNot(_BEHAVIOR_TOKENS[behavior], at=_structured_at(data))
    if qtype == "whatif":
        _require_fields(data, ["type", "deltas", "at"], "whatif query")
        raw = data.get("deltas")
        if not isinstance(raw, Sequence) or isinstance(raw, (str, bytes)) or not raw:
            raise _structured_error("whatif requires a non-empty 'deltas' list")
        return WhatIf(tuple(delta_from_dict(d) for d in raw), at=_structured_at(data))
    if qtype == "confirm":
        _require_fields(data, ["type", "referent", "at"], "confirm query")
        return Confirm(_structured_string(data, "referent", "confirm query"), at=_structured_at(data))
    if qtype == "command":
        _require_fields(data, ["type", "behavior", "at"], "command query")
        behavior = _structured_string(data, "behavior", "command query").lower()
        if behavior not in _COMMAND_ALIASES:
            raise _structured_error(
                f"commands are limited to manual_follow and continue, got {behavior!r}"
            )
        return Command(_COMMAND_ALIASES[behavior], at=_structured_at(data))
    raise _structured_error(
        f"unknown query type {qtype!r}",
        hint="types: why, whynot, whatif, confirm, command",
    )


def query_to_dict(ast: QueryAST) -> dict:
    """Structured form of an AST; inverse of parse_structured."""
    out: dict[str, Any]
    if isinstance(ast, Why):
        out = {"type": "why", "target": ast.target.value if ast.target else None}
    elif isinstance(ast, WhyNot):
        out = {"type": "whynot", "behavior": ast.alternative.value}
    elif isinstance(ast, WhatIf):
        out = {"type": "whatif", "deltas": [delta_to_dict(d) for d in ast.deltas]}
    elif isinstance(ast, Confirm):
        out = {"type": "confirm", "referent": ast.referent}
    elif isinstance(ast, Command):
        out = {"type": "command", "behavior": ast.behavior.value}
    else:
        raise TypeError(f"unknown query: {ast!r}")
    if ast.at is not None:
        out["at"] = ast.at
    return out


# --- canonical rendering --------------------------------------------------------


def _num(value: float) -> str:
    return repr(float(value))


def render_delta(delta: StateDelta) -> str:
    if isinstance(delta, SetWorkerPosition):
        return f"worker to {_num(delta.point.x)},{_num(delta.point.y)}"
    if isinstance(delta, MoveWorkerBy):
        if delta.offset is not None:
            return f"worker by {_num(delta.offset.x)},{_num(delta.offset.y)}"
        return f"worker back {_num(delta.away)}"
    if isinstance(delta, SetWorkerDistance):
        return f"worker distance {_num(delta.meters)}"
    if isinstance(delta, RemoveOccluder):
        return f"remove {delta.ref}"
    if isinstance(delta, MoveOccluderBy):
        return f"move {delta.ref} by {_num(delta.offset.x)},{_num(delta.offset.y)}"
    if isinstance(delta, EnterGuidanceZone):
        return f"guide {delta.side.value}"
    if isinstance(delta, SetVisibility):
        return f"visibility {_num(delta.value)}"
    raise TypeError(f"unknown delta: {delta!r}")


def render(ast: QueryAST) -> str:
    """Canonical text for an AST; ``parse(render(a)) == a`` for every AST."""
    if isinstance(ast, Why):
        if ast.target is ConstraintId.PROXIMITY:
            base = "why stop"
        elif ast.target is ConstraintId.VISIBILITY:
            base = "why pause"
        else:
            base = "why"
    elif isinstance(ast, WhyNot):
        base = f"why not {_CANONICAL_BEHAVIOR_TOKEN[ast.alternative]}"
    elif isinstance(ast, WhatIf):
        base = "what if " + " and ".join(render_delta(d) for d in ast.deltas)
    elif isinstance(ast, Confirm):
        base = f"was it {ast.referent}"
    elif isinstance(ast, Command):
        base = "follow" if ast.behavior is Behavior.MANUAL_FOLLOW else "resume"
    else:
        raise TypeError(f"unknown query: {ast!r}")
    if ast.at is not None:
        base += f" at {ast.at}"
    return base
