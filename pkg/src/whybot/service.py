"""HTTP facade over sessions: create, tick, interrogate, command, stream.

The service holds an in-memory session registry. Each endpoint body mirrors
the wire schemas used in trace files and explanations, so a client that can
read a trace can read the API. Errors use one envelope shape:

    {"error": {"code": ..., "message": ..., "detail_path": ...}}

The event stream is server-sent events. Decision events carry
{tick, state, selected, active}; explanation events carry the explanation
wire object. Events are replayed from the session's append-only feed, so a
consumer that connects late still sees everything in order.
"""

from __future__ import annotations

import asyncio
import json
import uuid
from typing import Optional, Union

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .errors import (
    DeltaError,
    QueryError,
    ScenarioError,
    SessionStateError,
    UnknownSessionError,
    UnknownTickError,
)
from .query import parse_structured
from .safety import Behavior
from .scenario import (
    Scenario,
    list_bundled_scenarios,
    load_bundled_scenario,
    parse_scenario_text,
    validate_scenario,
)
from .session import Session
from .trace import record_check

_COMMAND_ALIASES = {
    "manual_follow": Behavior.MANUAL_FOLLOW,
    "manual": Behavior.MANUAL_FOLLOW,
    "follow": Behavior.MANUAL_FOLLOW,
    "continue": Behavior.CONTINUE,
    "resume": Behavior.CONTINUE,
}


class CreateSessionBody(BaseModel):
    scenario: Union[dict, str]


class TickBody(BaseModel):
    n: int = 1


class AskBody(BaseModel):
    text: Optional[str] = None
    structured: Optional[dict] = None
    at: Optional[int] = None


class CommandBody(BaseModel):
    behavior: str


def _error(status: int, code: str, message: str, detail_path: str = "") -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"code": code, "message": message, "detail_path": detail_path}},
    )


def create_app() -> FastAPI:
    app = FastAPI(title="whybot", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    sessions: dict[str, Session] = {}

    def get_session(session_id: str) -> Session:
        try:
            return sessions[session_id]
        except KeyError:
            raise UnknownSessionError(f"no session {session_id!r}") from None

    @app.exception_handler(ScenarioError)
    async def _scenario_error(request: Request, exc: ScenarioError):
        return _error(400, "invalid_scenario", str(exc), exc.path)

    @app.exception_handler(QueryError)
    async def _query_error(request: Request, exc: QueryError):
        return _error(400, "parse_error", str(exc))

    @app.exception_handler(DeltaError)
    async def _delta_error(request: Request, exc: DeltaError):
        return _error(400, "invalid_delta", str(exc))

    @app.exception_handler(UnknownSessionError)
    async def _unknown_session(request: Request, exc: UnknownSessionError):
        return _error(404, "unknown_session", str(exc))

    @app.exception_handler(UnknownTickError)
    async def _unknown_tick(request: Request, exc: UnknownTickError):
        return _error(404, "unknown_tick", str(exc))

    @app.exception_handler(SessionStateError)
    async def _session_state(request: Request, exc: SessionStateError):
        return _error(409, "session_finished", str(exc))

    # --- scenarios (bundled library, read-only) ---------------------------------

    @app.get("/scenarios")
    def scenarios() -> dict:
        return {"scenarios": list_bundled_scenarios()}

    @app.get("/scenarios/{name}")
    def scenario_doc(name: str):
        if name not in list_bundled_scenarios():
            return _error(404, "unknown_scenario", f"no bundled scenario {name!r}")
        return load_bundled_scenario(name).to_dict()

    # --- sessions ----------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        document = body.scenario
        if isinstance(document, str):
            scenario: Scenario = parse_scenario_text(document)
        else:
            scenario = validate_scenario(document)
        session = Session(scenario, session_id=uuid.uuid4().hex)
        sessions[session.session_id] = session
        return {"session_id": session.session_id, "state": session.state_dict()}

    @app.post("/sessions/{session_id}/tick")
    def tick(session_id: str, body: TickBody) -> dict:
        if body.n < 0:
            raise ScenarioError("tick count must be >= 0", "n")
        session = get_session(session_id)
        records = session.run(body.n)
        return {
            "records": [r.to_dict() for r in records],
            "status": session.status.value,
            "tick": session.world.tick,
        }

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str) -> dict:
        return get_session(session_id).state_dict()

    @app.get("/sessions/{session_id}/trace")
    def trace(
        session_id: str,
        start: Optional[int] = Query(default=None, alias="from"),
        end: Optional[int] = Query(default=None, alias="to"),
    ) -> dict:
        session = get_session(session_id)
        records = []
        for record in session.trace.slice(start, end):
            body = record.to_dict()
            body["check"] = record_check(body)
            records.append(body)
        return {"header": session.trace.header_dict(), "records": records}

    @app.post("/sessions/{session_id}/ask")
    def ask(session_id: str, body: AskBody) -> dict:
        session = get_session(session_id)
        if (body.text is None) == (body.structured is None):
            raise QueryError("provide exactly one of 'text' or 'structured'")
        if body.text is not None:
            query = body.text
        else:
            query = parse_structured(body.structured)
        explanation = session.ask(query, at=body.at)
        return {"explanation": explanation.to_dict()}

    @app.post("/sessions/{session_id}/command")
    def command(session_id: str, body: CommandBody) -> dict:
        session = get_session(session_id)
        token = body.behavior.strip().lower()
        behavior = _COMMAND_ALIASES.get(token)
        if behavior is None:
            raise QueryError(
                f"unknown command behavior {body.behavior!r}",
                hint="accepted: manual_follow, manual, follow, continue, resume",
            )
        accepted, explanation = session.command(behavior)
        return {
            "accepted": accepted,
            "tick": session.world.tick,
            "explanation": explanation.to_dict(),
        }

    @app.get("/sessions/{session_id}/stream")
    async def stream(session_id: str) -> StreamingResponse:
        session = get_session(session_id)

        async def feed():
            index = 0
            while True:
                events = session.events
                while index < len(events):
                    name, payload = events[index]
                    index += 1
                    yield f"event: {name}\ndata: {json.dumps(payload)}\n\n"
                await asyncio.sleep(0.05)

        return StreamingResponse(
            feed(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    return app


#: Default application instance for `uvicorn whybot.service:app`.
app = create_app()
