import json
import threading
import time
from contextlib import contextmanager

import httpx
import pytest
import uvicorn
from fastapi.testclient import TestClient

from whybot.scenario import load_bundled_scenario
from whybot.service import create_app
from whybot.trace import record_check

SCENARIO = {
    "name": "svc",
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

ZONE_SCENARIO = dict(SCENARIO, worker={"id": "worker1", "x": 0.5, "y": -0.5, "speed": 0.0})


@pytest.fixture()
def client():
    return TestClient(create_app())


def create(client, document=SCENARIO):
    response = client.post("/sessions", json={"scenario": document})
    assert response.status_code == 201
    return response.json()["session_id"]


class TestScenarioLibrary:
    def test_listing(self, client):
        names = client.get("/scenarios").json()["scenarios"]
        assert "beam_transport" in names

    def test_document_is_normalized_form(self, client):
        body = client.get("/scenarios/beam_transport").json()
        assert body == load_bundled_scenario("beam_transport").to_dict()

    def test_unknown_scenario(self, client):
        response = client.get("/scenarios/nope")
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "unknown_scenario"


class TestCreateSession:
    def test_create_from_dict(self, client):
        response = client.post("/sessions", json={"scenario": SCENARIO})
        assert response.status_code == 201
        body = response.json()
        assert body["state"]["status"] == "idle"
        assert body["state"]["tick"] == 0
        assert len(body["session_id"]) == 32

    def test_create_from_yaml_text(self, client):
        import yaml

        response = client.post(
            "/sessions", json={"scenario": yaml.safe_dump(SCENARIO)}
        )
        assert response.status_code == 201

    def test_session_ids_are_unique(self, client):
        assert create(client) != create(client)

    def test_invalid_scenario_envelope(self, client):
        bad = dict(SCENARIO)
        bad["params"] = dict(SCENARIO["params"], v_min=2.0)
        response = client.post("/sessions", json={"scenario": bad})
        assert response.status_code == 400
        error = response.json()["error"]
        assert error["code"] == "invalid_scenario"
        assert error["detail_path"] == "params.v_min"
        assert "v_min" in error["message"]


class TestTick:
    def test_tick_returns_records(self, client):
        sid = create(client)
        body = client.post(f"/sessions/{sid}/tick", json={"n": 3}).json()
        assert [r["tick"] for r in body["records"]] == [1, 2, 3]
        assert body["status"] == "running"
        assert body["tick"] == 3

    def test_tick_default_is_one(self, client):
        sid = create(client)
        body = client.post(f"/sessions/{sid}/tick", json={}).json()
        assert len(body["records"]) == 1

    def test_tick_after_finish_is_a_noop(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 30})
        body = client.post(f"/sessions/{sid}/tick", json={"n": 5})
        assert body.status_code == 200
        assert body.json() == {"records": [], "status": "finished", "tick": 30}

    def test_unknown_session(self, client):
        response = client.post("/sessions/nope/tick", json={"n": 1})
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "unknown_session"

    def test_negative_count_rejected(self, client):
        sid = create(client)
        response = client.post(f"/sessions/{sid}/tick", json={"n": -1})
        assert response.status_code == 400


class TestStateAndTrace:
    def test_state_snapshot(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 2})
        state = client.get(f"/sessions/{sid}/state").json()
        assert state["tick"] == 2
        assert state["trace_length"] == 2
        assert state["latest"]["tick"] == 2

    def test_trace_slice_and_checks(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 5})
        body = client.get(f"/sessions/{sid}/trace", params={"from": 2, "to": 4}).json()
        assert [r["tick"] for r in body["records"]] == [2, 3, 4]
        for record in body["records"]:
            assert record["check"] == record_check(record)
        header = body["header"]
        assert header["schema_version"] == 1
        assert header["session_id"] == sid

    def test_full_trace_by_default(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 4})
        body = client.get(f"/sessions/{sid}/trace").json()
        assert len(body["records"]) == 4


class TestAsk:
    def test_text_query(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 3})
        body = client.post(f"/sessions/{sid}/ask", json={"text": "why"}).json()
        explanation = body["explanation"]
        assert explanation["kind"] == "causal"
        assert explanation["text"].startswith("At tick 3:")

    def test_structured_query(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 3})
        body = client.post(
            f"/sessions/{sid}/ask",
            json={"structured": {"type": "whynot", "behavior": "stop"}, "at": 2},
        ).json()
        assert body["explanation"]["text"].startswith("At tick 2:")

    def test_text_and_structured_agree(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 3})
        via_text = client.post(
            f"/sessions/{sid}/ask", json={"text": "whatif worker back 2.0 at 2"}
        ).json()
        via_structured = client.post(
            f"/sessions/{sid}/ask",
            json={
                "structured": {
                    "type": "whatif",
                    "deltas": [{"op": "move_worker_back", "meters": 2.0}],
                    "at": 2,
                }
            },
        ).json()
        assert via_text == via_structured

    def test_exactly_one_form_required(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 1})
        both = client.post(
            f"/sessions/{sid}/ask",
            json={"text": "why", "structured": {"type": "why", "target": None}},
        )
        neither = client.post(f"/sessions/{sid}/ask", json={})
        for response in (both, neither):
            assert response.status_code == 400
            assert response.json()["error"]["code"] == "parse_error"

    def test_parse_error_envelope(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 1})
        response = client.post(f"/sessions/{sid}/ask", json={"text": "why not sprint"})
        assert response.status_code == 400
        error = response.json()["error"]
        assert error["code"] == "parse_error"
        assert "sprint" in error["message"]

    def test_unknown_tick_envelope(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 2})
        response = client.post(f"/sessions/{sid}/ask", json={"text": "why at 9"})
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "unknown_tick"

    def test_invalid_delta_envelope(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 1})
        response = client.post(
            f"/sessions/{sid}/ask", json={"text": "whatif remove ghost"}
        )
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "invalid_delta"

    def test_ask_does_not_tick(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 2})
        client.post(f"/sessions/{sid}/ask", json={"text": "why"})
        assert client.get(f"/sessions/{sid}/state").json()["tick"] == 2


class TestCommand:
    def test_accepted_follow(self, client):
        sid = create(client, ZONE_SCENARIO)
        client.post(f"/sessions/{sid}/tick", json={"n": 2})
        body = client.post(
            f"/sessions/{sid}/command", json={"behavior": "follow"}
        ).json()
        assert body["accepted"] is True
        assert body["tick"] == 3
        assert body["explanation"]["kind"] == "command_ack"

    def test_refused_follow(self, client):
        sid = create(client)  # worker 6 m away
        client.post(f"/sessions/{sid}/tick", json={"n": 2})
        body = client.post(
            f"/sessions/{sid}/command", json={"behavior": "manual_follow"}
        ).json()
        assert body["accepted"] is False
        assert body["explanation"]["kind"] == "refusal"
        # the refusal consumed a tick and is on the trace
        trace = client.get(f"/sessions/{sid}/trace").json()
        assert trace["records"][-1]["tick"] == 3
        assert trace["records"][-1]["nominal"] == "manual_follow"
        assert trace["records"][-1]["selected"] == "stop"

    def test_unknown_behavior(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 1})
        response = client.post(f"/sessions/{sid}/command", json={"behavior": "sprint"})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "parse_error"

    def test_command_after_finish_conflicts(self, client):
        sid = create(client)
        client.post(f"/sessions/{sid}/tick", json={"n": 30})
        response = client.post(f"/sessions/{sid}/command", json={"behavior": "resume"})
        assert response.status_code == 409
        assert response.json()["error"]["code"] == "session_finished"


@contextmanager
def live_server():
    """Real uvicorn on an ephemeral port. The in-process test client cannot
    consume an endless SSE response, so the stream test goes over a socket."""
    config = uvicorn.Config(create_app(), host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        for _ in range(200):
            if server.started:
                break
            time.sleep(0.05)
        else:
            raise RuntimeError("server did not start")
        port = server.servers[0].sockets[0].getsockname()[1]
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=5)


class TestStream:
    def test_events_replay_in_order(self):
        with live_server() as base:
            sid = httpx.post(
                f"{base}/sessions", json={"scenario": SCENARIO}, timeout=10
            ).json()["session_id"]
            httpx.post(f"{base}/sessions/{sid}/tick", json={"n": 2}, timeout=10)
            httpx.post(f"{base}/sessions/{sid}/ask", json={"text": "why"}, timeout=10)

            events = []
            with httpx.stream(
                "GET", f"{base}/sessions/{sid}/stream", timeout=10
            ) as response:
                assert response.status_code == 200
                assert response.headers["content-type"].startswith("text/event-stream")
                buffer = ""
                for chunk in response.iter_text():
                    buffer += chunk
                    while "\n\n" in buffer:
                        block, buffer = buffer.split("\n\n", 1)
                        name = data = None
                        for line in block.splitlines():
                            if line.startswith("event: "):
                                name = line[len("event: ") :]
                            elif line.startswith("data: "):
                                data = json.loads(line[len("data: ") :])
                        events.append((name, data))
                    if len(events) >= 3:
                        break

        assert [name for name, _ in events] == ["decision", "decision", "explanation"]
        assert events[0][1]["tick"] == 1
        assert events[1][1]["tick"] == 2
        assert events[2][1]["kind"] == "causal"

    def test_stream_unknown_session(self, client):
        response = client.get("/sessions/nope/stream")
        assert response.status_code == 404


def test_cors_allows_browser_clients(client):
    response = client.options(
        "/scenarios",
        headers={
            "Origin": "http://localhost:5173",
            "Access-Control-Request-Method": "GET",
        },
    )
    assert response.status_code == 200
    assert response.headers["access-control-allow-origin"] == "*"
