import json

import pytest

from whybot.cli import main, record_line
from whybot.safety import Behavior
from whybot.trace import Trace


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def golden_file(tmp_path, golden_trace_text):
    path = tmp_path / "golden.jsonl"
    path.write_text(golden_trace_text, encoding="utf-8")
    return path


class TestRun:
    def test_run_prints_one_line_per_tick(self, capsys):
        code, out, err = run_cli(
            capsys, "run", "--scenario", "beam_transport", "--ticks", "3"
        )
        assert code == 0
        assert err == ""
        lines = out.splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("tick    1 d=")
        for line in lines:
            assert "active=" in line and "selected=" in line

    def test_run_matches_record_line_format(self, capsys, golden_trace_text):
        code, out, _ = run_cli(capsys, "run", "--scenario", "beam_transport")
        assert code == 0
        expected = [record_line(r) for r in Trace.deserialize(golden_trace_text).records]
        assert out.splitlines() == expected

    def test_run_json_lines(self, capsys):
        code, out, _ = run_cli(
            capsys, "run", "--scenario", "beam_transport", "--ticks", "2", "--json"
        )
        assert code == 0
        rows = [json.loads(line) for line in out.splitlines()]
        assert [row["tick"] for row in rows] == [1, 2]
        for line, row in zip(out.splitlines(), rows):
            assert line == json.dumps(row, sort_keys=True)

    def test_run_writes_trace_file(self, capsys, tmp_path, golden_trace_text):
        out_path = tmp_path / "out.jsonl"
        code, _, _ = run_cli(
            capsys, "run", "--scenario", "beam_transport", "--trace", str(out_path)
        )
        assert code == 0
        assert out_path.read_text(encoding="utf-8") == golden_trace_text

    def test_run_from_scenario_file(self, capsys, tmp_path, bundled_scenario):
        path = tmp_path / "scn.yaml"
        import yaml

        path.write_text(yaml.safe_dump(bundled_scenario.to_dict()), encoding="utf-8")
        code, out, _ = run_cli(capsys, "run", "--scenario", str(path), "--ticks", "2")
        assert code == 0
        assert len(out.splitlines()) == 2

    def test_run_unknown_scenario(self, capsys):
        code, out, err = run_cli(capsys, "run", "--scenario", "no_such_thing")
        assert code == 1
        assert out == ""
        assert err.startswith("error: ")
        assert "no_such_thing" in err

    def test_run_is_deterministic(self, capsys):
        _, first, _ = run_cli(capsys, "run", "--scenario", "beam_transport")
        _, second, _ = run_cli(capsys, "run", "--scenario", "beam_transport")
        assert first == second


class TestAsk:
    def test_ask_why_at_pause(self, capsys, golden_file):
        code, out, err = run_cli(
            capsys, "ask", "--trace", str(golden_file), "--query", "why", "--at", "50"
        )
        assert code == 0
        assert err == ""
        assert out.startswith("At tick 50: I am pausing because")
        assert "forklift1" in out

    def test_ask_at_clause_beats_flag(self, capsys, golden_file):
        code, out, _ = run_cli(
            capsys, "ask", "--trace", str(golden_file), "--query", "why at 50", "--at", "10"
        )
        assert code == 0
        assert out.startswith("At tick 50:")

    def test_ask_defaults_to_latest(self, capsys, golden_file, golden_trace_text):
        last_tick = Trace.deserialize(golden_trace_text).records[-1].tick
        code, out, _ = run_cli(capsys, "ask", "--trace", str(golden_file), "--query", "why")
        assert code == 0
        assert out.startswith(f"At tick {last_tick}:")

    def test_ask_json(self, capsys, golden_file):
        code, out, _ = run_cli(
            capsys,
            "ask",
            "--trace",
            str(golden_file),
            "--query",
            "whatif guide right at 50",
            "--json",
        )
        assert code == 0
        payload = json.loads(out)
        assert out.strip() == json.dumps(payload, sort_keys=True)
        assert payload["verdict"]["behavior"] == Behavior.MANUAL_FOLLOW.value

    def test_ask_bad_query(self, capsys, golden_file):
        code, out, err = run_cli(
            capsys, "ask", "--trace", str(golden_file), "--query", "why sprint"
        )
        assert code == 1
        assert out == ""
        assert err.startswith("error: ")

    def test_ask_unknown_tick(self, capsys, golden_file):
        code, _, err = run_cli(
            capsys, "ask", "--trace", str(golden_file), "--query", "why", "--at", "999"
        )
        assert code == 1
        assert "999" in err

    def test_ask_empty_trace(self, capsys, tmp_path):
        out_path = tmp_path / "empty.jsonl"
        run_cli(
            capsys,
            "run",
            "--scenario",
            "beam_transport",
            "--ticks",
            "0",
            "--trace",
            str(out_path),
        )
        code, _, err = run_cli(capsys, "ask", "--trace", str(out_path), "--query", "why")
        assert code == 1
        assert "no records" in err

    def test_ask_missing_file(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "ask", "--trace", str(tmp_path / "nope.jsonl"), "--query", "why"
        )
        assert code == 1
        assert err.startswith("error: ")


class TestReplay:
    def test_view_mode_prints_record_lines(self, capsys, golden_file, golden_trace_text):
        code, out, _ = run_cli(capsys, "replay", "--trace", str(golden_file))
        assert code == 0
        expected = [record_line(r) for r in Trace.deserialize(golden_trace_text).records]
        assert out.splitlines() == expected

    def test_verify_all_pass(self, capsys, golden_file, golden_trace_text):
        total = len(Trace.deserialize(golden_trace_text).records)
        code, out, _ = run_cli(capsys, "replay", "--trace", str(golden_file), "--verify")
        assert code == 0
        lines = out.splitlines()
        assert lines[-1] == f"replay: {total} records, all PASS"
        assert len(lines) == total + 1
        assert all(line.endswith("PASS") for line in lines[:-1])
        assert lines[0] == "tick    1 PASS"

    def test_verify_tampered_record_fails(self, capsys, tmp_path, golden_trace_text):
        lines = golden_trace_text.splitlines()
        row = json.loads(lines[3])
        row["state"]["human"]["position"][0] += 0.25
        lines[3] = json.dumps(row, sort_keys=True, separators=(",", ":"))
        bad = tmp_path / "tampered.jsonl"
        bad.write_text("\n".join(lines) + "\n", encoding="utf-8")

        code, out, _ = run_cli(capsys, "replay", "--trace", str(bad), "--verify")
        assert code == 1
        out_lines = out.splitlines()
        tick = row["tick"]
        assert f"tick {tick:4d} FAIL" in out_lines[tick - 1]
        assert "checksum mismatch" in out_lines[tick - 1]
        assert out_lines[-1].endswith("1 FAIL")

    def test_verify_tampered_envelope_exits_two(self, capsys, tmp_path, golden_trace_text):
        lines = golden_trace_text.splitlines()
        header = json.loads(lines[0])
        header["params"]["d_min"] = 0.1
        lines[0] = json.dumps(header, sort_keys=True, separators=(",", ":"))
        bad = tmp_path / "badheader.jsonl"
        bad.write_text("\n".join(lines) + "\n", encoding="utf-8")

        code, out, err = run_cli(capsys, "replay", "--trace", str(bad), "--verify")
        assert code == 2
        assert err.startswith("error: ")

    def test_replay_garbage_file_exits_two(self, capsys, tmp_path):
        bad = tmp_path / "garbage.jsonl"
        bad.write_text("not a trace\n", encoding="utf-8")
        code, _, err = run_cli(capsys, "replay", "--trace", str(bad))
        assert code == 2
        assert err.startswith("error: ")


class TestValidate:
    def test_validate_prints_normalized_document(self, capsys, bundled_scenario):
        code, out, _ = run_cli(capsys, "validate", "--scenario", "beam_transport")
        assert code == 0
        assert out.strip() == json.dumps(bundled_scenario.to_dict(), indent=2, sort_keys=True)

    def test_validate_rejects_bad_document(self, capsys, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("name: x\n", encoding="utf-8")
        code, out, err = run_cli(capsys, "validate", "--scenario", str(path))
        assert code == 1
        assert out == ""
        assert err.startswith("error: ")
