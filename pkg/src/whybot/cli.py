"""Command line interface: run scenarios, interrogate and replay traces.

Four subcommands, all engine-embedded (no service required):

    whybot run      --scenario F [--ticks N] [--trace OUT] [--json]
    whybot ask      --trace F --query Q [--at T] [--json]
    whybot replay   --trace F [--verify]
    whybot validate --scenario F

Exit codes: 0 success, 1 validation error (bad scenario, bad query, unknown
tick, failed verification), 2 runtime error (unreadable or tampered trace
envelope). Identical invocations on identical inputs produce byte-identical
stdout and trace files; there is no wall-clock or randomness anywhere in the
pipeline.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import (
    QueryError,
    ScenarioError,
    TraceError,
    UnknownTickError,
)
from .explain import explain
from .query import parse
from .safety import DecisionRecord, distance
from .scenario import (
    Scenario,
    list_bundled_scenarios,
    load_bundled_scenario,
    load_scenario,
)
from .session import Session
from .trace import Trace, replay_verify


def _load_scenario_arg(value: str) -> Scenario:
    """Scenario from a file path, or from the bundled library by name."""
    path = Path(value)
    if path.exists():
        return load_scenario(path)
    if value in list_bundled_scenarios():
        return load_bundled_scenario(value)
    raise ScenarioError(f"no such scenario file, and no bundled scenario named {value!r}")


def record_line(record: DecisionRecord) -> str:
    """One-line tick summary. The format is frozen; tests golden-match it."""
    d = distance(record.state.human, record.state.robot)
    v = record.state.env.visibility_of(record.state.human.worker_id)
    active = ",".join(c.id.value for c in record.active) or "-"
    return (
        f"tick {record.tick:4d} d={d:.2f} v={v:.2f} "
        f"active={active} selected={record.selected.value}"
    )


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = _load_scenario_arg(args.scenario)
    session = Session(scenario)
    ticks = args.ticks if args.ticks is not None else scenario.horizon
    records = session.run(ticks)
    for record in records:
        if args.json:
            print(json.dumps(record.to_dict(), sort_keys=True))
        else:
            print(record_line(record))
    if args.trace:
        session.trace.write_file(args.trace)
    return 0


def _cmd_ask(args: argparse.Namespace) -> int:
    trace = Trace.read_file(args.trace)
    ast = parse(args.query)
    tick = ast.at if ast.at is not None else args.at
    if tick is not None:
        record = trace.get_at(tick)
    else:
        record = trace.latest()
        if record is None:
            raise UnknownTickError("trace contains no records")
    explanation, _ = explain(record, ast)
    if args.json:
        print(json.dumps(explanation.to_dict(), sort_keys=True))
    else:
        print(explanation.text)
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    text = Path(args.trace).read_text(encoding="utf-8")
    if not args.verify:
        for record in Trace.deserialize(text).records:
            print(record_line(record))
        return 0
    results = replay_verify(text)
    failures = 0
    for result in results:
        if result.ok:
            print(f"tick {result.tick:4d} PASS")
        else:
            failures += 1
            print(f"tick {result.tick:4d} FAIL {result.reason}")
    if failures:
        print(f"replay: {len(results)} records, {failures} FAIL")
        return 1
    print(f"replay: {len(results)} records, all PASS")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    scenario = _load_scenario_arg(args.scenario)
    print(json.dumps(scenario.to_dict(), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="whybot",
        description="Run, interrogate, and verify safety decision traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and record its trace")
    run.add_argument("--scenario", required=True, help="scenario file or bundled name")
    run.add_argument("--ticks", type=int, default=None, help="tick count (default: horizon)")
    run.add_argument("--trace", default=None, help="write the trace to this file")
    run.add_argument("--json", action="store_true", help="print records as JSON lines")
    run.set_defaults(func=_cmd_run)

    ask = sub.add_parser("ask", help="answer a query against a recorded trace")
    ask.add_argument("--trace", required=True, help="trace file to interrogate")
    ask.add_argument("--query", required=True, help="query text, e.g. 'why' or 'what if worker back 1.0'")
    ask.add_argument("--at", type=int, default=None, help="tick to interrogate (default: latest)")
    ask.add_argument("--json", action="store_true", help="print the structured explanation")
    ask.set_defaults(func=_cmd_ask)

    replay = sub.add_parser("replay", help="view a trace, or re-derive and verify it")
    replay.add_argument("--trace", required=True, help="trace file to replay")
    replay.add_argument(
        "--verify",
        action="store_true",
        help="recompute every record and report PASS/FAIL per tick",
    )
    replay.set_defaults(func=_cmd_replay)

    validate = sub.add_parser("validate", help="check a scenario file and print it normalized")
    validate.add_argument("--scenario", required=True, help="scenario file or bundled name")
    validate.set_defaults(func=_cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, QueryError, UnknownTickError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
