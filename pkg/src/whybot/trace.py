"""Append-only decision traces with tamper-evident persistence.

File format (JSON Lines, schema_version 1):
  * line 1: header object {session_id, params, params_hash, schema_version}
  * every further line: one decision record {tick, state, nominal, selected,
    active, check}

``params_hash`` is the SHA-256 hex digest of the canonical JSON serialization
of the safety parameters (sorted keys, no whitespace); ``check`` is the same
digest computed over the record object without its ``check`` key. Floats are
serialized with full round-trip precision. Together these make a trace
self-certifying: replay re-derives every record from its stored state and any
single-field edit breaks either the re-derivation, the record checksum, or the
parameter envelope.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import EnvelopeViolation, TickOrderError, TraceFormatError, UnknownTickError
from .safety import (
    DecisionRecord,
    SafetyParams,
    evaluate_constraints,
    params_hash,
    select_behavior,
)

SCHEMA_VERSION = 1


def _canonical(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def record_check(record_dict: dict) -> str:
    """Integrity checksum over a record's wire form, excluding ``check``."""
    body = {k: v for k, v in record_dict.items() if k != "check"}
    return hashlib.sha256(_canonical(body).encode("utf-8")).hexdigest()


@dataclass
class Trace:
    """In-memory decision trace for one session.

    Append-only: records only ever accumulate, with strictly increasing
    ticks, and every record must carry the session's exact safety parameters.
    """

    session_id: str
    params: SafetyParams
    records: list[DecisionRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._params_hash = params_hash(self.params)

    @property
    def envelope_hash(self) -> str:
        return self._params_hash

    def append(self, record: DecisionRecord) -> "Trace":
        if self.records and record.tick <= self.records[-1].tick:
            raise TickOrderError(
                f"tick {record.tick} does not advance past {self.records[-1].tick}"
            )
        if params_hash(record.state.params) != self._params_hash:
            raise EnvelopeViolation(
                f"record at tick {record.tick} carries different safety parameters"
            )
        self.records.append(record)
        return self

    def latest(self) -> Optional[DecisionRecord]:
        return self.records[-1] if self.records else None

    def get_at(self, tick: int) -> DecisionRecord:
        lo, hi = 0, len(self.records) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            rec = self.records[mid]
            if rec.tick == tick:
                return rec
            if rec.tick < tick:
                lo = mid + 1
            else:
                hi = mid - 1
        nearest = self._nearest_ticks(tick)
        raise UnknownTickError(
            f"no decision recorded at tick {tick}"
            + (f"; nearest recorded ticks: {nearest}" if nearest else "; trace is empty")
        )

    def _nearest_ticks(self, tick: int) -> list[int]:
        below = max((r.tick for r in self.records if r.tick < tick), default=None)
        above = min((r.tick for r in self.records if r.tick > tick), default=None)
        return [t for t in (below, above) if t is not None]

    def slice(self, start: Optional[int] = None, end: Optional[int] = None) -> list[DecisionRecord]:
        """Records with start <= tick <= end."""
        out = []
        for rec in self.records:
            if start is not None and rec.tick < start:
                continue
            if end is not None and rec.tick > end:
                break
            out.append(rec)
        return out

    def header_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "params": self.params.to_dict(),
            "params_hash": self._params_hash,
            "schema_version": SCHEMA_VERSION,
        }

    def serialize(self) -> str:
        lines = [json.dumps(self.header_dict(), sort_keys=True)]
        for record in self.records:
            body = record.to_dict()
            body["check"] = record_check(body)
            lines.append(json.dumps(body, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def deserialize(cls, text: str) -> "Trace":
        header, raw_records = _parse_lines(text)
        trace = cls(
            session_id=str(header["session_id"]),
            params=_header_params(header),
        )
        if trace.envelope_hash != header["params_hash"]:
            raise EnvelopeViolation(
                "header params_hash does not match the stored parameters"
            )
        for line_no, body in raw_records:
            try:
                record = DecisionRecord.from_dict(body)
            except (KeyError, ValueError, TypeError) as exc:
                raise TraceFormatError(f"malformed record: {exc}", line=line_no) from exc
            trace.append(record)
        return trace

    def write_file(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.serialize(), encoding="utf-8", newline="\n")

    @classmethod
    def read_file(cls, path: Union[str, Path]) -> "Trace":
        return cls.deserialize(Path(path).read_text(encoding="utf-8"))


def _parse_lines(text: str) -> tuple[dict, list[tuple[int, dict]]]:
    lines = text.splitlines()
    if not lines:
        raise TraceFormatError("empty trace file", line=1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"header is not valid JSON: {exc}", line=1) from exc
    if not isinstance(header, dict):
        raise TraceFormatError("header must be a JSON object", line=1)
    for key in ("session_id", "params", "params_hash", "schema_version"):
        if key not in header:
            raise TraceFormatError(f"header missing {key!r}", line=1)
    if header["schema_version"] != SCHEMA_VERSION:
        raise TraceFormatError(
            f"unsupported schema_version {header['schema_version']!r}; "
            f"this build reads version {SCHEMA_VERSION}",
            line=1,
        )
    records: list[tuple[int, dict]] = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            body = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"record is not valid JSON: {exc}", line=i) from exc
        if not isinstance(body, dict):
            raise TraceFormatError("record must be a JSON object", line=i)
        records.append((i, body))
    return header, records


def _header_params(header: dict) -> SafetyParams:
    """Header params that fail validation mean a tampered envelope, which is
    a trace-format problem, not a caller bug."""
    try:
        return SafetyParams.from_dict(header["params"])
    except (KeyError, ValueError, TypeError) as exc:
        raise TraceFormatError(f"header params invalid: {exc}", line=1) from exc


@dataclass(frozen=True)
class ReplayResult:
    tick: int
    ok: bool
    reason: str = ""


def replay_verify(text: str) -> list[ReplayResult]:
    """Re-derive every record in a serialized trace.

    For each record: the stored checksum must match, re-running constraint
    evaluation on the stored state must reproduce ``active``, re-running
    arbitration must reproduce ``selected``, and the embedded parameters must
    match the session envelope. Raises EnvelopeViolation if the header itself
    is inconsistent.
    """
    header, raw_records = _parse_lines(text)
    expected_params = _header_params(header)
    if params_hash(expected_params) != header["params_hash"]:
        raise EnvelopeViolation("header params_hash does not match the stored parameters")

    results: list[ReplayResult] = []
    for line_no, body in raw_records:
        tick = body.get("tick", -1)
        stored_check = body.get("check")
        if stored_check != record_check(body):
            results.append(ReplayResult(tick, False, "checksum mismatch"))
            continue
        try:
            record = DecisionRecord.from_dict(body)
        except (KeyError, ValueError, TypeError) as exc:
            results.append(ReplayResult(tick, False, f"malformed record: {exc}"))
            continue
        if params_hash(record.state.params) != header["params_hash"]:
            results.append(ReplayResult(record.tick, False, "parameter envelope mismatch"))
            continue
        derived_active = evaluate_constraints(record.state)
        if derived_active != record.active:
            results.append(ReplayResult(record.tick, False, "active constraints do not re-derive"))
            continue
        derived = select_behavior(
            derived_active,
            record.nominal,
            record.state.params.rule_priorities,
            mode=record.state.robot.mode,
        )
        if derived is not record.selected:
            results.append(
                ReplayResult(
                    record.tick,
                    False,
                    f"selected behavior does not re-derive "
                    f"(stored {record.selected.value}, derived {derived.value})",
                )
            )
            continue
        results.append(ReplayResult(record.tick, True))
    return results
