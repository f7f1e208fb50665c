/** Chat transcript logic, kept pure so the dialogue flow is testable
 * without a DOM. Every robot turn's text is the server's Explanation.text
 * verbatim; the console never rewrites or recomputes a verdict. */

import type {
  Behavior,
  ConstraintId,
  DeltaPayload,
  ExplanationPayload,
} from "./types.js";

export interface EnablingChip {
  label: string;
  deltas: DeltaPayload[];
}

export interface TranscriptTurn {
  who: "user" | "robot";
  text: string;
  error: boolean;
  citedIds: ConstraintId[];
  attribution: string[];
  verdict: Behavior | null;
  chip: EnablingChip | null;
}

export type InputRoute = { kind: "noop" } | { kind: "ask"; text: string };

/** Empty or whitespace input is a no-op; everything else goes to /ask. */
export function routeInput(raw: string): InputRoute {
  const text = raw.trim();
  if (text === "") return { kind: "noop" };
  return { kind: "ask", text };
}

export function userTurn(text: string): TranscriptTurn {
  return {
    who: "user",
    text,
    error: false,
    citedIds: [],
    attribution: [],
    verdict: null,
    chip: null,
  };
}

export function describeDelta(delta: DeltaPayload): string {
  switch (delta.op) {
    case "enter_guidance_zone":
      return `Guide ${delta.side}`;
    case "move_worker_back":
      return `Step back ${delta.meters} m`;
    case "move_worker_by":
      return `Move worker by (${delta.dx}, ${delta.dy})`;
    case "set_worker_distance":
      return `Stand at ${delta.meters} m`;
    case "set_worker_position":
      return `Move worker to (${delta.x}, ${delta.y})`;
    case "remove":
      return `Remove ${delta.id}`;
    case "move_by":
      return `Move ${delta.id} by (${delta.dx}, ${delta.dy})`;
    case "set_visibility":
      return `Visibility ${delta.value}`;
    default:
      return delta.op;
  }
}

function chipFrom(explanation: ExplanationPayload): EnablingChip | null {
  const deltas = explanation.enabling_condition;
  if (!deltas || deltas.length === 0) return null;
  const label = `${deltas.map(describeDelta).join(" + ")} - apply?`;
  return { label, deltas };
}

export function robotTurn(explanation: ExplanationPayload): TranscriptTurn {
  return {
    who: "robot",
    text: explanation.text,
    error: false,
    citedIds: explanation.cited.map((c) => c.id),
    attribution: explanation.attribution,
    verdict: explanation.verdict ? explanation.verdict.behavior : null,
    chip: chipFrom(explanation),
  };
}

/** Server diagnostics (parse errors with position and accepted-forms hint)
 * render inline as a robot-side error turn. */
export function errorTurn(message: string): TranscriptTurn {
  return {
    who: "robot",
    text: message,
    error: true,
    citedIds: [],
    attribution: [],
    verdict: null,
    chip: null,
  };
}
