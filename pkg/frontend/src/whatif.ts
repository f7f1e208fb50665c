/** Ghost-drag what-ifs. Dragging the ghost worker compiles to the same
 * structured query the chat form would produce, so there is exactly one
 * evaluation path; a debounce keeps a drag from flooding the server. Asking
 * never advances the simulation, so no amount of dragging touches the trace. */

import type {
  Behavior,
  ConstraintId,
  ExplanationPayload,
  StructuredQuery,
} from "./types.js";

export function ghostQuery(x: number, y: number, at?: number): StructuredQuery {
  const query: StructuredQuery = {
    type: "whatif",
    deltas: [{ op: "set_worker_position", x, y }],
  };
  if (at !== undefined) query.at = at;
  return query;
}

export interface WhatIfOverlay {
  behavior: Behavior;
  activeIds: ConstraintId[];
  text: string;
}

export function overlayFromExplanation(
  explanation: ExplanationPayload,
): WhatIfOverlay | null {
  if (!explanation.verdict) return null;
  return {
    behavior: explanation.verdict.behavior,
    activeIds: explanation.verdict.active.map((c) => c.id),
    text: explanation.text,
  };
}

export type Debounced<A extends unknown[]> = ((...args: A) => void) & {
  cancel: () => void;
};

/** Trailing-edge debounce. Only the last call within the window fires. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  delayMs: number,
): Debounced<A> {
  let handle: ReturnType<typeof setTimeout> | null = null;
  const wrapped = (...args: A) => {
    if (handle !== null) clearTimeout(handle);
    handle = setTimeout(() => {
      handle = null;
      fn(...args);
    }, delayMs);
  };
  wrapped.cancel = () => {
    if (handle !== null) clearTimeout(handle);
    handle = null;
  };
  return wrapped;
}
