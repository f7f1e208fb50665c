/** Trace timeline: one marker per recorded tick, flagged where constraints
 * were active. Scrubbing asks the server about the historical record; the
 * trace stays the single source of explanatory truth. */

import type {
  Behavior,
  ConstraintId,
  DecisionRecordPayload,
  StructuredQuery,
} from "./types.js";

export interface TimelineMarker {
  tick: number;
  selected: Behavior;
  activeIds: ConstraintId[];
  activated: boolean;
}

export function buildTimeline(records: DecisionRecordPayload[]): TimelineMarker[] {
  return records.map((record) => ({
    tick: record.tick,
    selected: record.selected,
    activeIds: record.active.map((c) => c.id),
    activated: record.active.length > 0,
  }));
}

/** The query a scrub issues: "why" against the selected historical tick. */
export function scrubQuery(tick: number): StructuredQuery {
  return { type: "why", target: null, at: tick };
}
