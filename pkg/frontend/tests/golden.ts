/** Loads the recorded reference episode the backend tests pin, so viewmodel
 * tests run against real server output instead of hand-written payloads. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import type { DecisionRecordPayload, TraceHeaderPayload } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const goldenPath = join(here, "..", "..", "tests", "data", "beam_transport.golden.jsonl");

export interface Golden {
  header: TraceHeaderPayload;
  records: DecisionRecordPayload[];
}

let cached: Golden | null = null;

export function loadGolden(): Golden {
  if (!cached) {
    const lines = readFileSync(goldenPath, "utf8").trim().split("\n");
    cached = {
      header: JSON.parse(lines[0]) as TraceHeaderPayload,
      records: lines.slice(1).map((line) => JSON.parse(line) as DecisionRecordPayload),
    };
  }
  return cached;
}

export function recordAt(tick: number): DecisionRecordPayload {
  const record = loadGolden().records.find((r) => r.tick === tick);
  if (!record) throw new Error(`no record at tick ${tick}`);
  return record;
}

/** The episode's visibility pause. */
export const PAUSE_TICK = 50;
