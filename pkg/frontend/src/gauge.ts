/** Visibility confidence gauge. The number is the server's measurement for
 * the worker, untouched; the band is presentation only (amber = below the
 * configured floor, i.e. the visibility rule is firing). */

import type { SnapshotPayload } from "./types.js";

export interface Gauge {
  /** Confidence in [0, 1], exactly as reported. */
  value: number;
  /** The session's v_min, exactly as reported. */
  floor: number;
  band: "ok" | "amber";
  /** Two-decimal display string, e.g. "0.52". */
  label: string;
}

export function buildGauge(snapshot: SnapshotPayload): Gauge {
  const value = snapshot.env.visibility[snapshot.human.worker_id] ?? 1.0;
  const floor = snapshot.params.v_min;
  return {
    value,
    floor,
    band: value < floor ? "amber" : "ok",
    label: value.toFixed(2),
  };
}
