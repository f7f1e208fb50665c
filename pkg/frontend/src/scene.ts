/** Pure scene construction: a decision record (or bare snapshot) in, a draw
 * list out. No DOM, no canvas, no math on safety values; radii and
 * measurements are the server's numbers verbatim, so what the canvas shows
 * is exactly what the monitor saw. */

import type {
  ActiveConstraintPayload,
  ConstraintId,
  Shape,
  SnapshotPayload,
} from "./types.js";

export interface SceneMarker {
  x: number;
  y: number;
  heading?: number;
  label: string;
}

export interface SceneCircle {
  cx: number;
  cy: number;
  radius: number;
  dashed: boolean;
  highlighted: boolean;
}

export interface SceneHalfDisc {
  cx: number;
  cy: number;
  radius: number;
  /** Radians; the half-disc spans [startAngle, startAngle + PI]. */
  startAngle: number;
  side: "left" | "right";
  highlighted: boolean;
}

export interface SceneOccluder {
  id: string;
  kind: string;
  shape: Shape;
  /** True when blame attribution names this occluder. */
  attributed: boolean;
}

export interface Scene {
  robot: SceneMarker & { mode: string };
  worker: SceneMarker;
  dMinCircle: SceneCircle;
  guidanceZone: SceneHalfDisc;
  occluders: SceneOccluder[];
  ghost: { x: number; y: number } | null;
  activeIds: ConstraintId[];
}

export interface SceneOptions {
  /** Occluder ids named by the current explanation's attribution. */
  attribution?: string[];
  /** Constraint ids cited by the current explanation; cited constraints get
   * their envelope highlighted (proximity -> d_min circle, guidance_zone ->
   * half-disc). */
  cited?: ConstraintId[];
  /** Pending what-if worker position, drawn as a ghost. */
  ghost?: { x: number; y: number } | null;
  active?: ActiveConstraintPayload[];
}

export function buildScene(snapshot: SnapshotPayload, options: SceneOptions = {}): Scene {
  const cited = new Set(options.cited ?? []);
  const attributed = new Set(options.attribution ?? []);
  const [rx, ry] = snapshot.robot.position;
  const [wx, wy] = snapshot.human.position;
  const zone = snapshot.params.guidance_zone;

  // The half-disc hugs the heading: right side sweeps heading-PI..heading,
  // left side heading..heading+PI.
  const startAngle =
    zone.side === "right" ? snapshot.robot.heading - Math.PI : snapshot.robot.heading;

  return {
    robot: {
      x: rx,
      y: ry,
      heading: snapshot.robot.heading,
      label: "robot",
      mode: snapshot.robot.mode,
    },
    worker: { x: wx, y: wy, label: snapshot.human.worker_id },
    dMinCircle: {
      cx: rx,
      cy: ry,
      radius: snapshot.params.d_min,
      dashed: true,
      highlighted: cited.has("proximity"),
    },
    guidanceZone: {
      cx: rx,
      cy: ry,
      radius: zone.max_distance,
      startAngle,
      side: zone.side,
      highlighted: cited.has("guidance_zone"),
    },
    occluders: snapshot.env.occluders.map((occluder) => ({
      id: occluder.occluder_id,
      kind: occluder.kind,
      shape: occluder.shape,
      attributed: attributed.has(occluder.occluder_id),
    })),
    ghost: options.ghost ?? null,
    activeIds: (options.active ?? []).map((c) => c.id),
  };
}
