/** Wire types for the whybot HTTP API. Field names mirror the server JSON
 * exactly; the console renders these values and never recomputes them. */

export type Behavior =
  | "continue"
  | "slow_down"
  | "stop"
  | "pause"
  | "manual_follow";

export type ConstraintId = "proximity" | "visibility" | "guidance_zone";

export type Side = "left" | "right";

export interface DiscShape {
  type: "disc";
  center: [number, number];
  radius: number;
}

export interface PolygonShape {
  type: "polygon";
  points: [number, number][];
}

export type Shape = DiscShape | PolygonShape;

export interface OccluderPayload {
  occluder_id: string;
  kind: string;
  shape: Shape;
  velocity: [number, number];
}

export interface HumanPayload {
  worker_id: string;
  position: [number, number];
  velocity: [number, number];
  role: string;
}

export interface RobotPayload {
  position: [number, number];
  heading: number;
  speed: number;
  load: string;
  mode: Behavior;
}

export interface EnvPayload {
  occluders: OccluderPayload[];
  visibility: Record<string, number>;
}

export interface GuidanceZonePayload {
  side: Side;
  max_distance: number;
}

export interface ParamsPayload {
  d_min: number;
  v_min: number;
  guidance_zone: GuidanceZonePayload;
  rule_priorities: ConstraintId[];
}

export interface SnapshotPayload {
  tick: number;
  human: HumanPayload;
  robot: RobotPayload;
  env: EnvPayload;
  params: ParamsPayload;
}

export interface ActiveConstraintPayload {
  id: ConstraintId;
  measured: number;
  threshold: number;
  margin: number;
  subjects: string[];
}

export interface DecisionRecordPayload {
  tick: number;
  state: SnapshotPayload;
  nominal: Behavior;
  selected: Behavior;
  active: ActiveConstraintPayload[];
  check?: string;
}

export interface VerdictPayload {
  behavior: Behavior;
  active: ActiveConstraintPayload[];
}

export type DeltaPayload = Record<string, unknown> & { op: string };

export interface ExplanationPayload {
  kind: string;
  cited: ActiveConstraintPayload[];
  attribution: string[];
  verdict: VerdictPayload | null;
  enabling_condition: DeltaPayload[] | null;
  text: string;
}

export interface SessionStatePayload {
  session_id: string;
  scenario: string;
  status: "running" | "paused_by_user" | "finished";
  tick: number;
  horizon: number;
  tick_duration: number;
  params: ParamsPayload;
  params_hash: string;
  trace_length: number;
  latest: DecisionRecordPayload | null;
}

export interface TraceHeaderPayload {
  session_id: string;
  params: ParamsPayload;
  params_hash: string;
  schema_version: number;
}

export interface TracePayload {
  header: TraceHeaderPayload;
  records: DecisionRecordPayload[];
}

export interface TickResponse {
  records: DecisionRecordPayload[];
  status: SessionStatePayload["status"];
  tick: number;
}

export interface CommandResponse {
  accepted: boolean;
  tick: number;
  explanation: ExplanationPayload;
}

export interface ErrorEnvelope {
  error: {
    code: string;
    message: string;
    detail_path: string | null;
  };
}

/** Structured query trees, as POST /ask accepts them. */
export type StructuredQuery =
  | { type: "why"; target: "proximity" | "visibility" | null; at?: number }
  | { type: "whynot"; behavior: string; at?: number }
  | { type: "whatif"; deltas: DeltaPayload[]; at?: number }
  | { type: "confirm"; referent: string; at?: number }
  | { type: "command"; behavior: string; at?: number };
