/** Browser bootstrap: canvas rendering, event stream subscription, and DOM
 * wiring. All decision logic lives on the server; everything pure enough to
 * unit test lives in the sibling modules. */

import { ApiError, Client } from "./api.js";
import {
  errorTurn,
  robotTurn,
  routeInput,
  userTurn,
  type TranscriptTurn,
} from "./chat.js";
import { buildGauge } from "./gauge.js";
import { buildScene, type Scene } from "./scene.js";
import { buildTimeline, scrubQuery, type TimelineMarker } from "./timeline.js";
import { debounce, ghostQuery, overlayFromExplanation, type WhatIfOverlay } from "./whatif.js";
import type {
  ConstraintId,
  DecisionRecordPayload,
  ExplanationPayload,
  SessionStatePayload,
} from "./types.js";

const params = new URLSearchParams(location.search);
const apiBase = params.get("api") ?? "";
const scenarioName = params.get("scenario") ?? "beam_transport";
const client = new Client(apiBase);

interface UiState {
  sessionId: string;
  session: SessionStatePayload | null;
  latest: DecisionRecordPayload | null;
  markers: TimelineMarker[];
  transcript: TranscriptTurn[];
  citedIds: ConstraintId[];
  attribution: string[];
  ghost: { x: number; y: number } | null;
  overlay: WhatIfOverlay | null;
  banner: string | null;
  running: boolean;
}

const ui: UiState = {
  sessionId: "",
  session: null,
  latest: null,
  markers: [],
  transcript: [],
  citedIds: [],
  attribution: [],
  ghost: null,
  overlay: null,
  banner: null,
  running: false,
};

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const canvas = $<HTMLCanvasElement>("workspace");
const ctx = canvas.getContext("2d")!;

// World viewport; the bundled floor fits comfortably.
const VIEW = { xmin: -1.5, xmax: 7.5, ymin: -4.5, ymax: 4.5 };

function toScreen(x: number, y: number): [number, number] {
  const sx = ((x - VIEW.xmin) / (VIEW.xmax - VIEW.xmin)) * canvas.width;
  const sy = canvas.height - ((y - VIEW.ymin) / (VIEW.ymax - VIEW.ymin)) * canvas.height;
  return [sx, sy];
}

function toWorld(sx: number, sy: number): [number, number] {
  const x = VIEW.xmin + (sx / canvas.width) * (VIEW.xmax - VIEW.xmin);
  const y = VIEW.ymin + ((canvas.height - sy) / canvas.height) * (VIEW.ymax - VIEW.ymin);
  return [x, y];
}

const SCALE = canvas.width / (VIEW.xmax - VIEW.xmin);

function drawScene(scene: Scene): void {
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  // guidance half-disc (under everything)
  {
    const [cx, cy] = toScreen(scene.guidanceZone.cx, scene.guidanceZone.cy);
    ctx.beginPath();
    // canvas y grows downward, so world angles are negated
    ctx.arc(
      cx,
      cy,
      scene.guidanceZone.radius * SCALE,
      -scene.guidanceZone.startAngle,
      -(scene.guidanceZone.startAngle + Math.PI),
      true,
    );
    ctx.closePath();
    ctx.fillStyle = scene.guidanceZone.highlighted
      ? "rgba(46, 160, 67, 0.35)"
      : "rgba(46, 160, 67, 0.15)";
    ctx.fill();
  }

  // d_min circle
  {
    const [cx, cy] = toScreen(scene.dMinCircle.cx, scene.dMinCircle.cy);
    ctx.beginPath();
    ctx.setLineDash(scene.dMinCircle.dashed ? [6, 4] : []);
    ctx.arc(cx, cy, scene.dMinCircle.radius * SCALE, 0, 2 * Math.PI);
    ctx.strokeStyle = scene.dMinCircle.highlighted ? "#d73a49" : "#cf222e88";
    ctx.lineWidth = scene.dMinCircle.highlighted ? 3 : 1.5;
    ctx.stroke();
    ctx.setLineDash([]);
  }

  // occluders
  for (const occluder of scene.occluders) {
    ctx.beginPath();
    if (occluder.shape.type === "disc") {
      const [cx, cy] = toScreen(occluder.shape.center[0], occluder.shape.center[1]);
      ctx.arc(cx, cy, occluder.shape.radius * SCALE, 0, 2 * Math.PI);
    } else {
      occluder.shape.points.forEach(([px, py], i) => {
        const [sx, sy] = toScreen(px, py);
        i === 0 ? ctx.moveTo(sx, sy) : ctx.lineTo(sx, sy);
      });
      ctx.closePath();
    }
    ctx.fillStyle = occluder.attributed ? "rgba(219, 109, 40, 0.8)" : "rgba(87, 96, 106, 0.55)";
    ctx.fill();
    if (occluder.attributed) {
      ctx.strokeStyle = "#bc4c00";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
    const ref =
      occluder.shape.type === "disc" ? occluder.shape.center : occluder.shape.points[0];
    const [lx, ly] = toScreen(ref[0], ref[1]);
    ctx.fillStyle = "#57606a";
    ctx.font = "11px system-ui";
    ctx.fillText(occluder.id, lx + 4, ly - 4);
  }

  // robot with heading tick
  {
    const [rx, ry] = toScreen(scene.robot.x, scene.robot.y);
    ctx.beginPath();
    ctx.arc(rx, ry, 8, 0, 2 * Math.PI);
    ctx.fillStyle = "#0969da";
    ctx.fill();
    const hx = rx + Math.cos(scene.robot.heading ?? 0) * 14;
    const hy = ry - Math.sin(scene.robot.heading ?? 0) * 14;
    ctx.beginPath();
    ctx.moveTo(rx, ry);
    ctx.lineTo(hx, hy);
    ctx.strokeStyle = "#0969da";
    ctx.lineWidth = 2;
    ctx.stroke();
    ctx.fillStyle = "#24292f";
    ctx.font = "11px system-ui";
    ctx.fillText(`robot (${scene.robot.mode})`, rx + 10, ry + 12);
  }

  // worker
  {
    const [wx, wy] = toScreen(scene.worker.x, scene.worker.y);
    ctx.beginPath();
    ctx.arc(wx, wy, 7, 0, 2 * Math.PI);
    ctx.fillStyle = "#8250df";
    ctx.fill();
    ctx.fillStyle = "#24292f";
    ctx.font = "11px system-ui";
    ctx.fillText(scene.worker.label, wx + 10, wy - 8);
  }

  // ghost worker (pending what-if)
  if (scene.ghost) {
    const [gx, gy] = toScreen(scene.ghost.x, scene.ghost.y);
    ctx.beginPath();
    ctx.arc(gx, gy, 7, 0, 2 * Math.PI);
    ctx.strokeStyle = "#8250df";
    ctx.setLineDash([3, 3]);
    ctx.lineWidth = 2;
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

function render(): void {
  const snapshot = ui.latest?.state ?? ui.session?.latest?.state ?? null;
  if (snapshot) {
    drawScene(
      buildScene(snapshot, {
        cited: ui.citedIds,
        attribution: ui.attribution,
        ghost: ui.ghost,
        active: ui.latest?.active ?? [],
      }),
    );
    const gauge = buildGauge(snapshot);
    const gaugeEl = $("gauge");
    gaugeEl.textContent = `visibility ${gauge.label} (floor ${gauge.floor.toFixed(2)})`;
    gaugeEl.className = `gauge ${gauge.band}`;
    const fill = $("gauge-fill");
    fill.style.width = `${Math.round(gauge.value * 100)}%`;
    fill.className = `gauge-fill ${gauge.band}`;
  }

  const status = $("status");
  if (ui.session) {
    const tick = ui.latest?.tick ?? ui.session.tick;
    const selected = ui.latest?.selected ?? "idle";
    status.textContent =
      `${ui.session.scenario} · tick ${tick}/${ui.session.horizon} · ${selected}` +
      (ui.running ? " · running" : " · paused");
  }

  $("banner").textContent = ui.banner ?? "";
  $("banner").style.display = ui.banner ? "block" : "none";

  const overlayEl = $("overlay");
  if (ui.overlay) {
    overlayEl.style.display = "block";
    overlayEl.textContent = `what-if: ${ui.overlay.behavior} (active: ${
      ui.overlay.activeIds.join(", ") || "none"
    })`;
  } else {
    overlayEl.style.display = "none";
  }

  // transcript
  const list = $("transcript");
  list.innerHTML = "";
  for (const [index, turn] of ui.transcript.entries()) {
    const item = document.createElement("div");
    item.className = `turn ${turn.who}${turn.error ? " error" : ""}`;
    item.textContent = turn.text;
    if (turn.chip) {
      const chip = document.createElement("button");
      chip.className = "chip";
      chip.textContent = turn.chip.label;
      chip.dataset.turn = String(index);
      chip.addEventListener("click", () => applyChip(index));
      item.appendChild(chip);
    }
    list.appendChild(item);
  }
  list.scrollTop = list.scrollHeight;

  // timeline markers
  const strip = $("markers");
  strip.innerHTML = "";
  for (const marker of ui.markers) {
    const dot = document.createElement("span");
    dot.className = `marker${marker.activated ? " activated" : ""}`;
    dot.title = `tick ${marker.tick}: ${marker.selected}` +
      (marker.activeIds.length ? ` [${marker.activeIds.join(", ")}]` : "");
    strip.appendChild(dot);
  }
  const scrub = $<HTMLInputElement>("scrub");
  if (ui.markers.length > 0) {
    scrub.max = String(ui.markers[ui.markers.length - 1].tick);
    scrub.min = String(ui.markers[0].tick);
  }
}

function absorbExplanation(explanation: ExplanationPayload): void {
  ui.citedIds = explanation.cited.map((c) => c.id);
  ui.attribution = explanation.attribution;
}

async function sendChat(text: string): Promise<void> {
  const route = routeInput(text);
  if (route.kind === "noop") return;
  ui.transcript.push(userTurn(route.text));
  render();
  try {
    const explanation = await client.askText(ui.sessionId, route.text);
    ui.transcript.push(robotTurn(explanation));
    absorbExplanation(explanation);
  } catch (error) {
    ui.transcript.push(errorTurn(error instanceof ApiError ? error.message : String(error)));
  }
  render();
}

async function applyChip(turnIndex: number): Promise<void> {
  const chip = ui.transcript[turnIndex]?.chip;
  if (!chip) return;
  ui.transcript.push(userTurn(`[apply] ${chip.label}`));
  try {
    const explanation = await client.askStructured(ui.sessionId, {
      type: "whatif",
      deltas: chip.deltas,
    });
    ui.transcript.push(robotTurn(explanation));
    absorbExplanation(explanation);
  } catch (error) {
    ui.transcript.push(errorTurn(error instanceof ApiError ? error.message : String(error)));
  }
  render();
}

async function issueCommand(behavior: string): Promise<void> {
  try {
    const result = await client.command(ui.sessionId, behavior);
    ui.banner = result.accepted
      ? result.explanation.text
      : `refused: ${result.explanation.text}`;
    absorbExplanation(result.explanation);
  } catch (error) {
    ui.banner = error instanceof ApiError ? error.message : String(error);
  }
  render();
}

const sendGhostQuery = debounce(async (x: number, y: number) => {
  try {
    const explanation = await client.askStructured(ui.sessionId, ghostQuery(x, y));
    ui.overlay = overlayFromExplanation(explanation);
  } catch (error) {
    ui.overlay = null;
    ui.banner = error instanceof ApiError ? error.message : String(error);
  }
  render();
}, 150);

let dragging = false;

canvas.addEventListener("pointerdown", (event) => {
  dragging = true;
  canvas.setPointerCapture(event.pointerId);
});

canvas.addEventListener("pointermove", (event) => {
  if (!dragging) return;
  const rect = canvas.getBoundingClientRect();
  const [x, y] = toWorld(
    ((event.clientX - rect.left) / rect.width) * canvas.width,
    ((event.clientY - rect.top) / rect.height) * canvas.height,
  );
  ui.ghost = { x, y };
  sendGhostQuery(x, y);
  render();
});

canvas.addEventListener("pointerup", () => {
  dragging = false;
});

canvas.addEventListener("dblclick", () => {
  ui.ghost = null;
  ui.overlay = null;
  sendGhostQuery.cancel();
  render();
});

// --- event stream ------------------------------------------------------------------

let stream: EventSource | null = null;

function openStream(): void {
  stream?.close();
  stream = new EventSource(client.streamUrl(ui.sessionId));
  stream.addEventListener("open", () => {
    // the feed replays from the beginning on every (re)connect
    ui.markers = [];
    ui.banner = null;
    render();
  });
  stream.addEventListener("decision", (event) => {
    const record = JSON.parse((event as MessageEvent).data) as DecisionRecordPayload;
    ui.latest = record;
    ui.markers = ui.markers.concat(buildTimeline([record]));
    render();
  });
  stream.addEventListener("error", () => {
    ui.banner = "stream lost; resyncing";
    render();
    resync();
  });
}

const resync = debounce(async () => {
  try {
    ui.session = await client.state(ui.sessionId);
    ui.latest = ui.session.latest;
    render();
  } catch {
    ui.banner = "resync failed; retrying";
    render();
    resync();
  }
}, 1000);

// --- run loop ----------------------------------------------------------------------

let runTimer: ReturnType<typeof setInterval> | null = null;

function setRunning(on: boolean): void {
  ui.running = on;
  if (runTimer) {
    clearInterval(runTimer);
    runTimer = null;
  }
  if (on) {
    runTimer = setInterval(async () => {
      try {
        const result = await client.tick(ui.sessionId, 1);
        if (result.status === "finished") setRunning(false);
      } catch {
        setRunning(false);
      }
    }, 100);
  }
  render();
}

// --- boot --------------------------------------------------------------------------

async function boot(): Promise<void> {
  const scenario = await client.getScenario(scenarioName);
  const created = await client.createSession(scenario);
  ui.sessionId = created.session_id;
  ui.session = created.state;
  openStream();

  $("send").addEventListener("click", () => {
    const input = $<HTMLInputElement>("chat-input");
    void sendChat(input.value);
    input.value = "";
  });
  $<HTMLInputElement>("chat-input").addEventListener("keydown", (event) => {
    if (event.key === "Enter") {
      const input = event.target as HTMLInputElement;
      void sendChat(input.value);
      input.value = "";
    }
  });
  $("run-toggle").addEventListener("click", () => setRunning(!ui.running));
  $("cmd-follow").addEventListener("click", () => void issueCommand("follow"));
  $("cmd-resume").addEventListener("click", () => void issueCommand("resume"));
  $<HTMLInputElement>("scrub").addEventListener("change", async (event) => {
    const tick = Number((event.target as HTMLInputElement).value);
    ui.transcript.push(userTurn(`[scrub] why at ${tick}`));
    try {
      const explanation = await client.askStructured(ui.sessionId, scrubQuery(tick));
      ui.transcript.push(robotTurn(explanation));
      absorbExplanation(explanation);
    } catch (error) {
      ui.transcript.push(errorTurn(error instanceof ApiError ? error.message : String(error)));
    }
    render();
  });

  render();
}

void boot().catch((error) => {
  $("banner").textContent = `failed to start: ${error}`;
  $("banner").style.display = "block";
});
