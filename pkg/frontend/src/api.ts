/** Thin fetch client. Every non-2xx response carries the server's error
 * envelope; ApiError surfaces code/message/detail_path so the UI can render
 * the diagnostic inline (parse hints included). */

import type {
  CommandResponse,
  ErrorEnvelope,
  ExplanationPayload,
  SessionStatePayload,
  StructuredQuery,
  TickResponse,
  TracePayload,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly detailPath: string | null;
  readonly status: number;

  constructor(status: number, code: string, message: string, detailPath: string | null) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.detailPath = detailPath;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const envelope = body as ErrorEnvelope | null;
    if (envelope && envelope.error) {
      throw new ApiError(
        response.status,
        envelope.error.code,
        envelope.error.message,
        envelope.error.detail_path,
      );
    }
    throw new ApiError(response.status, "http_error", `HTTP ${response.status}`, null);
  }
  return body as T;
}

export class Client {
  constructor(readonly base: string) {}

  async listScenarios(): Promise<string[]> {
    const data = await request<{ scenarios: string[] }>(`${this.base}/scenarios`);
    return data.scenarios;
  }

  getScenario(name: string): Promise<Record<string, unknown>> {
    return request(`${this.base}/scenarios/${name}`);
  }

  async createSession(scenario: Record<string, unknown> | string): Promise<{
    session_id: string;
    state: SessionStatePayload;
  }> {
    return request(`${this.base}/sessions`, {
      method: "POST",
      body: JSON.stringify({ scenario }),
    });
  }

  tick(sessionId: string, n: number): Promise<TickResponse> {
    return request(`${this.base}/sessions/${sessionId}/tick`, {
      method: "POST",
      body: JSON.stringify({ n }),
    });
  }

  state(sessionId: string): Promise<SessionStatePayload> {
    return request(`${this.base}/sessions/${sessionId}/state`);
  }

  trace(sessionId: string, from?: number, to?: number): Promise<TracePayload> {
    const query = new URLSearchParams();
    if (from !== undefined) query.set("from", String(from));
    if (to !== undefined) query.set("to", String(to));
    const suffix = query.size > 0 ? `?${query}` : "";
    return request(`${this.base}/sessions/${sessionId}/trace${suffix}`);
  }

  async askText(sessionId: string, text: string, at?: number): Promise<ExplanationPayload> {
    const body: Record<string, unknown> = { text };
    if (at !== undefined) body.at = at;
    const data = await request<{ explanation: ExplanationPayload }>(
      `${this.base}/sessions/${sessionId}/ask`,
      { method: "POST", body: JSON.stringify(body) },
    );
    return data.explanation;
  }

  async askStructured(
    sessionId: string,
    structured: StructuredQuery,
    at?: number,
  ): Promise<ExplanationPayload> {
    const body: Record<string, unknown> = { structured };
    if (at !== undefined) body.at = at;
    const data = await request<{ explanation: ExplanationPayload }>(
      `${this.base}/sessions/${sessionId}/ask`,
      { method: "POST", body: JSON.stringify(body) },
    );
    return data.explanation;
  }

  command(sessionId: string, behavior: string): Promise<CommandResponse> {
    return request(`${this.base}/sessions/${sessionId}/command`, {
      method: "POST",
      body: JSON.stringify({ behavior }),
    });
  }

  streamUrl(sessionId: string): string {
    return `${this.base}/sessions/${sessionId}/stream`;
  }
}
