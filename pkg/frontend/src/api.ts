// REST client for the backend. Every request the console makes goes through
// this class, so the full HTTP surface is visible in one place:
//   POST /v1/sessions            create a session
//   GET  /v1/sessions/{id}       status snapshot
//   GET  /v1/sessions/{id}/events  SSE stream (see stream.ts)
//   POST /v1/sessions/{id}/input   submit a human turn
//   POST /v1/validate            check a config without running it
//   POST /v1/generate            draft a config from a task description

import type {
  GenerateResult,
  Issue,
  SessionStatus,
  SubmitOutcome,
  ValidationReport,
} from "./types.js";

export interface HttpResponseLike {
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<HttpResponseLike>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: unknown,
    message?: string,
  ) {
    super(message ?? `unexpected HTTP ${status}`);
    this.name = "ApiError";
  }
}

export type CreateResult =
  | { ok: true; sessionId: string; status: string; warnings: Issue[] }
  | { ok: false; report: ValidationReport };

export interface SubmitResult {
  accepted: boolean;
  outcome: SubmitOutcome;
}

const defaultFetch: FetchLike = (url, init) => globalThis.fetch(url, init);

export class ApiClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchFn: FetchLike = defaultFetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  streamUrl(sessionId: string, fromSeq = 0): string {
    const id = encodeURIComponent(sessionId);
    return `${this.baseUrl}/v1/sessions/${id}/events?from_seq=${fromSeq}`;
  }

  private async post(path: string, body: unknown): Promise<HttpResponseLike> {
    return this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  /** 201 starts the session; 422 carries the validation report inline. */
  async createSession(config: unknown): Promise<CreateResult> {
    const resp = await this.post("/v1/sessions", { config });
    const body = (await resp.json()) as Record<string, unknown>;
    if (resp.status === 201) {
      return {
        ok: true,
        sessionId: body["session_id"] as string,
        status: body["status"] as string,
        warnings: (body["warnings"] ?? []) as Issue[],
      };
    }
    if (resp.status === 422) {
      return { ok: false, report: body as unknown as ValidationReport };
    }
    throw new ApiError(resp.status, body);
  }

  /** null when the session id is unknown. */
  async sessionStatus(sessionId: string): Promise<SessionStatus | null> {
    const id = encodeURIComponent(sessionId);
    const resp = await this.fetchFn(`${this.baseUrl}/v1/sessions/${id}`);
    if (resp.status === 404) return null;
    const body = await resp.json();
    if (resp.status !== 200) throw new ApiError(resp.status, body);
    return body as SessionStatus;
  }

  /**
   * Submit a human turn. 202 and 409 are both normal outcomes; a 409 means
   * the request id was stale or nothing is waiting, and the caller decides
   * how to surface that. Anything else throws.
   */
  async submitInput(
    sessionId: string,
    requestId: string,
    text: string,
  ): Promise<SubmitResult> {
    const id = encodeURIComponent(sessionId);
    const resp = await this.post(`/v1/sessions/${id}/input`, {
      request_id: requestId,
      text,
    });
    const body = (await resp.json()) as Record<string, unknown>;
    if (resp.status === 202 || resp.status === 409) {
      return {
        accepted: resp.status === 202,
        outcome: body["outcome"] as SubmitOutcome,
      };
    }
    throw new ApiError(resp.status, body);
  }

  async validate(config: unknown): Promise<ValidationReport> {
    const resp = await this.post("/v1/validate", { config });
    const body = await resp.json();
    if (resp.status !== 200 && resp.status !== 422) {
      throw new ApiError(resp.status, body);
    }
    return body as ValidationReport;
  }

  async generate(task: string, llm: Record<string, unknown>): Promise<GenerateResult> {
    const resp = await this.post("/v1/generate", { task, llm });
    const body = await resp.json();
    if (resp.status !== 200) throw new ApiError(resp.status, body);
    return body as GenerateResult;
  }
}
