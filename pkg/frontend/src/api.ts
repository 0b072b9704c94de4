/**
 * HTTP client for the storyspace service.
 *
 * One method per endpoint; each UI zone is allowed to call exactly the
 * methods listed in ZONE_ENDPOINTS (the zone/endpoint bijection the tests
 * pin down). Nothing in the UI touches the service except through here.
 */

import type {
  MemoryView,
  RoundResult,
  SceneMode,
  SceneRecord,
  SessionView,
  SharingCard,
  StagesView,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly kind: string,
    detail: string,
  ) {
    super(detail);
  }
}

export const ZONE_ENDPOINTS: Record<string, string[]> = {
  stages: ["GET /stages", "POST /sessions", "POST /sessions/{id}/stage"],
  chat: ["POST /sessions/{id}/query"],
  sharing: ["GET /sessions/{id}/sharing"],
  scene: ["POST /sessions/{id}/scene"],
  memory: ["GET /sessions/{id}/memory"],
};

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async stages(): Promise<StagesView> {
    return this.request("GET", "/stages");
  }

  async openSession(stage: number, roster?: string[], seed?: number): Promise<SessionView> {
    return this.request("POST", "/sessions", { stage, roster: roster ?? null, seed: seed ?? null });
  }

  async switchStage(sessionId: string, stage: number): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/stage`, { stage });
  }

  async query(sessionId: string, text: string): Promise<RoundResult> {
    return this.request("POST", `/sessions/${sessionId}/query`, { text });
  }

  async sharing(sessionId: string, after: number): Promise<{ cards: SharingCard[] }> {
    return this.request("GET", `/sessions/${sessionId}/sharing?after=${after}`);
  }

  async scene(sessionId: string, mode: SceneMode, seed?: number): Promise<SceneRecord> {
    return this.request("POST", `/sessions/${sessionId}/scene`, { mode, seed: seed ?? null });
  }

  async memory(sessionId: string): Promise<MemoryView> {
    return this.request("GET", `/sessions/${sessionId}/memory`);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, "unreachable", `service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let kind = "error";
      let detail = `${method} ${path} failed with ${response.status}`;
      try {
        const parsed = (await response.json()) as { error?: string; detail?: string };
        if (parsed.error) kind = parsed.error;
        if (parsed.detail) detail = parsed.detail;
      } catch {
        // non-JSON error body: keep the generic detail
      }
      throw new ApiError(response.status, kind, detail);
    }
    return (await response.json()) as T;
  }
}
