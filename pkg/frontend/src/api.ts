/** Typed client for the prediction service's JSON-over-HTTP API. */

import type { Mode, Move, Score, SessionInfo } from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

/** A non-2xx response; `detail` is the service's error message. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ServiceError";
  }
}

/** What the panes need from a client; lets tests swap in fakes. */
export interface ServiceApi {
  createSession(mode: Mode, corpora?: string[]): Promise<{ id: string }>;
  sendByte(
    id: string,
    byte: string,
    n?: number,
  ): Promise<{ prediction: string; prediction_b64: string }>;
  playMove(id: string, move: Move): Promise<{ aiMove: Move; score: Score }>;
  getSession(id: string): Promise<SessionInfo>;
  listCorpora(): Promise<{ corpora: string[] }>;
  deleteSession(id: string): Promise<{ ok: boolean }>;
}

export class ServiceClient implements ServiceApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.base + path, init);
    const data: unknown = await res.json().catch(() => ({}));
    if (!res.ok) {
      const detail = (data as { detail?: unknown }).detail;
      throw new ServiceError(
        res.status,
        typeof detail === "string" ? detail : `HTTP ${res.status}`,
      );
    }
    return data as T;
  }

  createSession(mode: Mode, corpora: string[] = []): Promise<{ id: string }> {
    return this.request("POST", "/session", { mode, corpora });
  }

  /** Feed one typed character; returns the fresh greedy continuation. */
  sendByte(
    id: string,
    byte: string,
    n?: number,
  ): Promise<{ prediction: string; prediction_b64: string }> {
    const body = n === undefined ? { byte } : { byte, n };
    return this.request("POST", `/session/${id}/text`, body);
  }

  /** Play one round; `aiMove` was committed before this move landed. */
  playMove(id: string, move: Move): Promise<{ aiMove: Move; score: Score }> {
    return this.request("POST", `/session/${id}/rps`, { move });
  }

  getSession(id: string): Promise<SessionInfo> {
    return this.request("GET", `/session/${id}`);
  }

  listCorpora(): Promise<{ corpora: string[] }> {
    return this.request("GET", "/corpora");
  }

  deleteSession(id: string): Promise<{ ok: boolean }> {
    return this.request("DELETE", `/session/${id}`);
  }
}
