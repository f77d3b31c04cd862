/** Thin typed client over the review API. The fetch function is injected so
 * tests can stub the server; the UI never recomputes anything it returns. */

import type {
  DecisionsBody,
  PairPayload,
  PooledPayload,
  QueueItem,
  SubmitResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`API error ${status}: ${detail}`);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ReviewApi {
  constructor(
    private readonly fetchFn: FetchLike,
    private readonly base: string = "",
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  queue(): Promise<QueueItem[]> {
    return this.get<QueueItem[]>("/api/queue");
  }

  pair(pairId: string): Promise<PairPayload> {
    return this.get<PairPayload>(`/api/pairs/${encodeURIComponent(pairId)}`);
  }

  metrics(): Promise<PooledPayload> {
    return this.get<PooledPayload>("/api/metrics");
  }

  async submitDecisions(pairId: string, body: DecisionsBody): Promise<SubmitResponse> {
    const response = await this.fetchFn(
      `${this.base}/api/pairs/${encodeURIComponent(pairId)}/decisions`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      },
    );
    if (!response.ok) await parseError(response);
    return (await response.json()) as SubmitResponse;
  }
}
