/**
 * Typed client for the ranking-session HTTP API.
 *
 * Endpoints: POST /sessions, GET /sessions/{id}/query,
 * POST /sessions/{id}/response, GET /sessions/{id}/estimate, GET /healthz.
 * Non-2xx responses become ApiError carrying the status code and the
 * server's detail message; network failures surface as the underlying
 * fetch rejection so callers can offer a retry without losing state.
 */

export interface SessionView {
  id: string;
  phase: string;
  answered: number;
  total: number;
  n_active: number;
  n_eval: number;
  k: number;
  strategy: string;
}

export interface QueryItem {
  id: string;
  features: number[];
  meta: Record<string, string>;
}

export interface QueryPayload {
  index: number;
  phase: string;
  progress: { answered: number; total: number };
  items: QueryItem[];
}

export interface EstimatePayload {
  weights: number[][];
  mixing: number[];
  holdout_loglik: number | null;
  n_eval_responses: number;
  phase: string;
}

/** Session settings the create request may override. */
export interface SessionOverrides {
  strategy: string;
  k: number;
  n_active: number;
  n_eval: number;
  m_model: number;
  seed: number;
  n_chains: number;
  mh_iters: number;
  mh_step: number;
  sa_chains: number;
  sa_iters: number;
  sa_start_temp: number;
  sa_cooling: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class SessionApi {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((url, init) => globalThis.fetch(url, init));
  }

  createSession(overrides: Partial<SessionOverrides> = {}): Promise<SessionView> {
    return this.request("POST", "/sessions", overrides);
  }

  getQuery(sessionId: string): Promise<QueryPayload> {
    return this.request("GET", `/sessions/${sessionId}/query`);
  }

  postResponse(
    sessionId: string,
    ranking: string[],
    queryIndex?: number,
  ): Promise<SessionView> {
    const body: { ranking: string[]; query_index?: number } = { ranking };
    if (queryIndex !== undefined) {
      body.query_index = queryIndex;
    }
    return this.request("POST", `/sessions/${sessionId}/response`, body);
  }

  getEstimate(sessionId: string): Promise<EstimatePayload> {
    return this.request("GET", `/sessions/${sessionId}/estimate`);
  }

  async health(): Promise<boolean> {
    try {
      const response = await this.fetchFn(`${this.baseUrl}/healthz`);
      return response.ok;
    } catch {
      return false;
    }
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as T;
  }
}

async function readDetail(response: Response): Promise<string> {
  try {
    const data: unknown = await response.json();
    if (data && typeof data === "object" && "detail" in data) {
      const detail = (data as { detail: unknown }).detail;
      return typeof detail === "string" ? detail : JSON.stringify(detail);
    }
  } catch {
    // non-JSON error body; fall through to the status text
  }
  return response.statusText || `status ${response.status}`;
}
