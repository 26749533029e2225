// Typed client for the session service. All vectors are plain number arrays
// in original objective units; dimensions are zero-based on the wire.

export interface PcQueryPayload {
  id: string;
  kind: "pc";
  f: number[];
  f_other: number[];
}

export interface IrQueryPayload {
  id: string;
  kind: "ir";
  f: number[];
  dimensions: string[];
}

export type QueryPayload = PcQueryPayload | IrQueryPayload;

export interface IncumbentDoc {
  observation: number;
  x: number[];
  y: number[];
  utility_estimate: number;
}

export interface StateDoc {
  id: string;
  L: number;
  d: number;
  benchmark: string | null;
  utility: string;
  counts: { observations: number; pc: number; ir: number };
  incumbent: IncumbentDoc | null;
  pending: QueryPayload | null;
  query_log: unknown[];
  posterior_mean_w: number[] | null;
  w_quantiles?: { p05: number[]; p50: number[]; p95: number[] };
}

export interface SuggestDoc {
  index: number;
  x: number[];
  ei: number | null;
  initial: boolean;
}

export interface AnswerResult {
  counts: { pc: number; ir: number };
  posterior_mean_w: number[] | null;
}

export type PcAnswer = { preferred: "first" | "second" };
export type IrAnswer = { dim: number };

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const body = await resp.json();
  if (!resp.ok) {
    throw new ApiError(resp.status, body.code ?? "unknown", body.error ?? resp.statusText);
  }
  return body as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  createSession(config: Record<string, unknown>): Promise<{ id: string; L: number; d: number }> {
    return request(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
  }

  getState(id: string): Promise<StateDoc> {
    return request(this.url(`/sessions/${id}`));
  }

  nextQuery(id: string, kind: "pc" | "ir"): Promise<QueryPayload> {
    return request(this.url(`/sessions/${id}/query?kind=${kind}`));
  }

  submitAnswer(id: string, queryId: string, answer: PcAnswer | IrAnswer): Promise<AnswerResult> {
    return request(this.url(`/sessions/${id}/answer`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ query_id: queryId, ...answer }),
    });
  }

  suggest(id: string): Promise<SuggestDoc> {
    return request(this.url(`/sessions/${id}/suggest`));
  }

  observe(id: string, x: number[], y: number[]): Promise<{ observations: number }> {
    return request(this.url(`/sessions/${id}/observe`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ x, y }),
    });
  }
}
