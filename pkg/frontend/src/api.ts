// Typed client for the audit service HTTP API. Every mutation goes
// through POST /api/decisions; everything else is read-only.

export type Verdict = "accept" | "reject" | "skip";

export interface Counts {
  total: number;
  matched: number;
  unmatched: number;
  unmatched_digests: number;
  pending_candidates: number;
  iteration: number;
  phase: string;
}

export interface StatusPayload {
  run_id: string;
  phase: string;
  counts: Counts;
  iteration: number;
  discarded: string[];
  cap_warning: boolean;
  config: Record<string, unknown>;
}

export interface QueueItem {
  pair_id: string;
  unmatched_digest: string;
  candidate_digest: string;
  similarity: number;
  unmatched_prompt: string;
  candidate_prompt: string;
  status: string;
}

export interface QueuePayload {
  total_pending: number;
  offset: number;
  items: QueueItem[];
}

export interface DiffSpan {
  op: "equal" | "replace" | "delete" | "insert";
  left: string;
  right: string;
}

export interface CasePayload {
  spans: DiffSpan[];
  identical: boolean;
  left_visible: string;
  right_visible: string;
}

export interface PairDetail extends QueueItem {
  diff: CasePayload;
  queue_position: number;
}

export interface DecisionResult {
  applied: QueueItem;
  counts: Counts;
}

export interface LeakRecord {
  train_dataset: string;
  train_instance_id: string;
  train_digest: string;
  benchmark_id: string;
  benchmark_item_id: string;
  benchmark_digest: string;
  similarity: number;
  band: "exact" | "high" | "suspect";
}

export interface LeaksPayload {
  available: boolean;
  records: LeakRecord[];
  band_totals: Record<string, { exact: number; high: number; suspect: number }>;
  n_leak: Record<string, number>;
}

export interface LeakCase extends CasePayload {
  record: LeakRecord;
}

/** HTTP error with the server's status code and detail message. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(`${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AuditApi {
  constructor(
    private readonly baseUrl = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = (await res.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  status(): Promise<StatusPayload> {
    return this.request("/api/status");
  }

  queue(offset = 0, limit = 50): Promise<QueuePayload> {
    return this.request(`/api/queue?offset=${offset}&limit=${limit}`);
  }

  pair(pairId: string): Promise<PairDetail> {
    return this.request(`/api/pairs/${encodeURIComponent(pairId)}`);
  }

  decide(pairId: string, verdict: Verdict, reviewer: string): Promise<DecisionResult> {
    return this.request("/api/decisions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ pair_id: pairId, verdict, reviewer }),
    });
  }

  leaks(dataset?: string): Promise<LeaksPayload> {
    const query = dataset ? `?dataset=${encodeURIComponent(dataset)}` : "";
    return this.request(`/api/leaks${query}`);
  }

  leakCase(record: LeakRecord): Promise<LeakCase> {
    const params = new URLSearchParams({
      train_dataset: record.train_dataset,
      train_instance_id: record.train_instance_id,
      benchmark_id: record.benchmark_id,
      benchmark_item_id: record.benchmark_item_id,
    });
    return this.request(`/api/leaks/case?${params}`);
  }
}
