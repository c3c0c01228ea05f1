// Review queue state machine. Verdicts advance the cursor immediately
// (the reviewer never waits on the network), then reconcile with the
// server response: counts always come from the server, a 409 means
// another session decided the pair and triggers a refresh, and a failed
// POST is kept in the unsynced list until retried. Decisions are never
// dropped silently.

import { ApiError, type AuditApi, type Counts, type QueueItem, type Verdict } from "./api.js";

export interface UnsyncedDecision {
  pairId: string;
  verdict: Verdict;
  reviewer: string;
}

export interface QueueEvent {
  kind: "applied" | "conflict" | "rejected" | "offline" | "refreshed";
  pairId?: string;
  detail?: string;
}

export class ReviewQueue {
  items: QueueItem[] = [];
  cursor = 0;
  counts: Counts | null = null;
  totalPending = 0;
  unsynced: UnsyncedDecision[] = [];
  events: QueueEvent[] = [];
  readonly reviewer: string;
  private readonly pageSize: number;

  constructor(
    private readonly api: AuditApi,
    opts: { reviewer?: string; pageSize?: number } = {},
  ) {
    this.reviewer = opts.reviewer ?? "ui";
    this.pageSize = opts.pageSize ?? 50;
  }

  /** Reload the first queue page and the server counts. */
  async refresh(): Promise<void> {
    const [queue, status] = await Promise.all([
      this.api.queue(0, this.pageSize),
      this.api.status(),
    ]);
    this.items = queue.items;
    this.totalPending = queue.total_pending;
    this.counts = status.counts;
    if (this.cursor >= this.items.length) {
      this.cursor = Math.max(0, this.items.length - 1);
    }
    this.events.push({ kind: "refreshed" });
  }

  current(): QueueItem | null {
    return this.items[this.cursor] ?? null;
  }

  next(): void {
    if (this.cursor < this.items.length - 1) this.cursor += 1;
  }

  prev(): void {
    if (this.cursor > 0) this.cursor -= 1;
  }

  /**
   * Decide the current pair. The pair leaves the local list before the
   * POST resolves, so current() already points at the next one.
   */
  async decide(verdict: Verdict): Promise<void> {
    const item = this.current();
    if (item === null) return;
    this.removeLocal(item.pair_id);
    try {
      const result = await this.api.decide(item.pair_id, verdict, this.reviewer);
      this.counts = result.counts;
      this.totalPending = result.counts.pending_candidates;
      this.events.push({ kind: "applied", pairId: item.pair_id });
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Decided elsewhere; the server queue is ahead of us.
        this.events.push({ kind: "conflict", pairId: item.pair_id, detail: err.message });
        await this.refresh();
      } else if (err instanceof ApiError) {
        this.events.push({ kind: "rejected", pairId: item.pair_id, detail: err.message });
        await this.refresh();
      } else {
        // Network failure: hold the decision for retry, never drop it.
        this.unsynced.push({ pairId: item.pair_id, verdict, reviewer: this.reviewer });
        this.events.push({ kind: "offline", pairId: item.pair_id });
      }
    }
  }

  /** Re-post held decisions; 409/404 mean the server already moved on. */
  async retryUnsynced(): Promise<void> {
    const held = this.unsynced;
    this.unsynced = [];
    for (const decision of held) {
      try {
        const result = await this.api.decide(decision.pairId, decision.verdict, decision.reviewer);
        this.counts = result.counts;
        this.totalPending = result.counts.pending_candidates;
        this.events.push({ kind: "applied", pairId: decision.pairId });
      } catch (err) {
        if (err instanceof ApiError) {
          this.events.push({ kind: "conflict", pairId: decision.pairId, detail: err.message });
        } else {
          this.unsynced.push(decision);
          this.events.push({ kind: "offline", pairId: decision.pairId });
        }
      }
    }
  }

  private removeLocal(pairId: string): void {
    const index = this.items.findIndex((i) => i.pair_id === pairId);
    if (index === -1) return;
    this.items.splice(index, 1);
    this.totalPending = Math.max(0, this.totalPending - 1);
    if (this.cursor > index) this.cursor -= 1;
    if (this.cursor >= this.items.length) {
      this.cursor = Math.max(0, this.items.length - 1);
    }
  }
}
