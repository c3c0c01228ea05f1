// Scripted review sessions: each one drives the same ReviewQueue state
// machine the page uses, so a headless run exercises the identical
// decision path a reviewer's keystrokes would.

import type { AuditApi, Counts } from "./api.js";
import { ReviewQueue } from "./queue.js";

export interface SessionReport {
  decided: string[];
  localCounts: Counts | null;
  serverCounts: Counts;
  consistent: boolean;
}

function sameCounts(a: Counts | null, b: Counts): boolean {
  if (a === null) return false;
  return (
    a.total === b.total &&
    a.matched === b.matched &&
    a.unmatched === b.unmatched &&
    a.unmatched_digests === b.unmatched_digests &&
    a.pending_candidates === b.pending_candidates &&
    a.iteration === b.iteration &&
    a.phase === b.phase
  );
}

/**
 * Accept the first n queued pairs in server order, then reconcile the
 * local counts against GET /api/status.
 */
export async function acceptFirst(api: AuditApi, n: number, reviewer: string): Promise<SessionReport> {
  const queue = new ReviewQueue(api, { reviewer });
  await queue.refresh();
  const decided: string[] = [];
  while (decided.length < n) {
    const item = queue.current();
    if (item === null) break;
    decided.push(item.pair_id);
    await queue.decide("accept");
    if (queue.unsynced.length > 0) {
      await queue.retryUnsynced();
    }
  }
  const status = await api.status();
  return {
    decided,
    localCounts: queue.counts,
    serverCounts: status.counts,
    consistent: sameCounts(queue.counts, status.counts),
  };
}
