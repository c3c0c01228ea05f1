import { describe, expect, it } from "vitest";
import {
  ApiError,
  type AuditApi,
  type Counts,
  type DecisionResult,
  type QueueItem,
  type QueuePayload,
  type StatusPayload,
  type Verdict,
} from "../src/api.js";
import { ReviewQueue } from "../src/queue.js";
import { acceptFirst } from "../src/session.js";

function item(id: string, similarity: number): QueueItem {
  return {
    pair_id: id,
    unmatched_digest: `u-${id}`,
    candidate_digest: `c-${id}`,
    similarity,
    unmatched_prompt: `unmatched ${id}`,
    candidate_prompt: `candidate ${id}`,
    status: "pending",
  };
}

/** In-memory stand-in for the audit service with the same semantics:
 * counts come from the server, a decided pair cannot be decided again,
 * and a network outage throws a non-HTTP error. */
class FakeServer {
  pending: QueueItem[];
  matched = 0;
  readonly total: number;
  decisions: Array<{ pairId: string; verdict: Verdict; reviewer: string }> = [];
  offline = false;
  gate: Promise<void> | null = null;

  constructor(ids: string[]) {
    this.pending = ids.map((id, i) => item(id, 0.99 - i * 0.01));
    this.total = ids.length * 2;
  }

  counts(): Counts {
    return {
      total: this.total,
      matched: this.matched,
      unmatched: this.total - this.matched,
      unmatched_digests: this.pending.length,
      pending_candidates: this.pending.length,
      iteration: 1,
      phase: "stage2_audit",
    };
  }

  api(): AuditApi {
    const server = this;
    const fake = {
      async queue(offset = 0, limit = 50): Promise<QueuePayload> {
        return {
          total_pending: server.pending.length,
          offset,
          items: server.pending.slice(offset, offset + limit),
        };
      },
      async status(): Promise<StatusPayload> {
        return {
          run_id: "fake",
          phase: "stage2_audit",
          counts: server.counts(),
          iteration: 1,
          discarded: [],
          cap_warning: false,
          config: {},
        };
      },
      async decide(pairId: string, verdict: Verdict, reviewer: string): Promise<DecisionResult> {
        if (server.gate) await server.gate;
        if (server.offline) throw new TypeError("fetch failed");
        const index = server.pending.findIndex((i) => i.pair_id === pairId);
        if (index === -1) throw new ApiError(409, `pair already decided: ${pairId}`);
        const applied = server.pending.splice(index, 1)[0] as QueueItem;
        if (verdict === "accept") server.matched += 1;
        server.decisions.push({ pairId, verdict, reviewer });
        return { applied, counts: server.counts() };
      },
    };
    return fake as unknown as AuditApi;
  }
}

describe("ReviewQueue", () => {
  it("loads the queue page and server counts on refresh", async () => {
    const server = new FakeServer(["p1", "p2", "p3"]);
    const queue = new ReviewQueue(server.api(), { reviewer: "t" });
    await queue.refresh();
    expect(queue.items.map((i) => i.pair_id)).toEqual(["p1", "p2", "p3"]);
    expect(queue.totalPending).toBe(3);
    expect(queue.counts?.pending_candidates).toBe(3);
    expect(queue.current()?.pair_id).toBe("p1");
  });

  it("advances past the pair before the POST resolves", async () => {
    const server = new FakeServer(["p1", "p2"]);
    let release!: () => void;
    server.gate = new Promise((res) => {
      release = res;
    });
    const queue = new ReviewQueue(server.api(), { reviewer: "t" });
    await queue.refresh();

    const inFlight = queue.decide("accept");
    // The reviewer is already looking at p2 while p1's POST is pending.
    expect(queue.current()?.pair_id).toBe("p2");
    expect(queue.totalPending).toBe(1);

    release();
    await inFlight;
    expect(queue.counts?.matched).toBe(1);
    expect(server.decisions).toEqual([{ pairId: "p1", verdict: "accept", reviewer: "t" }]);
  });

  it("takes counts from the decision response, not local math", async () => {
    const server = new FakeServer(["p1", "p2"]);
    const queue = new ReviewQueue(server.api(), { reviewer: "t" });
    await queue.refresh();
    await queue.decide("accept");
    await queue.decide("reject");
    expect(queue.counts).toEqual(server.counts());
    expect(queue.counts?.matched).toBe(1); // reject does not match anything
    expect(queue.totalPending).toBe(0);
  });

  it("keeps the cursor in range when the last item is decided", async () => {
    const server = new FakeServer(["p1", "p2", "p3"]);
    const queue = new ReviewQueue(server.api(), { reviewer: "t" });
    await queue.refresh();
    queue.next();
    queue.next();
    expect(queue.current()?.pair_id).toBe("p3");
    await queue.decide("skip");
    expect(queue.cursor).toBe(1);
    expect(queue.current()?.pair_id).toBe("p2");
  });

  it("refreshes after a 409 from a pair decided elsewhere", async () => {
    const server = new FakeServer(["p1", "p2"]);
    const queue = new ReviewQueue(server.api(), { reviewer: "t" });
    await queue.refresh();
    // Another session decides p1 behind this client's back.
    server.pending.shift();
    server.matched += 1;
    await queue.decide("accept");
    expect(queue.events.some((e) => e.kind === "conflict" && e.pairId === "p1")).toBe(true);
    expect(queue.items.map((i) => i.pair_id)).toEqual(["p2"]);
    expect(queue.counts?.matched).toBe(1);
    expect(queue.unsynced).toEqual([]); // a conflict is resolved, not held
  });

  it("holds a decision through a network failure and retries it", async () => {
    const server = new FakeServer(["p1", "p2"]);
    const queue = new ReviewQueue(server.api(), { reviewer: "t" });
    await queue.refresh();

    server.offline = true;
    await queue.decide("accept");
    expect(queue.unsynced).toEqual([{ pairId: "p1", verdict: "accept", reviewer: "t" }]);
    expect(queue.current()?.pair_id).toBe("p2"); // still moved on locally
    expect(server.decisions).toEqual([]); // nothing reached the server

    server.offline = false;
    await queue.retryUnsynced();
    expect(queue.unsynced).toEqual([]);
    expect(server.decisions).toEqual([{ pairId: "p1", verdict: "accept", reviewer: "t" }]);
    expect(queue.counts?.matched).toBe(1);
  });

  it("re-holds a retried decision if the network is still down", async () => {
    const server = new FakeServer(["p1"]);
    const queue = new ReviewQueue(server.api(), { reviewer: "t" });
    await queue.refresh();
    server.offline = true;
    await queue.decide("accept");
    await queue.retryUnsynced();
    expect(queue.unsynced).toHaveLength(1); // never dropped silently
  });

  it("drops a held decision whose pair was decided elsewhere", async () => {
    const server = new FakeServer(["p1"]);
    const queue = new ReviewQueue(server.api(), { reviewer: "t" });
    await queue.refresh();
    server.offline = true;
    await queue.decide("accept");
    server.offline = false;
    server.pending = []; // someone else decided it meanwhile
    await queue.retryUnsynced();
    expect(queue.unsynced).toEqual([]);
    expect(queue.events.at(-1)?.kind).toBe("conflict");
  });
});

describe("acceptFirst", () => {
  it("accepts n pairs in server order and reconciles counts", async () => {
    const server = new FakeServer(["p1", "p2", "p3", "p4"]);
    const report = await acceptFirst(server.api(), 4, "scripted");
    expect(report.decided).toEqual(["p1", "p2", "p3", "p4"]);
    expect(report.consistent).toBe(true);
    expect(report.serverCounts.pending_candidates).toBe(0);
    expect(report.serverCounts.matched).toBe(4);
    expect(server.decisions.every((d) => d.reviewer === "scripted")).toBe(true);
  });

  it("stops early when the queue drains before n", async () => {
    const server = new FakeServer(["p1", "p2"]);
    const report = await acceptFirst(server.api(), 10, "scripted");
    expect(report.decided).toEqual(["p1", "p2"]);
    expect(report.consistent).toBe(true);
  });
});
