import { describe, expect, it } from "vitest";
import type { LeakRecord, LeaksPayload } from "../src/api.js";
import { bandRank, isEmpty, sortRecords, summarize } from "../src/leaks.js";

function record(overrides: Partial<LeakRecord>): LeakRecord {
  return {
    train_dataset: "train",
    train_instance_id: "t0",
    train_digest: "d0",
    benchmark_id: "bench",
    benchmark_item_id: "b0",
    benchmark_digest: "e0",
    similarity: 0.95,
    band: "high",
    ...overrides,
  };
}

describe("bandRank", () => {
  it("ranks exact over high over suspect", () => {
    expect(bandRank("exact")).toBeGreaterThan(bandRank("high"));
    expect(bandRank("high")).toBeGreaterThan(bandRank("suspect"));
    expect(bandRank("bogus")).toBeLessThan(bandRank("suspect"));
  });
});

describe("sortRecords", () => {
  const records = [
    record({ train_instance_id: "t1", similarity: 0.91, band: "high" }),
    record({ train_instance_id: "t2", similarity: 1.0, band: "exact" }),
    record({ train_instance_id: "t3", similarity: 0.85, band: "suspect" }),
    record({ train_instance_id: "t4", similarity: 0.91, band: "high" }),
  ];

  it("sorts by similarity in either direction", () => {
    const desc = sortRecords(records, "similarity", "desc");
    expect(desc.map((r) => r.train_instance_id)).toEqual(["t2", "t1", "t4", "t3"]);
    const asc = sortRecords(records, "similarity", "asc");
    expect(asc.map((r) => r.train_instance_id)).toEqual(["t3", "t1", "t4", "t2"]);
  });

  it("keeps server order for equal keys (stable)", () => {
    const desc = sortRecords(records, "similarity", "desc");
    const t1 = desc.findIndex((r) => r.train_instance_id === "t1");
    const t4 = desc.findIndex((r) => r.train_instance_id === "t4");
    expect(t1).toBeLessThan(t4);
    // Stability holds in both directions: ties never flip.
    const asc = sortRecords(records, "similarity", "asc");
    expect(asc.findIndex((r) => r.train_instance_id === "t1")).toBeLessThan(
      asc.findIndex((r) => r.train_instance_id === "t4"),
    );
  });

  it("sorts by band severity, not alphabetically", () => {
    const desc = sortRecords(records, "band", "desc");
    expect(desc.map((r) => r.band)).toEqual(["exact", "high", "high", "suspect"]);
  });

  it("sorts string keys lexicographically", () => {
    const byId = sortRecords(records, "train_instance_id", "asc");
    expect(byId.map((r) => r.train_instance_id)).toEqual(["t1", "t2", "t3", "t4"]);
  });

  it("does not mutate the input", () => {
    const before = records.map((r) => r.train_instance_id);
    sortRecords(records, "similarity", "desc");
    expect(records.map((r) => r.train_instance_id)).toEqual(before);
  });
});

describe("summarize", () => {
  it("builds one row per dataset, most leaks first", () => {
    const payload: LeaksPayload = {
      available: true,
      records: [],
      band_totals: {
        clean_set: { exact: 0, high: 0, suspect: 2 },
        dirty_set: { exact: 3, high: 1, suspect: 0 },
      },
      n_leak: { clean_set: 0, dirty_set: 4 },
    };
    const rows = summarize(payload);
    expect(rows.map((r) => r.dataset)).toEqual(["dirty_set", "clean_set"]);
    expect(rows[0]).toEqual({ dataset: "dirty_set", exact: 3, high: 1, suspect: 0, nLeak: 4 });
    expect(rows[1]?.suspect).toBe(2);
  });

  it("fills zeros for datasets present in only one map", () => {
    const payload: LeaksPayload = {
      available: true,
      records: [],
      band_totals: { only_bands: { exact: 1, high: 0, suspect: 0 } },
      n_leak: { only_count: 2 },
    };
    const rows = summarize(payload);
    expect(rows.map((r) => r.dataset)).toEqual(["only_count", "only_bands"]);
    expect(rows[0]).toEqual({ dataset: "only_count", exact: 0, high: 0, suspect: 0, nLeak: 2 });
    expect(rows[1]?.nLeak).toBe(0);
  });

  it("breaks leak-count ties by dataset name", () => {
    const payload: LeaksPayload = {
      available: true,
      records: [],
      band_totals: {},
      n_leak: { beta: 1, alpha: 1 },
    };
    expect(summarize(payload).map((r) => r.dataset)).toEqual(["alpha", "beta"]);
  });
});

describe("isEmpty", () => {
  it("is empty when no scan is stored or nothing was flagged", () => {
    expect(isEmpty({ available: false, records: [], band_totals: {}, n_leak: {} })).toBe(true);
    expect(isEmpty({ available: true, records: [], band_totals: {}, n_leak: {} })).toBe(true);
    expect(
      isEmpty({ available: true, records: [record({})], band_totals: {}, n_leak: {} }),
    ).toBe(false);
  });
});
