// Leak browser model: per-dataset band summaries and a sortable record
// table. Pure data shaping; DOM assembly stays in main.ts.

import type { LeakRecord, LeaksPayload } from "./api.js";

export type SortKey = "similarity" | "band" | "train_dataset" | "train_instance_id" | "benchmark_item_id";
export type SortDir = "asc" | "desc";

// exact outranks high outranks suspect when sorting by band severity.
const BAND_RANK: Record<string, number> = { exact: 2, high: 1, suspect: 0 };

export function bandRank(band: string): number {
  return BAND_RANK[band] ?? -1;
}

/** Stable sort; equal keys keep the server's record order. */
export function sortRecords(records: LeakRecord[], key: SortKey, dir: SortDir): LeakRecord[] {
  const keyed = records.map((record, index) => ({ record, index }));
  const sign = dir === "asc" ? 1 : -1;
  keyed.sort((a, b) => {
    let cmp: number;
    if (key === "similarity") {
      cmp = a.record.similarity - b.record.similarity;
    } else if (key === "band") {
      cmp = bandRank(a.record.band) - bandRank(b.record.band);
    } else {
      cmp = a.record[key] < b.record[key] ? -1 : a.record[key] > b.record[key] ? 1 : 0;
    }
    return cmp !== 0 ? sign * cmp : a.index - b.index;
  });
  return keyed.map((k) => k.record);
}

export interface DatasetSummary {
  dataset: string;
  exact: number;
  high: number;
  suspect: number;
  nLeak: number;
}

/** One row per training dataset, sorted by leak count then name. */
export function summarize(payload: LeaksPayload): DatasetSummary[] {
  const datasets = new Set([
    ...Object.keys(payload.band_totals),
    ...Object.keys(payload.n_leak),
  ]);
  const rows = [...datasets].map((dataset) => {
    const totals = payload.band_totals[dataset] ?? { exact: 0, high: 0, suspect: 0 };
    return {
      dataset,
      exact: totals.exact,
      high: totals.high,
      suspect: totals.suspect,
      nLeak: payload.n_leak[dataset] ?? 0,
    };
  });
  rows.sort((a, b) => b.nLeak - a.nLeak || (a.dataset < b.dataset ? -1 : 1));
  return rows;
}

export function isEmpty(payload: LeaksPayload): boolean {
  return !payload.available || payload.records.length === 0;
}
