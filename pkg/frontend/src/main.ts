// DOM glue: binds the queue state machine, diff pane, status bar, and
// leak browser to the page. All content lands via textContent, never
// markup injection.

import { AuditApi, type LeakRecord, type Verdict } from "./api.js";
import { paneModel, type Segment } from "./diffview.js";
import { isEmpty, sortRecords, summarize, type SortDir, type SortKey } from "./leaks.js";
import { ReviewQueue } from "./queue.js";

const api = new AuditApi("");
const queue = new ReviewQueue(api, { reviewer: "ui" });

let view: "queue" | "leaks" = "queue";
let leakSort: { key: SortKey; dir: SortDir } = { key: "similarity", dir: "desc" };

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node;
}

function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

function renderStatus(): void {
  const counts = queue.counts;
  const bar = el("status-bar");
  clear(bar);
  const parts = counts
    ? [
        `phase ${counts.phase}`,
        `|U| ${counts.unmatched}`,
        `pending ${counts.pending_candidates}`,
        `iteration ${counts.iteration}`,
        `matched ${counts.matched}/${counts.total}`,
      ]
    : ["connecting"];
  if (queue.unsynced.length > 0) {
    parts.push(`unsynced ${queue.unsynced.length} (press u to retry)`);
  }
  for (const text of parts) {
    const span = document.createElement("span");
    span.className = "stat";
    span.textContent = text;
    bar.appendChild(span);
  }
}

function segmentNodes(segments: Segment[]): DocumentFragment {
  const fragment = document.createDocumentFragment();
  for (const segment of segments) {
    const span = document.createElement("span");
    span.className = `seg-${segment.cls}`;
    span.textContent = segment.cls === "gap" ? "·" : segment.text;
    fragment.appendChild(span);
  }
  return fragment;
}

async function renderPair(): Promise<void> {
  const pane = el("diff-pane");
  const meta = el("pair-meta");
  clear(pane);
  clear(meta);
  const item = queue.current();
  if (item === null) {
    meta.textContent = queue.totalPending === 0 ? "queue empty" : "loading";
    return;
  }
  meta.textContent = `${item.pair_id}  cosine ${item.similarity.toFixed(4)}  (${queue.cursor + 1} of ${queue.items.length} loaded, ${queue.totalPending} pending)`;
  try {
    const detail = await api.pair(item.pair_id);
    const model = paneModel(detail.diff);
    const left = document.createElement("div");
    left.className = "pane-side";
    const right = document.createElement("div");
    right.className = "pane-side";
    left.appendChild(segmentNodes(model.left));
    right.appendChild(segmentNodes(model.right));
    pane.appendChild(left);
    pane.appendChild(right);
    if (model.identical) {
      const note = document.createElement("div");
      note.className = "identical-note";
      note.textContent = "texts are identical";
      pane.appendChild(note);
    }
  } catch {
    pane.textContent = "pair no longer available; press g to refresh";
  }
}

function renderQueueList(): void {
  const list = el("queue-list");
  clear(list);
  queue.items.forEach((item, index) => {
    const row = document.createElement("div");
    row.className = index === queue.cursor ? "queue-row current" : "queue-row";
    row.textContent = `${item.similarity.toFixed(3)}  ${item.pair_id}`;
    row.addEventListener("click", () => {
      queue.cursor = index;
      void rerender();
    });
    list.appendChild(row);
  });
}

async function renderLeaks(): Promise<void> {
  const summaryNode = el("leak-summary");
  const tableNode = el("leak-table");
  clear(summaryNode);
  clear(tableNode);
  const payload = await api.leaks();
  if (isEmpty(payload)) {
    summaryNode.textContent = payload.available
      ? "leak scan found nothing"
      : "no leak scan stored for this run";
    return;
  }
  for (const row of summarize(payload)) {
    const div = document.createElement("div");
    div.className = "leak-summary-row";
    div.textContent = `${row.dataset}: ${row.nLeak} flagged (exact ${row.exact}, high ${row.high}, suspect ${row.suspect})`;
    summaryNode.appendChild(div);
  }

  const header = document.createElement("div");
  header.className = "leak-row leak-header";
  const columns: Array<[SortKey, string]> = [
    ["train_dataset", "dataset"],
    ["train_instance_id", "instance"],
    ["benchmark_item_id", "benchmark item"],
    ["similarity", "similarity"],
    ["band", "band"],
  ];
  for (const [key, label] of columns) {
    const cell = document.createElement("span");
    cell.textContent = leakSort.key === key ? `${label} ${leakSort.dir === "asc" ? "^" : "v"}` : label;
    cell.addEventListener("click", () => {
      leakSort =
        leakSort.key === key
          ? { key, dir: leakSort.dir === "asc" ? "desc" : "asc" }
          : { key, dir: "desc" };
      void renderLeaks();
    });
    header.appendChild(cell);
  }
  tableNode.appendChild(header);

  for (const record of sortRecords(payload.records, leakSort.key, leakSort.dir)) {
    const row = document.createElement("div");
    row.className = "leak-row";
    const cells = [
      record.train_dataset,
      record.train_instance_id,
      `${record.benchmark_id}/${record.benchmark_item_id}`,
      record.similarity.toFixed(4),
      record.band,
    ];
    cells.forEach((text, i) => {
      const cell = document.createElement("span");
      cell.textContent = text;
      if (i === 4) cell.className = `band band-${record.band}`;
      row.appendChild(cell);
    });
    row.addEventListener("click", () => void renderLeakCase(record));
    tableNode.appendChild(row);
  }
}

async function renderLeakCase(record: LeakRecord): Promise<void> {
  const pane = el("leak-case");
  clear(pane);
  try {
    const leakCase = await api.leakCase(record);
    const model = paneModel(leakCase);
    const left = document.createElement("div");
    left.className = "pane-side";
    const right = document.createElement("div");
    right.className = "pane-side";
    left.appendChild(segmentNodes(model.left));
    right.appendChild(segmentNodes(model.right));
    pane.appendChild(left);
    pane.appendChild(right);
    if (model.identical) {
      const note = document.createElement("div");
      note.className = "identical-note";
      note.textContent = "canonical texts are identical";
      pane.appendChild(note);
    }
  } catch {
    pane.textContent = "no stored case for this record";
  }
}

async function rerender(): Promise<void> {
  el("queue-view").style.display = view === "queue" ? "" : "none";
  el("leaks-view").style.display = view === "leaks" ? "" : "none";
  renderStatus();
  if (view === "queue") {
    renderQueueList();
    await renderPair();
  } else {
    await renderLeaks();
  }
}

async function decide(verdict: Verdict): Promise<void> {
  await queue.decide(verdict);
  if (queue.items.length === 0 && queue.totalPending > 0) {
    await queue.refresh();
  }
  await rerender();
}

function onKey(event: KeyboardEvent): void {
  const target = event.target as HTMLElement | null;
  if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) return;
  if (view === "queue") {
    if (event.key === "a") void decide("accept");
    else if (event.key === "r") void decide("reject");
    else if (event.key === "s") void decide("skip");
    else if (event.key === "j" || event.key === "ArrowDown") {
      queue.next();
      void rerender();
    } else if (event.key === "k" || event.key === "ArrowUp") {
      queue.prev();
      void rerender();
    } else if (event.key === "u") {
      void queue.retryUnsynced().then(rerender);
    }
  }
  if (event.key === "g") {
    void queue.refresh().then(rerender);
  } else if (event.key === "l") {
    view = view === "queue" ? "leaks" : "queue";
    void rerender();
  }
}

async function start(): Promise<void> {
  document.addEventListener("keydown", onKey);
  await queue.refresh();
  await rerender();
}

void start();
