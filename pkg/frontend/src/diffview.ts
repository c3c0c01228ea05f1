// Pure render model for the side-by-side diff pane. The span structure
// from the server carries exact source text; this module only decides
// what each column shows and which style class marks it. DOM assembly
// stays in main.ts.

import type { CasePayload, DiffSpan } from "./api.js";
import { renderVisible } from "./markers.js";

export type Side = "left" | "right";

export interface Segment {
  cls: "equal" | "changed" | "gap";
  text: string;
}

const SIDE_OPS: Record<Side, { present: Set<string> }> = {
  left: { present: new Set(["equal", "replace", "delete"]) },
  right: { present: new Set(["equal", "replace", "insert"]) },
};

/** One column of the pane; changed text is marker-rendered. */
export function renderSide(spans: DiffSpan[], side: Side): Segment[] {
  const segments: Segment[] = [];
  for (const span of spans) {
    const text = side === "left" ? span.left : span.right;
    if (span.op === "equal") {
      segments.push({ cls: "equal", text });
      continue;
    }
    if (!SIDE_OPS[side].present.has(span.op) || text === "") {
      // The other side has content here; keep columns aligned.
      segments.push({ cls: "gap", text: "" });
      continue;
    }
    segments.push({ cls: "changed", text: renderVisible(text) });
  }
  return segments;
}

/** Source text reassembled from spans; must equal the original bytes. */
export function sideText(spans: DiffSpan[], side: Side): string {
  return spans.map((s) => (side === "left" ? s.left : s.right)).join("");
}

export interface PaneModel {
  left: Segment[];
  right: Segment[];
  identical: boolean;
  changedCount: number;
}

export function paneModel(diff: CasePayload): PaneModel {
  return {
    left: renderSide(diff.spans, "left"),
    right: renderSide(diff.spans, "right"),
    identical: diff.identical,
    changedCount: diff.spans.filter((s) => s.op !== "equal").length,
  };
}
