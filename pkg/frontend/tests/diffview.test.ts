import { describe, expect, it } from "vitest";
import type { CasePayload, DiffSpan } from "../src/api.js";
import { paneModel, renderSide, sideText } from "../src/diffview.js";

const SPANS: DiffSpan[] = [
  { op: "equal", left: "find the ", right: "find the " },
  { op: "replace", left: "integral", right: "intergal" },
  { op: "equal", left: " of x", right: " of x" },
  { op: "insert", left: "", right: " squared" },
  { op: "delete", left: " now", right: "" },
];

describe("renderSide", () => {
  it("passes equal text through raw and marks changed text", () => {
    const left = renderSide(SPANS, "left");
    expect(left[0]).toEqual({ cls: "equal", text: "find the " });
    expect(left[1]).toEqual({ cls: "changed", text: "integral" });
  });

  it("renders whitespace markers only inside changed spans", () => {
    const spans: DiffSpan[] = [
      { op: "equal", left: "a b", right: "a b" },
      { op: "replace", left: "c d", right: "c  d" },
    ];
    expect(renderSide(spans, "left").map((s) => s.text)).toEqual(["a b", "c␣d"]);
    expect(renderSide(spans, "right").map((s) => s.text)).toEqual(["a b", "c␣␣d"]);
  });

  it("keeps columns aligned with gaps where one side has nothing", () => {
    const left = renderSide(SPANS, "left");
    const right = renderSide(SPANS, "right");
    expect(left.length).toBe(right.length);
    expect(left[3]).toEqual({ cls: "gap", text: "" }); // insert: right only
    expect(right[4]).toEqual({ cls: "gap", text: "" }); // delete: left only
    expect(right[3]).toEqual({ cls: "changed", text: "␣squared" });
    expect(left[4]).toEqual({ cls: "changed", text: "␣now" });
  });
});

describe("sideText", () => {
  it("reassembles the exact source text from spans", () => {
    expect(sideText(SPANS, "left")).toBe("find the integral of x now");
    expect(sideText(SPANS, "right")).toBe("find the intergal of x squared");
  });
});

describe("paneModel", () => {
  it("carries the identical flag and counts changed spans", () => {
    const diff: CasePayload = {
      spans: SPANS,
      identical: false,
      left_visible: "",
      right_visible: "",
    };
    const model = paneModel(diff);
    expect(model.identical).toBe(false);
    expect(model.changedCount).toBe(3);
    expect(model.left.length).toBe(model.right.length);
  });

  it("renders an identical pair as one equal span per side", () => {
    const diff: CasePayload = {
      spans: [{ op: "equal", left: "same text", right: "same text" }],
      identical: true,
      left_visible: "same␣text",
      right_visible: "same␣text",
    };
    const model = paneModel(diff);
    expect(model.identical).toBe(true);
    expect(model.changedCount).toBe(0);
    expect(model.left).toEqual([{ cls: "equal", text: "same text" }]);
  });
});
