// Visible-whitespace rendering for review panes, mirroring the server's
// diff convention: spaces, tabs, CR and LF get control pictures, and
// TeX display-math fences are bracketed so delimiter-only differences
// stand out. Markers are presentation-only; stripMarkers recovers the
// exact source text.

const CHAR_MARKERS: Record<string, string> = {
  " ": "␣", // ␣ open box
  "\t": "⇥", // ⇥ rightwards tab arrow
  "\r": "␍", // ␍ CR symbol
  "\n": "⏎\n", // ⏎ return symbol, keeping the actual break
};

const MATH_OPEN = "⟦\\[⟧"; // ⟦\[⟧
const MATH_CLOSE = "⟦\\]⟧"; // ⟦\]⟧

export function renderVisible(text: string): string {
  const out: string[] = [];
  let i = 0;
  while (i < text.length) {
    const two = text.slice(i, i + 2);
    if (two === "\\[") {
      out.push(MATH_OPEN);
      i += 2;
      continue;
    }
    if (two === "\\]") {
      out.push(MATH_CLOSE);
      i += 2;
      continue;
    }
    const ch = text[i] as string;
    out.push(CHAR_MARKERS[ch] ?? ch);
    i += 1;
  }
  return out.join("");
}

/** Inverse of renderVisible for texts that contain no marker glyphs. */
export function stripMarkers(rendered: string): string {
  return rendered
    .replaceAll(MATH_OPEN, "\\[")
    .replaceAll(MATH_CLOSE, "\\]")
    .replaceAll("⏎\n", "\n")
    .replaceAll("␣", " ")
    .replaceAll("⇥", "\t")
    .replaceAll("␍", "\r");
}
