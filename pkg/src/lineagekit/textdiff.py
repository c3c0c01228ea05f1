"""Character-level diffs with audit-friendly whitespace rendering.

Near-duplicate pairs frequently differ only in formatting: a newline
where the other text has a space, a doubled blank, shifted math
delimiters. A reviewer cannot judge that from raw text, so the renderer
makes the invisible characters visible with distinct markers. Markers
are presentation-only; the span structure always carries the exact
source text.
"""

from __future__ import annotations

from dataclasses import dataclass
from difflib import SequenceMatcher

__all__ = [
    "DiffSpan",
    "case_payload",
    "changed_spans",
    "diff_spans",
    "render_visible",
]

# Presentation markers: space, tab, CR, LF, and TeX display-math fences.
_VISIBLE = {
    " ": "␣",   # open box
    "\t": "⇥",  # rightwards tab arrow
    "\r": "␍",  # CR symbol
    "\n": "⏎\n",  # return symbol, keeping the actual break
}


@dataclass(frozen=True)
class DiffSpan:
    """One aligned region: op is equal/replace/delete/insert."""

    op: str
    left: str
    right: str

    def to_dict(self) -> dict[str, str]:
        return {"op": self.op, "left": self.left, "right": self.right}


def diff_spans(left: str, right: str) -> list[DiffSpan]:
    """Aligned character-level spans covering both texts completely.

    Concatenating the left fields of all spans reproduces the left text
    exactly, and likewise for the right.
    """
    matcher = SequenceMatcher(a=left, b=right, autojunk=False)
    spans: list[DiffSpan] = []
    for op, i1, i2, j1, j2 in matcher.get_opcodes():
        spans.append(DiffSpan(op=op, left=left[i1:i2], right=right[j1:j2]))
    return spans


def changed_spans(left: str, right: str) -> list[DiffSpan]:
    """Only the differing regions; empty list means identical texts."""
    return [s for s in diff_spans(left, right) if s.op != "equal"]


def render_visible(text: str) -> str:
    """Make whitespace and math fences visible for review display.

    Spaces become open boxes, tabs and CR/LF get control pictures, and
    display-math fences are bracketed so delimiter-only differences
    stand out.
    """
    out: list[str] = []
    i = 0
    while i < len(text):
        two = text[i : i + 2]
        if two == "\\[":
            out.append("⟦\\[⟧")
            i += 2
            continue
        if two == "\\]":
            out.append("⟦\\]⟧")
            i += 2
            continue
        ch = text[i]
        out.append(_VISIBLE.get(ch, ch))
        i += 1
    return "".join(out)


def case_payload(left: str, right: str) -> dict:
    """Everything a review surface needs to show one pair."""
    spans = diff_spans(left, right)
    return {
        "spans": [s.to_dict() for s in spans],
        "identical": all(s.op == "equal" for s in spans),
        "left_visible": render_visible(left),
        "right_visible": render_visible(right),
    }
