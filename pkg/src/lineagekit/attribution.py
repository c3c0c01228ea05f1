"""Per-source counterfactual outcome labeling and learnability scoring.

For each atomic source, a checkpoint trained only on that source is
compared against the untrained base checkpoint on the same instances.
The two booleans (base correct, trained correct) put every instance in
one of four behavioral categories:

  00 unsolvable, 01 genuinely learnable, 10 degrade, 11 overly easy

The learnability score is the category proportions weighted by
capacity-dependent utilities: what counts as a useful instance differs
between small models (which benefit from easier material) and large ones
(which only gain from genuinely learnable instances).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .scoring import interpolate

__all__ = [
    "AttributionResult",
    "CheckpointInfo",
    "OutcomePair",
    "SCAConfig",
    "alphas_for_scale",
    "attribute_outcomes",
    "category_proportions",
    "label_instance",
    "learnability_score",
    "load_checkpoint_manifest",
    "load_outcomes",
    "pair_outcomes",
]

CATEGORIES = ("00", "01", "10", "11")


def label_instance(base_correct: bool, rl_correct: bool) -> str:
    """Two-bit category: first digit is the base checkpoint's outcome."""
    return f"{int(bool(base_correct))}{int(bool(rl_correct))}"


def category_proportions(labels: Sequence[str]) -> dict[str, float]:
    """Proportion of instances in each category; always sums to 1."""
    if not labels:
        raise ValueError("cannot compute proportions of an empty label set")
    counts = {c: 0 for c in CATEGORIES}
    for lab in labels:
        if lab not in counts:
            raise ValueError(f"unknown category label: {lab!r}")
        counts[lab] += 1
    n = len(labels)
    return {c: counts[c] / n for c in CATEGORIES}


@dataclass(frozen=True)
class SCAConfig:
    """Utility anchors per category, ordered (a01, a11, a10, a00)."""

    alphas_1b: tuple[float, float, float, float] = (-0.3, -0.5, 1.5, -1.5)
    alphas_8b: tuple[float, float, float, float] = (1.5, -0.8, 0.5, -0.8)


def alphas_for_scale(
    m: float, config: SCAConfig | None = None
) -> tuple[float, float, float, float]:
    """Interpolated (a01, a11, a10, a00) at model scale m (parameters)."""
    config = config or SCAConfig()
    return tuple(
        interpolate(m, a, b)
        for a, b in zip(config.alphas_1b, config.alphas_8b)
    )  # type: ignore[return-value]


def learnability_score(
    proportions: Mapping[str, float],
    alphas: Sequence[float],
) -> float:
    """Utility-weighted sum over category proportions.

    alphas are ordered (a01, a11, a10, a00), matching alphas_for_scale.
    """
    a01, a11, a10, a00 = alphas
    return (
        a01 * proportions["01"]
        + a11 * proportions["11"]
        + a10 * proportions["10"]
        + a00 * proportions["00"]
    )


@dataclass(frozen=True)
class OutcomePair:
    """One instance's correctness under the base and per-source checkpoints."""

    digest: str
    atomic_source: str
    base_correct: bool
    rl_correct: bool

    @property
    def category(self) -> str:
        return label_instance(self.base_correct, self.rl_correct)


@dataclass(frozen=True)
class CheckpointInfo:
    checkpoint_id: str
    role: str  # "base" or an atomic-source label
    model_scale: float


@dataclass
class AttributionResult:
    """Category proportions and score, plus what could not be paired."""

    proportions: dict[str, float]
    l_sca: float
    alphas: tuple[float, float, float, float]
    labels: dict[str, str] = field(default_factory=dict)
    unpaired: list[str] = field(default_factory=list)


def load_checkpoint_manifest(path: str | Path) -> dict[str, CheckpointInfo]:
    """Checkpoint registry: JSON map checkpoint_id -> {role, model_scale}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    out: dict[str, CheckpointInfo] = {}
    for cid, info in raw.items():
        out[cid] = CheckpointInfo(
            checkpoint_id=cid,
            role=info["role"],
            model_scale=float(info["model_scale"]),
        )
    return out


def _as_correct(value) -> bool:
    # Outcome files may carry booleans or sample accuracies; an accuracy
    # is counted correct at >= 0.5.
    if isinstance(value, bool):
        return value
    return float(value) >= 0.5


def load_outcomes(path: str | Path) -> dict[tuple[str, str], bool]:
    """Read one outcome file: JSONL {digest, checkpoint_id, correct}."""
    out: dict[tuple[str, str], bool] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out[(rec["digest"], rec["checkpoint_id"])] = _as_correct(
                rec["correct"]
            )
    return out


def pair_outcomes(
    outcomes: Mapping[tuple[str, str], bool],
    checkpoints: Mapping[str, CheckpointInfo],
    sources: Mapping[str, str],
) -> tuple[list[OutcomePair], list[str]]:
    """Join base and per-source outcomes into counterfactual pairs.

    sources maps digest -> atomic source label. A digest pairs up only
    when it has a base outcome and an outcome from the checkpoint whose
    role equals its own source; everything else lands in the unpaired
    list (a source with no trained checkpoint cannot be assessed).
    """
    base_ids = [c.checkpoint_id for c in checkpoints.values() if c.role == "base"]
    if len(base_ids) != 1:
        raise ValueError(
            f"checkpoint manifest must name exactly one base, got {len(base_ids)}"
        )
    base_id = base_ids[0]
    by_role = {
        c.role: c.checkpoint_id
        for c in checkpoints.values()
        if c.role != "base"
    }

    pairs: list[OutcomePair] = []
    unpaired: list[str] = []
    for digest in sorted(sources):
        src = sources[digest]
        ckpt = by_role.get(src)
        base_out = outcomes.get((digest, base_id))
        rl_out = outcomes.get((digest, ckpt)) if ckpt else None
        if base_out is None or rl_out is None:
            unpaired.append(digest)
            continue
        pairs.append(
            OutcomePair(
                digest=digest,
                atomic_source=src,
                base_correct=base_out,
                rl_correct=rl_out,
            )
        )
    return pairs, unpaired


def attribute_outcomes(
    pairs: Iterable[OutcomePair],
    m: float,
    unpaired: Sequence[str] = (),
    config: SCAConfig | None = None,
) -> AttributionResult:
    """Label pairs, compute proportions, and score at model scale m."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no counterfactual pairs to attribute")
    labels = {p.digest: p.category for p in pairs}
    proportions = category_proportions(list(labels.values()))
    alphas = alphas_for_scale(m, config)
    return AttributionResult(
        proportions=proportions,
        l_sca=learnability_score(proportions, alphas),
        alphas=alphas,
        labels=labels,
        unpaired=list(unpaired),
    )
