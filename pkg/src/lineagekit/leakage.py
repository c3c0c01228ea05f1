"""Benchmark contamination scanning.

Every training instance is compared against every benchmark item, first
by digest (catches byte-identical and whitespace-variant copies, since
both sides are canonicalized) and then by embedding similarity. Hits are
bucketed into bands: exact (digest equality), high (similarity at or
above the high floor), and suspect (between the floors). Only exact and
high hits count toward a dataset's leak total; suspect hits are reported
for human review but never scored automatically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import CanonicalInstance
from .embedding import EmbeddingProvider, embed_texts
from .textdiff import case_payload

__all__ = [
    "LeakBandConfig",
    "LeakRecord",
    "LeakReport",
    "case_key",
    "decontaminate",
    "extract_case",
    "leak_scan",
]


@dataclass(frozen=True)
class LeakBandConfig:
    """Band floors; exact membership is decided by digest, not similarity."""

    suspect_floor: float = 0.80
    high_floor: float = 0.90

    def __post_init__(self) -> None:
        if not (0.0 < self.suspect_floor < self.high_floor <= 1.0):
            raise ValueError(
                "need 0 < suspect_floor < high_floor <= 1, got "
                f"({self.suspect_floor}, {self.high_floor})"
            )

    def band_of(self, similarity: float) -> str | None:
        """Band for a non-digest-equal pair; None if below every floor."""
        if similarity >= self.high_floor:
            return "high"
        if similarity >= self.suspect_floor:
            return "suspect"
        return None


@dataclass(frozen=True)
class LeakRecord:
    """One flagged (training instance, benchmark item) pair."""

    train_dataset: str
    train_instance_id: str
    train_digest: str
    benchmark_id: str
    benchmark_item_id: str
    benchmark_digest: str
    similarity: float
    band: str

    def to_dict(self) -> dict:
        return {
            "train_dataset": self.train_dataset,
            "train_instance_id": self.train_instance_id,
            "train_digest": self.train_digest,
            "benchmark_id": self.benchmark_id,
            "benchmark_item_id": self.benchmark_item_id,
            "benchmark_digest": self.benchmark_digest,
            "similarity": self.similarity,
            "band": self.band,
        }


@dataclass
class LeakReport:
    records: list[LeakRecord]
    band_totals: dict[str, dict[str, int]]
    n_leak: dict[str, int]
    train_sizes: dict[str, int]
    flagged_instances: dict[str, set[tuple[str, str]]] = field(
        default_factory=dict
    )

    def to_dict(self) -> dict:
        return {
            "records": [r.to_dict() for r in self.records],
            "band_totals": self.band_totals,
            "n_leak": self.n_leak,
            "train_sizes": self.train_sizes,
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


def leak_scan(
    train: Sequence[CanonicalInstance],
    benchmarks: Iterable[Sequence[CanonicalInstance]],
    provider: EmbeddingProvider | None = None,
    bands: LeakBandConfig | None = None,
) -> LeakReport:
    """Exhaustive train-vs-benchmark scan.

    Exact hits come from digest equality alone and never depend on the
    embedding provider. The per-dataset leak count n_leak is the number
    of distinct train instances appearing in the exact or high band.
    """
    provider = provider or EmbeddingProvider()
    bands = bands or LeakBandConfig()
    bench_corpora = [list(b) for b in benchmarks]

    records: list[LeakRecord] = []
    flagged_high: dict[str, set[tuple[str, str]]] = {}
    train_sizes: dict[str, int] = {}
    for inst in train:
        train_sizes[inst.dataset_id] = train_sizes.get(inst.dataset_id, 0) + 1

    train_vectors = None  # embedded lazily, once, only if any benchmark exists
    for bench in bench_corpora:
        if not bench:
            continue
        bench_digests = {}
        for item in bench:
            bench_digests.setdefault(item.digest, item)

        if train_vectors is None:
            train_vectors = embed_texts(
                [t.canonical_prompt for t in train], provider
            )
        bench_vectors = embed_texts(
            [b.canonical_prompt for b in bench], provider
        )
        # (n_train, n_bench) similarity matrix over unit rows; only pairs
        # at or above the suspect floor are materialized as records.
        sims = np.clip(train_vectors @ bench_vectors.T, -1.0, 1.0)

        for inst in train:
            exact_item = bench_digests.get(inst.digest)
            if exact_item is None:
                continue
            records.append(
                LeakRecord(
                    train_dataset=inst.dataset_id,
                    train_instance_id=inst.instance_id,
                    train_digest=inst.digest,
                    benchmark_id=exact_item.dataset_id,
                    benchmark_item_id=exact_item.instance_id,
                    benchmark_digest=exact_item.digest,
                    similarity=1.0,
                    band="exact",
                )
            )
            flagged_high.setdefault(inst.dataset_id, set()).add(
                (inst.dataset_id, inst.instance_id)
            )

        for i, j in np.argwhere(sims >= bands.suspect_floor):
            inst, item = train[int(i)], bench[int(j)]
            if item.digest == inst.digest:
                continue  # covered by the digest path above
            band = bands.band_of(float(sims[i, j]))
            records.append(
                LeakRecord(
                    train_dataset=inst.dataset_id,
                    train_instance_id=inst.instance_id,
                    train_digest=inst.digest,
                    benchmark_id=item.dataset_id,
                    benchmark_item_id=item.instance_id,
                    benchmark_digest=item.digest,
                    similarity=float(sims[i, j]),
                    band=band,
                )
            )
            if band == "high":
                flagged_high.setdefault(inst.dataset_id, set()).add(
                    (inst.dataset_id, inst.instance_id)
                )

    band_totals: dict[str, dict[str, int]] = {}
    for rec in records:
        per = band_totals.setdefault(
            rec.train_dataset, {"exact": 0, "high": 0, "suspect": 0}
        )
        per[rec.band] += 1

    n_leak = {ds: len(instances) for ds, instances in flagged_high.items()}
    for ds in train_sizes:
        n_leak.setdefault(ds, 0)
        band_totals.setdefault(ds, {"exact": 0, "high": 0, "suspect": 0})

    records.sort(
        key=lambda r: (
            r.train_dataset,
            r.band,
            -r.similarity,
            r.train_instance_id,
            r.benchmark_item_id,
        )
    )
    return LeakReport(
        records=records,
        band_totals=band_totals,
        n_leak=n_leak,
        train_sizes=train_sizes,
        flagged_instances=flagged_high,
    )


def extract_case(
    record: LeakRecord, train_text: str, benchmark_text: str
) -> dict:
    """Annotated diff for one flagged pair, ready for review surfaces."""
    payload = case_payload(train_text, benchmark_text)
    payload["record"] = record.to_dict()
    return payload


def case_key(record: LeakRecord) -> str:
    """Stable lookup key for one record's stored case payload."""
    return (
        f"{record.train_dataset}/{record.train_instance_id}"
        f"::{record.benchmark_id}/{record.benchmark_item_id}"
    )


def decontaminate(
    train: Sequence[CanonicalInstance], report: LeakReport
) -> tuple[list[CanonicalInstance], list[CanonicalInstance]]:
    """Split a training corpus into kept and removed instances.

    Removal covers exactly the instances flagged in the exact or high
    band, so rescanning the kept corpus yields zero records in those
    bands.
    """
    flagged: set[tuple[str, str]] = set()
    for instances in report.flagged_instances.values():
        flagged |= instances
    kept: list[CanonicalInstance] = []
    removed: list[CanonicalInstance] = []
    for inst in train:
        if (inst.dataset_id, inst.instance_id) in flagged:
            removed.append(inst)
        else:
            kept.append(inst)
    return kept, removed
