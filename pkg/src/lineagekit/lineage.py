"""Temporal lineage index over canonical instances.

The index maps each prompt digest to the full chronological record of
where that prompt appears across the dataset pool. Building it is a
single chronological traversal: the first dataset to contain a prompt is
its origin, later datasets append occurrences. Everything downstream
(composition reports, reuse statistics, leak flags) reads this structure.

Entries are immutable; merges and relabels produce a new index that
shares untouched entries with the old one, so pipeline phases can hold
snapshots without defensive copying.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Collection, Iterable, Iterator

from .corpus import CanonicalInstance, normalize_prompt

__all__ = [
    "LineageEntry",
    "LineageIndex",
    "Occurrence",
    "answer_consistency",
    "build_index",
    "composition_report",
    "make_entry",
    "mark_unknown",
    "merge_entries",
    "origin_attribution",
    "read_index",
    "reuse_profile",
    "write_index",
]

UNKNOWN = "unknown"


@dataclass(frozen=True)
class Occurrence:
    """One appearance of a prompt: which dataset, which record, when."""

    dataset_id: str
    instance_id: str
    timestamp: dt.date
    answer: str
    source: str

    @property
    def sort_key(self) -> tuple[dt.date, str, str]:
        return (self.timestamp, self.dataset_id, self.instance_id)


@dataclass(frozen=True)
class LineageEntry:
    """One prompt-identity group and its attribution.

    occurrences are sorted ascending by (timestamp, dataset_id,
    instance_id); origin_dataset always matches occurrences[0]. status is
    one of "traced", "unknown", "test_leak".
    """

    digest: str
    canonical_prompt: str
    occurrences: tuple[Occurrence, ...]
    origin_dataset: str
    atomic_source: str
    status: str

    @property
    def origin(self) -> Occurrence:
        return self.occurrences[0]

    def reuse_count(self) -> int:
        return len({o.dataset_id for o in self.occurrences})

    def to_json(self) -> str:
        return json.dumps(
            {
                "digest": self.digest,
                "canonical_prompt": self.canonical_prompt,
                "occurrences": [
                    {
                        "dataset_id": o.dataset_id,
                        "instance_id": o.instance_id,
                        "timestamp": o.timestamp.isoformat(),
                        "answer": o.answer,
                        "source": o.source,
                    }
                    for o in self.occurrences
                ],
                "origin_dataset": self.origin_dataset,
                "atomic_source": self.atomic_source,
                "status": self.status,
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "LineageEntry":
        rec = json.loads(line)
        occs = tuple(
            Occurrence(
                dataset_id=o["dataset_id"],
                instance_id=o["instance_id"],
                timestamp=dt.date.fromisoformat(o["timestamp"]),
                answer=o["answer"],
                source=o["source"],
            )
            for o in rec["occurrences"]
        )
        return cls(
            digest=rec["digest"],
            canonical_prompt=rec["canonical_prompt"],
            occurrences=occs,
            origin_dataset=rec["origin_dataset"],
            atomic_source=rec["atomic_source"],
            status=rec["status"],
        )


def make_entry(
    digest: str,
    canonical_prompt: str,
    occurrences: Iterable[Occurrence],
    benchmark_datasets: Collection[str] = (),
) -> LineageEntry:
    """Assemble an entry, deriving origin, atomic source, and status.

    Attribution rule: the latest occurrence carrying an explicit (non-
    sentinel) source label wins, since later releases tend to ship richer
    metadata. An entry originating in an evaluation-only dataset that
    reappears elsewhere is flagged test_leak.
    """
    occs = tuple(sorted(occurrences, key=lambda o: o.sort_key))
    if not occs:
        raise ValueError("entry needs at least one occurrence")
    origin = occs[0]

    atomic_source = UNKNOWN
    for o in occs:
        if o.source != UNKNOWN:
            atomic_source = o.source

    status = "traced" if atomic_source != UNKNOWN else UNKNOWN
    if origin.dataset_id in benchmark_datasets and any(
        o.dataset_id not in benchmark_datasets for o in occs
    ):
        status = "test_leak"

    return LineageEntry(
        digest=digest,
        canonical_prompt=canonical_prompt,
        occurrences=occs,
        origin_dataset=origin.dataset_id,
        atomic_source=atomic_source,
        status=status,
    )


@dataclass(frozen=True)
class LineageIndex:
    """Map digest -> LineageEntry, plus reconciliation counts."""

    entries: dict[str, LineageEntry]
    total_instances: int
    benchmark_datasets: frozenset[str] = field(default_factory=frozenset)

    def occurrence_count(self) -> int:
        return sum(len(e.occurrences) for e in self.entries.values())

    def check_complete(self) -> None:
        """Completeness reconciliation: no instance lost or duplicated."""
        got = self.occurrence_count()
        if got != self.total_instances:
            raise AssertionError(
                f"index holds {got} occurrences, expected {self.total_instances}"
            )


def build_index(
    instances: Iterable[CanonicalInstance],
    benchmark_datasets: Collection[str] = (),
) -> LineageIndex:
    """Stage-1 build: chronological traversal, first seen sets origin.

    Input order does not matter; instances are sorted by (timestamp,
    dataset_id, instance_id) first, so sharded ingestion and sequential
    ingestion produce identical indexes.
    """
    ordered = sorted(
        instances, key=lambda r: (r.timestamp, r.dataset_id, r.instance_id)
    )
    groups: dict[str, list[Occurrence]] = {}
    prompts: dict[str, str] = {}
    for inst in ordered:
        occ = Occurrence(
            dataset_id=inst.dataset_id,
            instance_id=inst.instance_id,
            timestamp=inst.timestamp,
            answer=inst.answer,
            source=inst.source,
        )
        if inst.digest in groups:
            groups[inst.digest].append(occ)
        else:
            groups[inst.digest] = [occ]
            prompts[inst.digest] = inst.canonical_prompt

    bench = frozenset(benchmark_datasets)
    entries = {
        h: make_entry(h, prompts[h], occs, bench) for h, occs in groups.items()
    }
    index = LineageIndex(
        entries=entries,
        total_instances=len(ordered),
        benchmark_datasets=bench,
    )
    index.check_complete()
    return index


def merge_entries(
    index: LineageIndex, from_digest: str, into_digest: str
) -> LineageIndex:
    """Fold one entry's occurrences into another and drop its key.

    The surviving entry keeps its own digest and canonical prompt; the
    combined occurrence list is re-sorted and attribution re-derived.
    Total instance count is preserved.
    """
    if from_digest not in index.entries:
        raise KeyError(f"no entry for digest {from_digest}")
    if into_digest not in index.entries:
        raise KeyError(f"no entry for digest {into_digest}")
    if from_digest == into_digest:
        raise ValueError("cannot merge an entry into itself")

    src = index.entries[from_digest]
    dst = index.entries[into_digest]
    merged = make_entry(
        dst.digest,
        dst.canonical_prompt,
        dst.occurrences + src.occurrences,
        index.benchmark_datasets,
    )
    entries = dict(index.entries)
    del entries[from_digest]
    entries[into_digest] = merged
    out = LineageIndex(
        entries=entries,
        total_instances=index.total_instances,
        benchmark_datasets=index.benchmark_datasets,
    )
    out.check_complete()
    return out


def mark_unknown(index: LineageIndex, digests: Collection[str]) -> LineageIndex:
    """Force residual entries to unknown status and source."""
    entries = dict(index.entries)
    for h in digests:
        e = entries[h]
        entries[h] = LineageEntry(
            digest=e.digest,
            canonical_prompt=e.canonical_prompt,
            occurrences=e.occurrences,
            origin_dataset=e.origin_dataset,
            atomic_source=UNKNOWN,
            status=UNKNOWN,
        )
    return LineageIndex(
        entries=entries,
        total_instances=index.total_instances,
        benchmark_datasets=index.benchmark_datasets,
    )


def answer_consistency(
    index: LineageIndex,
    answer_eq: Callable[[str, str], bool] | None = None,
) -> float:
    """Fraction of entries whose answers agree across all occurrences.

    Default equivalence is whitespace-normalized string equality. Empty
    answers mean the upstream dump shipped none; they are skipped rather
    than counted as disagreements. Single-occurrence entries are
    consistent by definition.
    """
    if not index.entries:
        raise ValueError("answer consistency undefined on an empty index")
    if answer_eq is None:
        answer_eq = lambda a, b: normalize_prompt(a) == normalize_prompt(b)

    consistent = 0
    for entry in index.entries.values():
        answers = [o.answer for o in entry.occurrences if o.answer.strip()]
        ok = all(answer_eq(answers[0], a) for a in answers[1:])
        consistent += 1 if ok else 0
    return consistent / len(index.entries)


def reuse_profile(
    index: LineageIndex, cap: int = 5
) -> tuple[dict[int, int], float]:
    """Histogram of cross-dataset reuse plus the within-cap fraction.

    The histogram counts entries by how many distinct datasets contain
    them. P_reuse is instance-weighted: the fraction of occurrences that
    live in entries reused by at most `cap` datasets.
    """
    if cap < 1:
        raise ValueError("reuse cap must be >= 1")
    histogram: dict[int, int] = {}
    within = 0
    total = 0
    for entry in index.entries.values():
        reuse = entry.reuse_count()
        histogram[reuse] = histogram.get(reuse, 0) + 1
        total += len(entry.occurrences)
        if reuse <= cap:
            within += len(entry.occurrences)
    p_reuse = within / total if total else 1.0
    return dict(sorted(histogram.items())), p_reuse


def composition_report(
    index: LineageIndex,
) -> dict[str, dict[str, tuple[int, float]]]:
    """Per-dataset breakdown of instances by atomic source.

    Counts are over occurrences, so a dataset's proportions always sum
    to 1 over its own instances. Untraced entries land in the "unknown"
    bucket.
    """
    counts: dict[str, dict[str, int]] = {}
    for entry in index.entries.values():
        for occ in entry.occurrences:
            per_ds = counts.setdefault(occ.dataset_id, {})
            per_ds[entry.atomic_source] = per_ds.get(entry.atomic_source, 0) + 1

    report: dict[str, dict[str, tuple[int, float]]] = {}
    for ds, per_source in counts.items():
        total = sum(per_source.values())
        report[ds] = {
            src: (n, n / total) for src, n in sorted(per_source.items())
        }
    return report


def origin_attribution(index: LineageIndex) -> dict[str, str]:
    """Map each atomic source to the dataset that first introduced it.

    First introduction = minimum origin timestamp over entries carrying
    the source, ties broken by dataset_id lexicographic order. The
    sentinel "unknown" label is not attributed.
    """
    best: dict[str, tuple[dt.date, str]] = {}
    for entry in index.entries.values():
        src = entry.atomic_source
        if src == UNKNOWN:
            continue
        key = (entry.origin.timestamp, entry.origin_dataset)
        if src not in best or key < best[src]:
            best[src] = key
    return {src: ds for src, (_, ds) in sorted(best.items())}


def write_index(index: LineageIndex, path: str | Path) -> int:
    """Export entries as JSONL sorted by digest; byte-stable per state."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for h in sorted(index.entries):
            fh.write(index.entries[h].to_json() + "\n")
            n += 1
    return n


def read_index(
    path: str | Path, benchmark_datasets: Collection[str] = ()
) -> LineageIndex:
    entries: dict[str, LineageEntry] = {}
    total = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            e = LineageEntry.from_json(line)
            entries[e.digest] = e
            total += len(e.occurrences)
    return LineageIndex(
        entries=entries,
        total_instances=total,
        benchmark_datasets=frozenset(benchmark_datasets),
    )


def iter_entries(index: LineageIndex) -> Iterator[LineageEntry]:
    for h in sorted(index.entries):
        yield index.entries[h]
