"""Dataset ingestion and canonicalization.

Raw dataset dumps are heterogeneous: field names differ, prompts carry
per-dataset instruction boilerplate, and metadata is ragged. This module
turns each raw record into a ``CanonicalInstance`` whose prompt text is
normalized and content-addressed, so that identical questions collide on
the same digest regardless of upstream formatting.

Normalization is deliberately conservative: Unicode composed form,
whitespace-run collapse, and trim. Anything dataset-specific (instruction
suffixes, template prefixes) is handled by ordered strip rules declared in
the dataset's adapter config, since no single rule set survives contact
with every dump.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

__all__ = [
    "AdapterConfig",
    "CanonicalInstance",
    "CorpusError",
    "DatasetManifest",
    "DEFAULT_MCQ_PATTERNS",
    "canonicalize_record",
    "detect_mcq",
    "hash_prompt",
    "ingest_manifest",
    "load_manifest",
    "load_manifests",
    "normalize_prompt",
    "read_corpus",
    "write_corpus",
]


class CorpusError(ValueError):
    """Raised for malformed manifests, records, or adapter configs."""


# Whitespace runs collapsed by normalization: space, tab, CR, LF.
_WS_RUN = re.compile(r"[ \t\r\n]+")

# Default MCQ option markers: "(A)".."(E)" anywhere, "A.".."E." line-initial.
DEFAULT_MCQ_PATTERNS = (
    r"\(([A-E])\)",
    r"(?:^|\n)\s*([A-E])\.",
)


def normalize_prompt(text: str) -> str:
    """Canonicalize prompt text: NFC, collapse whitespace runs, trim.

    Idempotent and content-preserving; only space/tab/CR/LF runs are
    touched, each replaced by a single space.
    """
    composed = unicodedata.normalize("NFC", text)
    return _WS_RUN.sub(" ", composed).strip(" ")


def hash_prompt(canonical_prompt: str) -> str:
    """SHA-1 digest of the UTF-8 bytes, as 40 lowercase hex chars."""
    return hashlib.sha1(canonical_prompt.encode("utf-8")).hexdigest()


def detect_mcq(prompt: str, patterns: Iterable[str] | None = None) -> bool:
    """True iff at least 3 distinct option markers match the prompt.

    Markers are identified by the first capture group when present
    (so "(B)" and a line-initial "B." count as the same marker), else by
    the matched text. Adding markers can only flip False -> True.
    """
    pats = tuple(patterns) if patterns is not None else DEFAULT_MCQ_PATTERNS
    markers: set[str] = set()
    for pat in pats:
        for m in re.finditer(pat, prompt):
            markers.add(m.group(1) if m.groups() else m.group(0))
    return len(markers) >= 3


@dataclass
class AdapterConfig:
    """Per-dataset extraction rules.

    field_map values are dotted path expressions into the raw record
    (e.g. "data.problem"); list elements are addressed by integer
    segments. strip_patterns are applied to the prompt in declared order;
    each rule is {"kind": "prefix"|"suffix"|"regex", "value": ...}.
    """

    field_map: dict[str, str]
    strip_patterns: list[dict[str, str]] = field(default_factory=list)
    mcq_patterns: list[str] | None = None
    default_source: str | None = None

    def __post_init__(self) -> None:
        if "prompt" not in self.field_map:
            raise CorpusError("adapter field_map must name a prompt field")
        for rule in self.strip_patterns:
            kind = rule.get("kind")
            if kind not in ("prefix", "suffix", "regex"):
                raise CorpusError(f"unknown strip rule kind: {kind!r}")
            if "value" not in rule:
                raise CorpusError("strip rule missing value")


@dataclass
class DatasetManifest:
    """One dataset in the run's pool.

    role controls how the tracing pipeline treats the dataset:
    "source" datasets are lineage roots, "target" datasets are the ones
    being traced, and "benchmark" marks evaluation-only releases whose
    wholesale inclusion downstream is explicit contamination.
    """

    dataset_id: str
    release_date: dt.date
    adapter: AdapterConfig
    paths: list[Path]
    declared_sources: dict[str, str] = field(default_factory=dict)
    role: str = "target"

    def __post_init__(self) -> None:
        if not self.dataset_id:
            raise CorpusError("manifest missing field: dataset_id")
        if not self.paths:
            raise CorpusError("manifest needs at least one input path")
        if self.role not in ("source", "target", "benchmark"):
            raise CorpusError(f"unknown dataset role: {self.role!r}")


@dataclass(frozen=True)
class CanonicalInstance:
    """One normalized prompt/answer record with its content address."""

    digest: str
    canonical_prompt: str
    question: str
    answer: str
    source: str
    instance_id: str
    dataset_id: str
    timestamp: dt.date
    is_mcq: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "digest": self.digest,
                "canonical_prompt": self.canonical_prompt,
                "question": self.question,
                "answer": self.answer,
                "source": self.source,
                "instance_id": self.instance_id,
                "dataset_id": self.dataset_id,
                "timestamp": self.timestamp.isoformat(),
                "is_mcq": self.is_mcq,
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "CanonicalInstance":
        rec = json.loads(line)
        return cls(
            digest=rec["digest"],
            canonical_prompt=rec["canonical_prompt"],
            question=rec["question"],
            answer=rec["answer"],
            source=rec["source"],
            instance_id=rec["instance_id"],
            dataset_id=rec["dataset_id"],
            timestamp=dt.date.fromisoformat(rec["timestamp"]),
            is_mcq=rec["is_mcq"],
        )


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse and validate one manifest file (JSON)."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed manifest {path}: {exc}") from exc

    for key in ("dataset_id", "release_date", "adapter", "paths"):
        if key not in raw:
            raise CorpusError(f"manifest {path} missing field: {key}")
    try:
        release_date = dt.date.fromisoformat(raw["release_date"])
    except ValueError as exc:
        raise CorpusError(f"manifest {path}: bad release_date: {exc}") from exc

    adapter_raw = raw["adapter"]
    if "field_map" not in adapter_raw:
        raise CorpusError(f"manifest {path} missing field: adapter.field_map")
    adapter = AdapterConfig(
        field_map=dict(adapter_raw["field_map"]),
        strip_patterns=list(adapter_raw.get("strip_patterns", [])),
        mcq_patterns=adapter_raw.get("mcq_patterns"),
        default_source=adapter_raw.get("default_source"),
    )
    # Relative data paths resolve against the manifest's directory.
    paths = [
        p if p.is_absolute() else path.parent / p
        for p in (Path(p) for p in raw["paths"])
    ]
    return DatasetManifest(
        dataset_id=raw["dataset_id"],
        release_date=release_date,
        adapter=adapter,
        paths=paths,
        declared_sources=dict(raw.get("declared_sources", {})),
        role=raw.get("role", "target"),
    )


def load_manifests(paths: Iterable[str | Path]) -> list[DatasetManifest]:
    """Load several manifests, rejecting duplicate dataset_ids."""
    manifests: list[DatasetManifest] = []
    seen: set[str] = set()
    for p in paths:
        m = load_manifest(p)
        if m.dataset_id in seen:
            raise CorpusError(f"duplicate dataset_id in run: {m.dataset_id}")
        seen.add(m.dataset_id)
        manifests.append(m)
    return manifests


def _lookup(record: Any, path_expr: str) -> Any:
    """Resolve a dotted path expression against a nested record."""
    value = record
    for seg in path_expr.split("."):
        if isinstance(value, dict):
            if seg not in value:
                return None
            value = value[seg]
        elif isinstance(value, list) and seg.isdigit():
            idx = int(seg)
            if idx >= len(value):
                return None
            value = value[idx]
        else:
            return None
    return value


def _apply_strip_rules(text: str, rules: list[dict[str, str]]) -> str:
    for rule in rules:
        kind, value = rule["kind"], rule["value"]
        if kind == "prefix":
            if text.startswith(value):
                text = text[len(value):]
        elif kind == "suffix":
            if text.endswith(value):
                text = text[: len(text) - len(value)]
        else:
            text = re.sub(value, "", text)
    return text


def canonicalize_record(
    raw: dict[str, Any],
    adapter: AdapterConfig,
    manifest: DatasetManifest,
    fallback_id: str | None = None,
) -> CanonicalInstance:
    """Turn one raw record into a canonical, hashed instance.

    Strip rules run first (on the raw prompt, preserving line structure
    for MCQ detection), then whitespace normalization and hashing.
    Missing answer/source fields become sentinel values rather than
    errors because upstream dumps are ragged; a missing prompt is an
    error.
    """
    prompt_raw = _lookup(raw, adapter.field_map["prompt"])
    if prompt_raw is None:
        raise CorpusError(
            f"record missing prompt field {adapter.field_map['prompt']!r}"
        )
    if not isinstance(prompt_raw, str):
        prompt_raw = str(prompt_raw)

    stripped = _apply_strip_rules(prompt_raw, adapter.strip_patterns)

    question = stripped
    if "question" in adapter.field_map:
        q = _lookup(raw, adapter.field_map["question"])
        if q is not None:
            question = str(q)

    canonical = normalize_prompt(stripped)
    digest = hash_prompt(canonical)

    answer = ""
    if "answer" in adapter.field_map:
        a = _lookup(raw, adapter.field_map["answer"])
        if a is not None:
            answer = a if isinstance(a, str) else str(a)

    instance_id = fallback_id or ""
    if "id" in adapter.field_map:
        rid = _lookup(raw, adapter.field_map["id"])
        if rid is not None:
            instance_id = str(rid)
    if not instance_id:
        raise CorpusError("record has no id field and no fallback_id")

    source = "unknown"
    if "source" in adapter.field_map:
        s = _lookup(raw, adapter.field_map["source"])
        if s is not None and str(s):
            source = str(s)
    if source == "unknown" and instance_id in manifest.declared_sources:
        source = manifest.declared_sources[instance_id]
    if source == "unknown" and adapter.default_source:
        source = adapter.default_source

    return CanonicalInstance(
        digest=digest,
        canonical_prompt=canonical,
        question=question,
        answer=answer,
        source=source,
        instance_id=instance_id,
        dataset_id=manifest.dataset_id,
        timestamp=manifest.release_date,
        is_mcq=detect_mcq(question, adapter.mcq_patterns),
    )


def ingest_manifest(manifest: DatasetManifest) -> list[CanonicalInstance]:
    """Canonicalize every record in the manifest's input files.

    Input files are JSONL, one raw record per line. Output order is
    deterministic: (release_date, dataset_id, instance_id), so merges
    from parallel per-file workers land identically.
    """
    instances: list[CanonicalInstance] = []
    for fpath in manifest.paths:
        if not fpath.exists():
            raise CorpusError(f"input file not found: {fpath}")
        with open(fpath, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(
                        f"{fpath}:{i + 1}: undecodable record: {exc}"
                    ) from exc
                instances.append(
                    canonicalize_record(
                        raw,
                        manifest.adapter,
                        manifest,
                        fallback_id=f"{fpath.stem}-{i}",
                    )
                )
    instances.sort(key=lambda r: (r.timestamp, r.dataset_id, r.instance_id))
    return instances


def write_corpus(instances: Iterable[CanonicalInstance], path: str | Path) -> int:
    """Write instances as UTF-8 JSONL with LF endings; returns the count."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write(inst.to_json() + "\n")
            n += 1
    return n


def read_corpus(path: str | Path) -> Iterator[CanonicalInstance]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield CanonicalInstance.from_json(line)
