"""Seeded synthetic corpora with known ground-truth lineage.

Real dataset pools have no ground truth, so recovery quality is measured
on generated ones: a source pool with per-instance source labels, plus
derived datasets built by copying sources verbatim, perturbing only
whitespace, or making small in-token character edits. The generator
returns the true origin of every derived instance, letting tests state
exact precision/recall numbers for the tracing pipeline.

Everything is driven by one seed: identical spec + seed means identical
files, digests, and truth maps on any platform.
"""

from __future__ import annotations

import datetime as dt
import json
import random
import string
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import (
    CanonicalInstance,
    DatasetManifest,
    hash_prompt,
    load_manifest,
    normalize_prompt,
)

__all__ = [
    "SynthResult",
    "SynthSpec",
    "make_leak_fixture",
    "measure_attribution",
    "synth_corpus",
]


@dataclass(frozen=True)
class SynthSpec:
    """Shape of the generated pool.

    Mutation probabilities apply per derived instance and must sum to 1.
    Token edits replace single characters inside words, which keeps
    character-3-gram similarity to the original comfortably above 0.9
    while changing the digest.
    """

    n_sources: int = 10000
    n_derived: int = 2
    derived_size: int = 1000
    p_exact: float = 0.45
    p_whitespace: float = 0.45
    p_token_edit: float = 0.10
    n_source_labels: int = 8
    min_tokens: int = 15
    max_tokens: int = 25
    vocab_size: int = 2000
    edit_token_rate: float = 0.10
    source_release: dt.date = dt.date(2023, 6, 1)

    def __post_init__(self) -> None:
        if min(self.n_sources, self.derived_size) < 1:
            raise ValueError("spec sizes must be >= 1")
        total = self.p_exact + self.p_whitespace + self.p_token_edit
        if abs(total - 1.0) > 1e-9:
            raise ValueError("mutation probabilities must sum to 1")


@dataclass
class SynthResult:
    """Where the files landed and what the truth is."""

    manifest_paths: list[Path]
    truth: dict[tuple[str, str], dict]
    truth_path: Path
    source_dataset_id: str
    derived_dataset_ids: list[str] = field(default_factory=list)


def _make_vocab(rng: random.Random, size: int) -> list[str]:
    vocab: set[str] = set()
    while len(vocab) < size:
        length = rng.randint(5, 9)
        vocab.add("".join(rng.choice(string.ascii_lowercase) for _ in range(length)))
    return sorted(vocab)


def _make_prompt(rng: random.Random, vocab: list[str], spec: SynthSpec) -> str:
    n = rng.randint(spec.min_tokens, spec.max_tokens)
    return " ".join(rng.choice(vocab) for _ in range(n)) + "?"


def _whitespace_mutate(rng: random.Random, prompt: str) -> str:
    """Perturb only whitespace; canonicalization undoes every change."""
    tokens = prompt.split(" ")
    seps = []
    for _ in range(len(tokens) - 1):
        seps.append(rng.choice([" ", "  ", "\n", " \n", "\t", "   "]))
    out = tokens[0]
    for sep, tok in zip(seps, tokens[1:]):
        out += sep + tok
    if rng.random() < 0.5:
        out = "  " + out
    if rng.random() < 0.5:
        out = out + " \n"
    return out


def _token_edit_mutate(rng: random.Random, prompt: str, rate: float) -> str:
    """Replace one character inside a sampled fraction of tokens."""
    tokens = prompt.split(" ")
    editable = [i for i, t in enumerate(tokens) if len(t) >= 3]
    n_edits = max(1, round(rate * len(tokens)))
    for i in rng.sample(editable, min(n_edits, len(editable))):
        tok = tokens[i]
        pos = rng.randrange(len(tok) - 1)  # keep trailing "?" intact
        old = tok[pos]
        choices = [c for c in string.ascii_lowercase if c != old]
        tokens[i] = tok[:pos] + rng.choice(choices) + tok[pos + 1 :]
    return " ".join(tokens)


def _write_jsonl(path: Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _write_manifest(
    path: Path,
    dataset_id: str,
    release: dt.date,
    data_file: str,
    field_map: dict[str, str],
    role: str,
) -> None:
    manifest = {
        "dataset_id": dataset_id,
        "release_date": release.isoformat(),
        "role": role,
        "paths": [data_file],
        "adapter": {"field_map": field_map},
    }
    path.write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def synth_corpus(
    out_dir: str | Path, seed: int, spec: SynthSpec | None = None
) -> SynthResult:
    """Emit a source dataset, derived datasets, manifests, and the truth map."""
    spec = spec or SynthSpec()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    vocab = _make_vocab(rng, spec.vocab_size)

    labels = [f"origin_{i:02d}" for i in range(spec.n_source_labels)]
    sources: list[dict] = []
    seen_digests: set[str] = set()
    for k in range(spec.n_sources):
        while True:
            prompt = _make_prompt(rng, vocab, spec)
            digest = hash_prompt(normalize_prompt(prompt))
            if digest not in seen_digests:
                seen_digests.add(digest)
                break
        sources.append(
            {
                "problem": prompt,
                "answer": str(rng.randint(0, 9999)),
                "id": f"s{k:06d}",
                "origin": rng.choice(labels),
            }
        )
    _write_jsonl(out / "sources.jsonl", sources)
    _write_manifest(
        out / "sources.manifest.json",
        "synth_sources",
        spec.source_release,
        "sources.jsonl",
        {"prompt": "problem", "answer": "answer", "id": "id", "source": "origin"},
        role="source",
    )
    manifest_paths = [out / "sources.manifest.json"]

    truth: dict[tuple[str, str], dict] = {}
    derived_ids: list[str] = []
    for j in range(spec.n_derived):
        dataset_id = f"synth_derived_{j}"
        derived_ids.append(dataset_id)
        release = spec.source_release + dt.timedelta(days=270 + 90 * j)
        records: list[dict] = []
        for i in range(spec.derived_size):
            src = sources[rng.randrange(spec.n_sources)]
            roll = rng.random()
            if roll < spec.p_exact:
                mutation, prompt = "exact", src["problem"]
            elif roll < spec.p_exact + spec.p_whitespace:
                mutation, prompt = "whitespace", _whitespace_mutate(rng, src["problem"])
            else:
                mutation, prompt = "token_edit", _token_edit_mutate(
                    rng, src["problem"], spec.edit_token_rate
                )
            instance_id = f"d{j}-{i:05d}"
            records.append(
                {"question": prompt, "final_answer": src["answer"], "uid": instance_id}
            )
            truth[(dataset_id, instance_id)] = {
                "source_digest": hash_prompt(normalize_prompt(src["problem"])),
                "source_id": src["id"],
                "label": src["origin"],
                "mutation": mutation,
            }
        _write_jsonl(out / f"derived_{j}.jsonl", records)
        _write_manifest(
            out / f"derived_{j}.manifest.json",
            dataset_id,
            release,
            f"derived_{j}.jsonl",
            {"prompt": "question", "answer": "final_answer", "id": "uid"},
            role="target",
        )
        manifest_paths.append(out / f"derived_{j}.manifest.json")

    truth_path = out / "truth.json"
    truth_path.write_text(
        json.dumps(
            {
                f"{ds}/{iid}": info for (ds, iid), info in sorted(truth.items())
            },
            indent=2,
            ensure_ascii=False,
        )
        + "\n",
        encoding="utf-8",
    )
    return SynthResult(
        manifest_paths=manifest_paths,
        truth=truth,
        truth_path=truth_path,
        source_dataset_id="synth_sources",
        derived_dataset_ids=derived_ids,
    )


def load_synth_manifests(result: SynthResult) -> list[DatasetManifest]:
    return [load_manifest(p) for p in result.manifest_paths]


def measure_attribution(truth: dict[tuple[str, str], dict], index) -> dict:
    """Score a finalized index against the generator's truth map.

    precision = correct source labels / attributed derived instances;
    recall = correct source labels / all derived instances. An instance
    counts as attributed when its entry carries a non-sentinel source.
    """
    entry_of: dict[tuple[str, str], object] = {}
    for entry in index.entries.values():
        for occ in entry.occurrences:
            entry_of[(occ.dataset_id, occ.instance_id)] = entry

    attributed = 0
    correct = 0
    missing = 0
    for key, info in truth.items():
        entry = entry_of.get(key)
        if entry is None:
            missing += 1
            continue
        if entry.atomic_source == "unknown":
            continue
        attributed += 1
        if entry.atomic_source == info["label"]:
            correct += 1

    total = len(truth)
    return {
        "total": total,
        "attributed": attributed,
        "correct": correct,
        "missing": missing,
        "precision": correct / attributed if attributed else 0.0,
        "recall": correct / total if total else 0.0,
    }


def make_leak_fixture(
    seed: int,
    n_train: int = 10000,
    n_bench: int = 50,
    n_exact: int = 25,
    n_whitespace: int = 25,
) -> tuple[list[CanonicalInstance], list[CanonicalInstance], set[str]]:
    """Training corpus with planted benchmark copies, for scanner tests.

    Returns (train, benchmark, planted instance ids). The train corpus
    has exactly n_train instances; the first n_exact + n_whitespace are
    copies of benchmark items (verbatim and whitespace-perturbed), the
    rest are unrelated prompts.
    """
    if n_exact + n_whitespace > min(n_train, n_bench):
        raise ValueError("cannot plant more items than exist")
    rng = random.Random(seed)
    spec = SynthSpec()
    vocab = _make_vocab(rng, spec.vocab_size)

    def instance(dataset_id: str, iid: str, raw: str, ts: dt.date) -> CanonicalInstance:
        canonical = normalize_prompt(raw)
        return CanonicalInstance(
            digest=hash_prompt(canonical),
            canonical_prompt=canonical,
            question=raw,
            answer="",
            source="unknown",
            instance_id=iid,
            dataset_id=dataset_id,
            timestamp=ts,
            is_mcq=False,
        )

    bench = [
        instance(
            "synth_benchmark",
            f"b{k:04d}",
            _make_prompt(rng, vocab, spec),
            dt.date(2023, 1, 15),
        )
        for k in range(n_bench)
    ]

    train: list[CanonicalInstance] = []
    planted: set[str] = set()
    ts = dt.date(2024, 5, 1)
    for k in range(n_exact):
        iid = f"t{k:05d}"
        train.append(instance("synth_train", iid, bench[k].question, ts))
        planted.add(iid)
    for k in range(n_whitespace):
        iid = f"t{n_exact + k:05d}"
        raw = _whitespace_mutate(rng, bench[n_exact + k].question)
        train.append(instance("synth_train", iid, raw, ts))
        planted.add(iid)
    for k in range(n_exact + n_whitespace, n_train):
        train.append(
            instance("synth_train", f"t{k:05d}", _make_prompt(rng, vocab, spec), ts)
        )
    return train, bench, planted
