"""Shared fixture builders for the test suite."""

from __future__ import annotations

import datetime as dt
import json
from pathlib import Path

from lineagekit.corpus import (
    AdapterConfig,
    CanonicalInstance,
    DatasetManifest,
    hash_prompt,
    normalize_prompt,
)

# Sentinel data-file path for in-memory pool manifests; never opened.
_UNUSED = Path("/nonexistent/data.jsonl")


def inst(
    prompt: str,
    dataset_id: str = "ds",
    instance_id: str = "i0",
    ts: str = "2023-01-01",
    answer: str = "",
    source: str = "unknown",
) -> CanonicalInstance:
    """Canonical instance straight from a raw prompt string."""
    canonical = normalize_prompt(prompt)
    return CanonicalInstance(
        digest=hash_prompt(canonical),
        canonical_prompt=canonical,
        question=prompt,
        answer=answer,
        source=source,
        instance_id=instance_id,
        dataset_id=dataset_id,
        timestamp=dt.date.fromisoformat(ts),
        is_mcq=False,
    )


def mem_manifest(
    dataset_id: str, ts: str = "2023-01-01", role: str = "target"
) -> DatasetManifest:
    """Pool membership record without backing files (index-only tests)."""
    return DatasetManifest(
        dataset_id=dataset_id,
        release_date=dt.date.fromisoformat(ts),
        adapter=AdapterConfig(field_map={"prompt": "problem"}),
        paths=[_UNUSED],
        role=role,
    )


def write_dataset(
    dirpath: Path,
    dataset_id: str,
    release: str,
    records: list[dict],
    role: str = "target",
    field_map: dict | None = None,
    **manifest_extra,
) -> Path:
    """Write records as JSONL plus a manifest; returns the manifest path.

    Default field map expects records shaped {"problem", "answer", "id"}
    with an optional "origin" source column.
    """
    if field_map is None:
        field_map = {
            "prompt": "problem",
            "answer": "answer",
            "id": "id",
            "source": "origin",
        }
    dirpath.mkdir(parents=True, exist_ok=True)
    data = dirpath / f"{dataset_id}.jsonl"
    with open(data, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    manifest = {
        "dataset_id": dataset_id,
        "release_date": release,
        "role": role,
        "paths": [data.name],
        "adapter": {"field_map": field_map},
    }
    manifest.update(manifest_extra)
    mpath = dirpath / f"{dataset_id}.manifest.json"
    mpath.write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False), encoding="utf-8"
    )
    return mpath


def rec(prompt: str, rid: str, answer: str = "42", origin: str | None = None) -> dict:
    """One raw record in the default write_dataset shape."""
    row = {"problem": prompt, "answer": answer, "id": rid}
    if origin is not None:
        row["origin"] = origin
    return row
