"""
Tracing a training corpus back to its sources
=============================================

A 2024 instruction dataset rarely contains new problems. Most rows are
copied, reformatted, or lightly edited from earlier pools. This script
builds a tiny corpus where we know exactly who copied what, then runs
the staged trace and reads the result.
"""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from lineagekit import (
    DecisionLog,
    PipelineConfig,
    auto_audit,
    build_index,
    collect_unmatched,
    composition_report,
    finalize,
    ingest_manifest,
    load_manifest,
    mark_unknown,
    origin_attribution,
    propose_matches,
    init_state,
    unmatched_fraction,
)

# --- step 0: write two datasets to disk in their "raw dump" shape ------
#
# lab2023 is an upstream pool: each record declares where the problem
# was first published. mix2024 is the dataset we want to audit: one row
# is a verbatim copy, one differs only in whitespace, one was retyped
# with a typo, and one is genuinely new.

POOL = [
    {"problem": "compute the greatest common divisor of 462 and 1071",
     "answer": "21", "id": "p1", "origin": "contest_a"},
    {"problem": "a fair die is rolled twice, find the probability the sum is seven",
     "answer": "1/6", "id": "p2", "origin": "textbook_b"},
    {"problem": "how many trailing zeros does 100 factorial have",
     "answer": "24", "id": "p3", "origin": "contest_a"},
]

AUDITED = [
    # verbatim copy of p1
    {"problem": "compute the greatest common divisor of 462 and 1071",
     "answer": "21", "id": "t1"},
    # p2 with doubled spaces and a trailing newline: same canonical form
    {"problem": "a fair die is rolled twice,  find the probability the sum is seven \n",
     "answer": "1/6", "id": "t2"},
    # p3 retyped with a typo: different digest, high cosine similarity
    {"problem": "how many traling zeros does 100 factorial have",
     "answer": "24", "id": "t3"},
    # genuinely new
    {"problem": "find the smallest positive integer with exactly twelve divisors",
     "answer": "60", "id": "t4"},
]


def write_dataset(root: Path, dataset_id: str, release: str, role: str,
                  records: list[dict]) -> Path:
    data = root / f"{dataset_id}.jsonl"
    with open(data, "w", encoding="utf-8") as fh:
        for row in records:
            fh.write(json.dumps(row) + "\n")
    manifest = {
        "dataset_id": dataset_id,
        "release_date": release,
        "role": role,
        "paths": [data.name],
        "adapter": {"field_map": {"prompt": "problem", "answer": "answer",
                                  "id": "id", "source": "origin"}},
    }
    path = root / f"{dataset_id}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


scratch = Path(tempfile.mkdtemp(prefix="trace_demo_"))
pool_manifest = load_manifest(write_dataset(scratch, "lab2023", "2023-03-01", "source", POOL))
audit_manifest = load_manifest(write_dataset(scratch, "mix2024", "2024-06-15", "target", AUDITED))

# --- step 1: canonicalize and hash every instance ----------------------
#
# Canonical form is NFC text with whitespace runs collapsed; the digest
# is SHA-1 of that form, so t1 and t2 collide with their sources by
# construction while t3 and t4 do not.

instances = ingest_manifest(pool_manifest) + ingest_manifest(audit_manifest)
print(f"ingested {len(instances)} instances")
for inst in instances:
    print(f"  {inst.dataset_id}/{inst.instance_id}  {inst.digest[:12]}  source={inst.source}")

# --- step 2: exact matching via the temporal index ---------------------
#
# The index groups identical digests and keeps occurrences in release
# order, so verbatim and whitespace-variant copies resolve immediately.

state = init_state(instances, [pool_manifest, audit_manifest])
print(f"\nafter exact matching: {unmatched_fraction(state):.0%} of audited rows unmatched")

# --- step 3: similarity candidates plus an audit verdict ---------------
#
# What exact matching cannot resolve goes through embedding retrieval.
# Each (unmatched, candidate) pair lands in a review queue; here the
# similarity floor stands in for a human reviewer.

config = PipelineConfig(tau=0.01, delta=0.90, knn_k=5, auto_accept=True)
log = DecisionLog(scratch / "decisions.log")
proposed = propose_matches(state, config)
for cand in proposed:
    print(f"  candidate {cand.pair_id}  cosine={cand.similarity:.4f}")
accepted = auto_audit(state, config, log)
print(f"accepted {accepted} merge(s); unmatched now {unmatched_fraction(state):.0%}")

# --- step 4: finalize and read the lineage ------------------------------
#
# t4 never matched anything, so it is recorded as unknown rather than
# silently attributed. force=True finalizes anyway (one residual row in
# a four-row dataset is over the 1% threshold; the warning on stderr
# says so). The composition report answers "where does mix2024 actually
# come from?"

index = finalize(state, config, force=True)
index = mark_unknown(index, collect_unmatched(state))

print("\nlineage entries:")
for digest in sorted(index.entries):
    entry = index.entries[digest]
    ids = [f"{o.dataset_id}/{o.instance_id}" for o in entry.occurrences]
    print(f"  {digest[:12]}  {entry.atomic_source:<12}  occurs in {ids}")

print("\nwhich dataset first introduced each source:")
for src, dataset in origin_attribution(index).items():
    print(f"  {src:<12} via {dataset}")

print("\ncomposition of mix2024 by atomic source:")
report = composition_report(index)
for src, (count, share) in sorted(report["mix2024"].items()):
    print(f"  {src:<12} {count} instance(s)  {share:.0%}")
