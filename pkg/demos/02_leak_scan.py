"""
Finding benchmark problems inside training data
===============================================

If a benchmark item sits in the training set, the benchmark stops
measuring generalization. This script plants fifty benchmark problems
into a ten-thousand-row training set (half verbatim, half disguised by
whitespace), scans for them, removes every flagged row, and proves the
rescan comes back clean.
"""

from __future__ import annotations

import tempfile
import time
from pathlib import Path

from lineagekit import decontaminate, leak_scan, make_leak_fixture

# --- step 0: a training set with known contamination --------------------
#
# make_leak_fixture returns (train, benchmark, planted instance ids).
# The whitespace plants differ from the benchmark text as raw strings
# but canonicalize to the same digest, which is the whole point of
# hashing the canonical form instead of the raw one.

train, bench, planted = make_leak_fixture(seed=7, n_train=10000, n_bench=50,
                                          n_exact=25, n_whitespace=25)
print(f"training rows: {len(train)}, benchmark items: {len(bench)}, planted: {len(planted)}")

bench_raw = {b.question for b in bench}
raw_differs = sum(
    1 for t in train
    if t.instance_id in planted and t.question not in bench_raw
)
print(f"plants whose raw text differs from the benchmark: {raw_differs}")

# --- step 1: scan -------------------------------------------------------
#
# Digest-equal pairs are flagged as exact matches outright; everything
# else goes through embedding similarity and lands in a band (high is
# flagged, suspect is report-only evidence).

started = time.monotonic()
report = leak_scan(train, [bench])
print(f"\nscan took {time.monotonic() - started:.2f}s")
print(f"band totals: {report.band_totals}")
print(f"flagged per training dataset: {report.n_leak}")

sample = report.records[0]
print(f"example: train {sample.train_instance_id} == bench {sample.benchmark_item_id} "
      f"(similarity {sample.similarity:.2f}, band {sample.band})")

found = {r.train_instance_id for r in report.records}
print(f"all fifty plants found: {found == planted}")

# --- step 2: remove and rescan ------------------------------------------
#
# decontaminate drops every flagged instance and returns what it
# removed; scanning the cleaned set proves closure.

clean, removed = decontaminate(train, report)
print(f"\nremoved {len(removed)} rows, {len(clean)} remain")

rescan = leak_scan(clean, [bench])
print(f"rescan flagged: {sum(rescan.n_leak.values())} (records: {len(rescan.records)})")

# --- step 3: persist the report for the audit trail ---------------------

out = Path(tempfile.mkdtemp(prefix="leak_demo_")) / "leaks.json"
report.write(out)
print(f"report written to {out}")
