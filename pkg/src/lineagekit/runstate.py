"""Run-directory persistence.

A tracing run lives in one directory:

    manifests/       dataset manifests as ingested (absolute data paths)
    corpus/          canonical corpus, current pool membership
    index/           finalized lineage export
    queue/           proposed match candidates
    decisions.log    append-only audit verdicts
    reports/         leak scan, attribution, scorecards, rankings
    config.snapshot  pipeline configuration
    state.json       phase and reconciliation counts

The decision log and corpus are authoritative: restoring a run rebuilds
the index from them, and the saved counts are cross-checked against the
rebuilt state so silent divergence fails loudly instead of propagating.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import (
    AdapterConfig,
    CanonicalInstance,
    DatasetManifest,
    read_corpus,
    write_corpus,
)
from .lineage import mark_unknown, write_index
from .tracing import (
    DecisionLog,
    MatchCandidate,
    PipelineConfig,
    TraceState,
    collect_unmatched,
    restore_state,
)

__all__ = [
    "RunState",
    "init_run_dir",
    "load_config",
    "load_run",
    "run_paths",
    "save_config",
    "save_run",
    "save_state_file",
]

SUBDIRS = ("manifests", "corpus", "index", "queue", "reports")


@dataclass
class RunState:
    """What the status endpoint and CLI report about a run."""

    run_id: str
    phase: str
    counts: dict
    iteration: int
    discarded: list[str]
    cap_warning: bool

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "phase": self.phase,
            "counts": self.counts,
            "iteration": self.iteration,
            "discarded": self.discarded,
            "cap_warning": self.cap_warning,
        }


def run_paths(run_dir: str | Path) -> dict[str, Path]:
    root = Path(run_dir)
    return {
        "root": root,
        "manifests": root / "manifests",
        "corpus": root / "corpus" / "corpus.jsonl",
        "index": root / "index" / "lineage.jsonl",
        "queue": root / "queue" / "candidates.jsonl",
        "log": root / "decisions.log",
        "reports": root / "reports",
        "config": root / "config.snapshot",
        "state": root / "state.json",
    }


def init_run_dir(run_dir: str | Path) -> dict[str, Path]:
    root = Path(run_dir)
    root.mkdir(parents=True, exist_ok=True)
    for sub in SUBDIRS:
        (root / sub).mkdir(exist_ok=True)
    return run_paths(root)


def _manifest_to_dict(m: DatasetManifest) -> dict:
    return {
        "dataset_id": m.dataset_id,
        "release_date": m.release_date.isoformat(),
        "role": m.role,
        "paths": [str(p.resolve()) for p in m.paths],
        "declared_sources": m.declared_sources,
        "adapter": {
            "field_map": m.adapter.field_map,
            "strip_patterns": m.adapter.strip_patterns,
            "mcq_patterns": m.adapter.mcq_patterns,
            "default_source": m.adapter.default_source,
        },
    }


def _manifest_from_dict(d: dict) -> DatasetManifest:
    adapter = d["adapter"]
    return DatasetManifest(
        dataset_id=d["dataset_id"],
        release_date=dt.date.fromisoformat(d["release_date"]),
        adapter=AdapterConfig(
            field_map=dict(adapter["field_map"]),
            strip_patterns=list(adapter.get("strip_patterns") or []),
            mcq_patterns=adapter.get("mcq_patterns"),
            default_source=adapter.get("default_source"),
        ),
        paths=[Path(p) for p in d["paths"]],
        declared_sources=dict(d.get("declared_sources") or {}),
        role=d.get("role", "target"),
    )


def save_config(run_dir: str | Path, config: PipelineConfig) -> None:
    paths = run_paths(run_dir)
    paths["config"].write_text(
        json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8"
    )


def load_config(run_dir: str | Path) -> PipelineConfig:
    paths = run_paths(run_dir)
    if not paths["config"].exists():
        return PipelineConfig()
    return PipelineConfig.from_dict(
        json.loads(paths["config"].read_text(encoding="utf-8"))
    )


def save_state_file(run_dir: str | Path, state: TraceState) -> RunState:
    paths = run_paths(run_dir)
    run_state = RunState(
        run_id=paths["root"].name,
        phase=state.phase,
        counts=state.counts(),
        iteration=state.iteration,
        discarded=list(state.discarded),
        cap_warning=state.cap_warning,
    )
    paths["state"].write_text(
        json.dumps(run_state.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    return run_state


def save_run(run_dir: str | Path, state: TraceState) -> None:
    """Checkpoint corpus, manifests, queue, state, and (when finalized)
    the lineage export. The decision log is already on disk; it is never
    rewritten here."""
    paths = init_run_dir(run_dir)
    write_corpus(state.instances, paths["corpus"])
    for m in state.pool:
        out = paths["manifests"] / f"{m.dataset_id}.json"
        out.write_text(
            json.dumps(_manifest_to_dict(m), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    # Drop manifest files for datasets discarded from the pool.
    live = {m.dataset_id for m in state.pool}
    for f in paths["manifests"].glob("*.json"):
        if f.stem not in live:
            f.unlink()
    with open(paths["queue"], "w", encoding="utf-8", newline="\n") as fh:
        for pair_id in sorted(state.candidates):
            fh.write(
                json.dumps(
                    state.candidates[pair_id].to_dict(),
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
                + "\n"
            )
    save_state_file(run_dir, state)
    if state.phase == "finalized":
        write_index(state.index, paths["index"])


def _load_candidates(path: Path) -> list[MatchCandidate]:
    if not path.exists():
        return []
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(MatchCandidate.from_dict(json.loads(line)))
    return out


def load_run(
    run_dir: str | Path, check_counts: bool = True
) -> tuple[TraceState, PipelineConfig, DecisionLog]:
    """Restore a run from disk and verify it reconciles with state.json."""
    paths = run_paths(run_dir)
    if not paths["corpus"].exists():
        raise FileNotFoundError(f"no corpus in run directory: {run_dir}")
    pool = [
        _manifest_from_dict(json.loads(f.read_text(encoding="utf-8")))
        for f in sorted(paths["manifests"].glob("*.json"))
    ]
    if not pool:
        raise FileNotFoundError(f"no manifests in run directory: {run_dir}")
    instances: list[CanonicalInstance] = list(read_corpus(paths["corpus"]))
    config = load_config(run_dir)
    log = DecisionLog(paths["log"])
    state = restore_state(
        instances, pool, log, _load_candidates(paths["queue"]), config
    )

    if paths["state"].exists():
        saved = json.loads(paths["state"].read_text(encoding="utf-8"))
        state.iteration = saved.get("iteration", 0)
        state.discarded = list(saved.get("discarded", []))
        state.cap_warning = bool(saved.get("cap_warning", False))
        if saved.get("phase") == "finalized":
            # Re-apply the terminal labeling; the log has no record of it.
            state.index = mark_unknown(state.index, collect_unmatched(state))
            state.phase = "finalized"
        # The corpus size must reconcile exactly; decision-dependent
        # counts are rebuilt from the log, which may legitimately be
        # ahead of a snapshot taken before a crash.
        saved_total = saved.get("counts", {}).get("total")
        rebuilt_total = state.counts()["total"]
        if check_counts and saved_total is not None and saved_total != rebuilt_total:
            raise ValueError(
                f"run state does not reconcile: total was {saved_total}, "
                f"rebuilt {rebuilt_total}"
            )
    return state, config, log
