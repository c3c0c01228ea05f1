"""Provenance tracing: exact matching, audited near-duplicate merges,
and the iterative source-recovery loop.

The flow over a dataset pool:

  1. Build the temporal index. Instances whose prompt already appeared
     in an earlier release are traced for free; entries that first
     appear in a dataset being audited form the unmatched set U.
  2. For each unmatched entry, propose the most similar earlier-released
     entries above the similarity floor as merge candidates. A human (or
     a scripted oracle) accepts or rejects each pair; accepts fold the
     unmatched entry into its match.
  3. While the unmatched fraction exceeds tau, ingest additional
     candidate source datasets and repeat. Candidate datasets that
     recover nothing are discarded. Whatever remains unmatched at the
     end is labeled unknown.

Every verdict is appended to a decision log before any state changes.
A crash therefore loses at most an unacknowledged response, and
replaying the log over the same corpus reproduces the final index byte
for byte: apply_decision is written so that the same record sequence
has the same effect whether applied live or replayed later.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import os
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import CanonicalInstance, DatasetManifest, ingest_manifest
from .embedding import EmbeddingProvider, embed_text, knn
from .lineage import LineageIndex, build_index, mark_unknown, merge_entries

__all__ = [
    "AlreadyDecidedError",
    "AuditDecision",
    "DecisionLog",
    "MatchCandidate",
    "PipelineConfig",
    "TraceError",
    "TraceState",
    "UnknownPairError",
    "apply_decision",
    "auto_audit",
    "collect_unmatched",
    "finalize",
    "init_state",
    "pending_candidates",
    "propose_matches",
    "replay_decisions",
    "restore_state",
    "run_recovery_iteration",
    "run_trace",
    "settle_recovery",
    "unmatched_fraction",
]

logger = logging.getLogger(__name__)


class TraceError(RuntimeError):
    """Pipeline precondition or state violation."""


class UnknownPairError(TraceError):
    """Decision referenced a pair that does not exist."""


class AlreadyDecidedError(TraceError):
    """Decision referenced a pair that already has a terminal verdict."""


@dataclass(frozen=True)
class PipelineConfig:
    tau: float = 0.01
    delta: float = 0.90
    knn_k: int = 5
    max_iterations: int = 10
    auto_accept: bool = False
    provider: EmbeddingProvider = field(default_factory=EmbeddingProvider)

    def __post_init__(self) -> None:
        if not (0.0 < self.tau < 1.0):
            raise ValueError(f"tau out of range (0,1): {self.tau}")
        if not (0.0 < self.delta <= 1.0):
            raise ValueError(f"delta out of range (0,1]: {self.delta}")
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "delta": self.delta,
            "knn_k": self.knn_k,
            "max_iterations": self.max_iterations,
            "auto_accept": self.auto_accept,
            "provider": {
                "kind": self.provider.kind,
                "dimension": self.provider.dimension,
                "endpoint": self.provider.endpoint,
                "batch_size": self.provider.batch_size,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        provider = EmbeddingProvider(**d.get("provider", {}))
        return cls(
            tau=d.get("tau", 0.01),
            delta=d.get("delta", 0.90),
            knn_k=d.get("knn_k", 5),
            max_iterations=d.get("max_iterations", 10),
            auto_accept=d.get("auto_accept", False),
            provider=provider,
        )


@dataclass
class MatchCandidate:
    """A proposed merge of one unmatched entry into a similar earlier one."""

    pair_id: str
    unmatched_digest: str
    candidate_digest: str
    similarity: float
    unmatched_prompt: str
    candidate_prompt: str
    status: str = "pending"

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "unmatched_digest": self.unmatched_digest,
            "candidate_digest": self.candidate_digest,
            "similarity": self.similarity,
            "unmatched_prompt": self.unmatched_prompt,
            "candidate_prompt": self.candidate_prompt,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MatchCandidate":
        return cls(**d)


@dataclass(frozen=True)
class AuditDecision:
    pair_id: str
    verdict: str  # accept | reject | skip
    reviewer: str
    decided_at: str

    def __post_init__(self) -> None:
        if self.verdict not in ("accept", "reject", "skip"):
            raise ValueError(f"unknown verdict: {self.verdict!r}")


class DecisionLog:
    """Append-only JSONL decision record; the single source of truth.

    Appends are flushed and fsynced before returning, so a decision that
    was acknowledged is a decision that survives a crash.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=False, separators=(",", ":"))
        with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def read(self) -> list[dict]:
        if not self.path.exists():
            return []
        records = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records


@dataclass
class TraceState:
    """Everything one tracing run carries between stages."""

    instances: list[CanonicalInstance]
    pool: list[DatasetManifest]
    index: LineageIndex
    unmatched: set[str]
    iteration: int = 0
    phase: str = "stage1"
    discarded: list[str] = field(default_factory=list)
    candidates: dict[str, MatchCandidate] = field(default_factory=dict)
    merged_into: dict[str, str] = field(default_factory=dict)
    cap_warning: bool = False
    # Recovery bookkeeping: datasets whose contribution is still being
    # evaluated, the unmatched set they were brought in to shrink, and
    # the merges accepted since they arrived.
    pending_recovery: list[str] = field(default_factory=list)
    u_before_recovery: set[str] = field(default_factory=set)
    recovery_accepts: list[tuple[str, str]] = field(default_factory=list)
    vectors: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def roles(self) -> dict[str, str]:
        return {m.dataset_id: m.role for m in self.pool}

    def benchmark_ids(self) -> frozenset[str]:
        return frozenset(
            m.dataset_id for m in self.pool if m.role == "benchmark"
        )

    def resolve(self, digest: str) -> str:
        """Follow merge redirects to the digest's live entry key."""
        seen = set()
        while digest in self.merged_into:
            if digest in seen:
                raise TraceError(f"merge cycle at {digest}")
            seen.add(digest)
            digest = self.merged_into[digest]
        return digest

    def counts(self) -> dict:
        unmatched_instances = sum(
            len(self.index.entries[h].occurrences)
            for h in self.unmatched
            if h in self.index.entries
        )
        pending = sum(
            1 for c in self.candidates.values() if c.status == "pending"
        )
        return {
            "total": self.index.total_instances,
            "matched": self.index.total_instances - unmatched_instances,
            "unmatched": unmatched_instances,
            "unmatched_digests": len(self.unmatched),
            "pending_candidates": pending,
            "iteration": self.iteration,
            "phase": self.phase,
        }


def collect_unmatched(state: TraceState) -> set[str]:
    """Digests whose provenance terminates inside an audited dataset.

    An entry is unmatched when its earliest occurrence comes from a
    target-role dataset: nothing released earlier contains the prompt,
    so its true origin is still unaccounted for.
    """
    roles = state.roles()
    return {
        h
        for h, entry in state.index.entries.items()
        if roles.get(entry.origin_dataset) == "target"
    }


def unmatched_fraction(state: TraceState) -> float:
    if state.index.total_instances == 0:
        return 0.0
    unmatched_instances = sum(
        len(state.index.entries[h].occurrences)
        for h in state.unmatched
        if h in state.index.entries
    )
    return unmatched_instances / state.index.total_instances


def init_state(
    instances: Iterable[CanonicalInstance], pool: Sequence[DatasetManifest]
) -> TraceState:
    """Stage 1: index the pool and collect the unmatched set."""
    ids = [m.dataset_id for m in pool]
    if len(ids) != len(set(ids)):
        raise ValueError("duplicate dataset_id in pool")
    instances = list(instances)
    benchmark_ids = frozenset(m.dataset_id for m in pool if m.role == "benchmark")
    state = TraceState(
        instances=instances,
        pool=list(pool),
        index=build_index(instances, benchmark_ids),
        unmatched=set(),
    )
    state.unmatched = collect_unmatched(state)
    state.phase = "stage1"
    return state


def _vector_for(state: TraceState, digest: str, config: PipelineConfig) -> np.ndarray:
    vec = state.vectors.get(digest)
    if vec is None:
        vec = embed_text(
            state.index.entries[digest].canonical_prompt, config.provider
        )
        state.vectors[digest] = vec
    return vec


def _pair_id(unmatched_digest: str, candidate_digest: str) -> str:
    return f"{unmatched_digest[:12]}-{candidate_digest[:12]}"


def propose_matches(
    state: TraceState, config: PipelineConfig
) -> list[MatchCandidate]:
    """Stage 2 proposal: nearest earlier-released entries above delta.

    Candidates pair each unmatched entry only with entries whose origin
    is not released later (anachronistic matches are never proposed) and
    never with itself. Newly created candidates are returned highest
    similarity first; pairs already proposed or decided are not
    re-created.
    """
    if not state.unmatched:
        return []

    order = sorted(
        state.index.entries.values(),
        key=lambda e: (e.origin.timestamp, e.digest),
    )
    digests = [e.digest for e in order]
    stamps = [e.origin.timestamp for e in order]
    matrix = np.stack([_vector_for(state, h, config) for h in digests])

    new: list[MatchCandidate] = []
    for u in sorted(state.unmatched):
        u_entry = state.index.entries[u]
        cutoff = bisect_right(stamps, u_entry.origin.timestamp)
        if cutoff == 0:
            continue
        # Ask for one extra neighbor since the query itself sits inside
        # the eligible window.
        hits = knn(
            _vector_for(state, u, config),
            matrix[:cutoff],
            digests[:cutoff],
            min(config.knn_k + 1, cutoff),
        )
        kept = 0
        for digest, sim in hits:
            if digest == u:
                continue
            if kept >= config.knn_k or sim < config.delta:
                break
            kept += 1
            pid = _pair_id(u, digest)
            if pid in state.candidates:
                continue
            cand = MatchCandidate(
                pair_id=pid,
                unmatched_digest=u,
                candidate_digest=digest,
                similarity=sim,
                unmatched_prompt=u_entry.canonical_prompt,
                candidate_prompt=state.index.entries[digest].canonical_prompt,
            )
            state.candidates[pid] = cand
            new.append(cand)

    if new:
        state.phase = "stage2_audit"
    return sorted(new, key=lambda c: (-c.similarity, c.pair_id))


def pending_candidates(state: TraceState) -> list[MatchCandidate]:
    """Review queue: pending pairs, highest similarity first."""
    pending = [c for c in state.candidates.values() if c.status == "pending"]
    return sorted(pending, key=lambda c: (-c.similarity, c.pair_id))


def apply_decision(
    state: TraceState,
    decision: AuditDecision,
    log: DecisionLog | None = None,
) -> MatchCandidate:
    """Record one verdict and, on accept, fold the entries together.

    The log append happens before any state mutation. An accept is moot,
    and downgraded to a skipped status, when the two sides have already
    converged through earlier merges or when the unmatched side has
    since been traced on its own (an exact match supersedes a manual
    one). These guards make the function order-insensitive to history:
    applying the same record sequence to the same corpus always lands in
    the same state, which is what log replay relies on.
    """
    pair = state.candidates.get(decision.pair_id)
    if pair is None:
        raise UnknownPairError(f"unknown pair: {decision.pair_id}")
    if pair.status != "pending":
        raise AlreadyDecidedError(
            f"pair {decision.pair_id} already {pair.status}"
        )

    if log is not None:
        log.append(
            {
                "pair_id": decision.pair_id,
                "verdict": decision.verdict,
                "reviewer": decision.reviewer,
                "decided_at": decision.decided_at,
                "unmatched_digest": pair.unmatched_digest,
                "candidate_digest": pair.candidate_digest,
                "similarity": pair.similarity,
            }
        )

    if decision.verdict == "reject":
        pair.status = "rejected"
        return pair
    if decision.verdict == "skip":
        pair.status = "skipped"
        return pair

    src = state.resolve(pair.unmatched_digest)
    dst = state.resolve(pair.candidate_digest)
    roles = state.roles()
    moot = (
        src == dst
        or src not in state.index.entries
        or dst not in state.index.entries
        or roles.get(state.index.entries[src].origin_dataset) != "target"
    )
    if moot:
        pair.status = "skipped"
        return pair

    state.index = merge_entries(state.index, src, dst)
    state.merged_into[src] = dst
    state.unmatched.discard(pair.unmatched_digest)
    state.unmatched.discard(src)
    if state.pending_recovery:
        state.recovery_accepts.append((src, dst))
    pair.status = "accepted"
    for sibling in state.candidates.values():
        if (
            sibling.status == "pending"
            and sibling.unmatched_digest == pair.unmatched_digest
        ):
            sibling.status = "skipped"
    return pair


def auto_audit(
    state: TraceState,
    config: PipelineConfig,
    log: DecisionLog | None = None,
    oracle: Callable[[MatchCandidate], str] | None = None,
    reviewer: str = "auto-accept",
) -> int:
    """Work the queue without a human: accept everything above delta,
    or ask the supplied oracle for each verdict. Returns the number of
    decisions made."""
    decided = 0
    for pair in pending_candidates(state):
        if pair.status != "pending":
            continue  # closed as a sibling of an earlier accept
        verdict = oracle(pair) if oracle else "accept"
        apply_decision(
            state,
            AuditDecision(
                pair_id=pair.pair_id,
                verdict=verdict,
                reviewer=reviewer,
                decided_at=dt.datetime.now(dt.timezone.utc).isoformat(),
            ),
            log,
        )
        decided += 1
    return decided


def _rebuild(state: TraceState) -> None:
    """Re-index all instances and replay accepted merges in order.

    A replayed merge is dropped when its unmatched side stopped being
    unmatched on its own, which happens when newly ingested data
    contains the exact prompt: the digest match supersedes the manual
    merge.
    """
    roles = state.roles()
    state.index = build_index(state.instances, state.benchmark_ids())
    old_merges = list(state.merged_into.items())
    state.merged_into = {}
    for src, dst in old_merges:
        s = state.resolve(src)
        d = state.resolve(dst)
        if s == d or s not in state.index.entries or d not in state.index.entries:
            continue
        if roles.get(state.index.entries[s].origin_dataset) != "target":
            logger.info(
                "merge %s->%s superseded by exact match during recovery",
                src[:12],
                dst[:12],
            )
            continue
        state.index = merge_entries(state.index, s, d)
        state.merged_into[s] = d
    state.unmatched = collect_unmatched(state)


def run_recovery_iteration(
    state: TraceState,
    new_manifests: Sequence[DatasetManifest],
    config: PipelineConfig,
    log: DecisionLog | None = None,
) -> bool:
    """Stage 3: bring candidate source datasets into the pool and rerun.

    No-ops (returning False) when the unmatched fraction is already at
    or below tau. Contribution accounting for the new datasets is
    settled once the audit queue drains: in auto-accept mode that is
    immediate, otherwise settle_recovery runs later.
    """
    if unmatched_fraction(state) <= config.tau:
        logger.info(
            "recovery skipped: unmatched fraction %.4f <= tau %.4f",
            unmatched_fraction(state),
            config.tau,
        )
        return False
    if state.iteration >= config.max_iterations:
        raise TraceError(f"iteration cap {config.max_iterations} reached")
    existing = {m.dataset_id for m in state.pool}
    for m in new_manifests:
        if m.dataset_id in existing:
            raise ValueError(f"duplicate dataset_id in pool: {m.dataset_id}")
        existing.add(m.dataset_id)

    state.phase = "stage3"
    state.u_before_recovery = set(state.unmatched)
    state.pending_recovery = [m.dataset_id for m in new_manifests]
    state.recovery_accepts = []
    for m in new_manifests:
        state.pool.append(m)
        state.instances.extend(ingest_manifest(m))
    _rebuild(state)
    state.iteration += 1

    # Pairs whose unmatched side got resolved by an exact match are moot.
    for cand in state.candidates.values():
        if cand.status == "pending" and cand.unmatched_digest not in state.unmatched:
            cand.status = "skipped"

    propose_matches(state, config)
    if config.auto_accept:
        auto_audit(state, config, log)
        settle_recovery(state)
    return True


def settle_recovery(state: TraceState) -> None:
    """Evaluate what each recovery dataset actually contributed.

    A dataset contributes through exact matches (a formerly unmatched
    digest now has an occurrence from it) or accepted merges into one of
    its entries. Datasets contributing neither are discarded: their
    instances leave the pool and the index is rebuilt without them.
    """
    if not state.pending_recovery:
        return
    to_discard: list[str] = []
    for ds in state.pending_recovery:
        exact = 0
        for u in state.u_before_recovery:
            if u not in state.index.entries or u in state.unmatched:
                continue
            if any(o.dataset_id == ds for o in state.index.entries[u].occurrences):
                exact += 1
        accepted = 0
        for _, dst in state.recovery_accepts:
            live = state.resolve(dst)
            entry = state.index.entries.get(live)
            if entry and any(o.dataset_id == ds for o in entry.occurrences):
                accepted += 1
        logger.info(
            "recovery dataset %s: %d exact, %d accepted matches",
            ds,
            exact,
            accepted,
        )
        if exact + accepted == 0:
            to_discard.append(ds)

    if to_discard:
        drop = set(to_discard)
        state.discarded.extend(to_discard)
        state.pool = [m for m in state.pool if m.dataset_id not in drop]
        state.instances = [i for i in state.instances if i.dataset_id not in drop]
        _rebuild(state)
    state.pending_recovery = []
    state.u_before_recovery = set()
    state.recovery_accepts = []


def finalize(
    state: TraceState, config: PipelineConfig, force: bool = False
) -> LineageIndex:
    """Stage 3 exit: label residual unmatched entries unknown.

    Requires the unmatched fraction to be at or below tau, unless the
    iteration cap was reached (or force is set because no candidate
    datasets remain), in which case the run finalizes anyway with a
    warning flag set.
    """
    settle_recovery(state)
    state.unmatched = collect_unmatched(state)
    fraction = unmatched_fraction(state)
    if fraction > config.tau:
        if state.iteration < config.max_iterations and not force:
            raise TraceError(
                f"cannot finalize: unmatched fraction {fraction:.4f} > "
                f"tau {config.tau} with iterations remaining"
            )
        state.cap_warning = True
        logger.warning(
            "finalizing with unmatched fraction %.4f > tau %.4f",
            fraction,
            config.tau,
        )
    state.index = mark_unknown(state.index, state.unmatched)
    state.index.check_complete()
    state.phase = "finalized"
    return state.index


def run_trace(
    state: TraceState,
    config: PipelineConfig,
    log: DecisionLog | None = None,
    recovery_batches: Sequence[Sequence[DatasetManifest]] = (),
    oracle: Callable[[MatchCandidate], str] | None = None,
) -> TraceState:
    """Drive the full loop headless.

    With auto_accept or an oracle the run goes all the way to a
    finalized index; otherwise it stops with a populated queue awaiting
    interactive decisions (rerun after the queue is decided to resume).
    """
    batches = list(recovery_batches)
    while True:
        propose_matches(state, config)
        if config.auto_accept or oracle is not None:
            auto_audit(state, config, log, oracle=oracle)
        elif pending_candidates(state):
            state.phase = "stage2_audit"
            return state
        settle_recovery(state)
        if unmatched_fraction(state) <= config.tau:
            finalize(state, config)
            return state
        if state.iteration >= config.max_iterations or not batches:
            finalize(state, config, force=True)
            return state
        run_recovery_iteration(state, batches.pop(0), config, log)


def replay_decisions(
    instances: Iterable[CanonicalInstance],
    pool: Sequence[DatasetManifest],
    log: DecisionLog,
    config: PipelineConfig | None = None,
) -> TraceState:
    """Rebuild the final index from the corpus and the log alone.

    No embedding or proposal runs: candidate pairs are reconstructed
    from the logged records and applied in order through the same
    apply_decision guards as a live run. Pass the corpus as it stood at
    the end of the run (after any recovery ingests and discards).
    """
    state = init_state(instances, pool)
    for rec in log.read():
        pid = rec["pair_id"]
        if pid not in state.candidates:
            u, c = rec["unmatched_digest"], rec["candidate_digest"]
            state.candidates[pid] = MatchCandidate(
                pair_id=pid,
                unmatched_digest=u,
                candidate_digest=c,
                similarity=rec["similarity"],
                unmatched_prompt="",
                candidate_prompt="",
            )
        elif state.candidates[pid].status != "pending":
            # Already settled as a sibling skip; the live run recorded
            # this verdict before that happened, so the effect matches.
            continue
        apply_decision(
            state,
            AuditDecision(
                pair_id=pid,
                verdict=rec["verdict"],
                reviewer=rec["reviewer"],
                decided_at=rec["decided_at"],
            ),
            log=None,
        )
    state.unmatched = collect_unmatched(state)
    return state


def restore_state(
    instances: Iterable[CanonicalInstance],
    pool: Sequence[DatasetManifest],
    log: DecisionLog,
    saved_candidates: Iterable[MatchCandidate],
    config: PipelineConfig | None = None,
) -> TraceState:
    """Crash recovery: corpus + persisted queue + log = live state.

    The queue file stores candidates as proposed (all pending); verdict
    statuses and merges come from replaying the log, so a process killed
    between a log append and the in-memory mutation restarts exactly as
    if the mutation had completed.
    """
    state = init_state(instances, pool)
    state.candidates = {c.pair_id: c for c in saved_candidates}
    for c in state.candidates.values():
        c.status = "pending"
    for rec in log.read():
        pid = rec["pair_id"]
        pair = state.candidates.get(pid)
        if pair is None:
            state.candidates[pid] = MatchCandidate(
                pair_id=pid,
                unmatched_digest=rec["unmatched_digest"],
                candidate_digest=rec["candidate_digest"],
                similarity=rec["similarity"],
                unmatched_prompt="",
                candidate_prompt="",
            )
        elif pair.status != "pending":
            continue
        apply_decision(
            state,
            AuditDecision(
                pair_id=pid,
                verdict=rec["verdict"],
                reviewer=rec["reviewer"],
                decided_at=rec["decided_at"],
            ),
            log=None,
        )
    state.unmatched = collect_unmatched(state)
    if pending_candidates(state):
        state.phase = "stage2_audit"
    return state
