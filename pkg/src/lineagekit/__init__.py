"""lineagekit: provenance tracing and contamination auditing for
instruction/QA training corpora.

The package canonicalizes heterogeneous datasets into a content-
addressed corpus, traces every instance to an atomic source through a
temporal index plus an audited near-duplicate match loop, scans
training data for benchmark leakage, and scores datasets with
learnability-based quality metrics aggregated into a cross-scale
reference ranking.

Layout:

    corpus       canonicalization, hashing, dataset manifests
    lineage      temporal index, merges, composition reports
    embedding    builtin and external embedders, cosine, knn
    tracing      the staged pipeline, audit queue, decision log
    leakage      benchmark contamination scanner and decontamination
    attribution  counterfactual learnability labeling (L_SCA)
    scoring      S1/S2/S3/Q scorecards
    ranking      competition ranks, std-weighted rank aggregation
    textdiff     whitespace-visible diffs for review surfaces
    synth        seeded fixture corpora with known ground truth
    runstate     run-directory persistence
    service      the audit HTTP API
    cli          command-line entry points
"""

from __future__ import annotations

from .attribution import (
    CATEGORIES,
    AttributionResult,
    CheckpointInfo,
    OutcomePair,
    SCAConfig,
    alphas_for_scale,
    attribute_outcomes,
    category_proportions,
    label_instance,
    learnability_score,
    load_checkpoint_manifest,
    load_outcomes,
    pair_outcomes,
)
from .corpus import (
    AdapterConfig,
    CanonicalInstance,
    CorpusError,
    DatasetManifest,
    canonicalize_record,
    detect_mcq,
    hash_prompt,
    ingest_manifest,
    load_manifest,
    load_manifests,
    normalize_prompt,
    read_corpus,
    write_corpus,
)
from .embedding import (
    EmbeddingProvider,
    cosine,
    embed_text,
    embed_texts,
    knn,
    report_similarity,
)
from .leakage import (
    LeakBandConfig,
    LeakRecord,
    LeakReport,
    case_key,
    decontaminate,
    extract_case,
    leak_scan,
)
from .lineage import (
    LineageEntry,
    LineageIndex,
    Occurrence,
    answer_consistency,
    build_index,
    composition_report,
    make_entry,
    mark_unknown,
    merge_entries,
    origin_attribution,
    read_index,
    reuse_profile,
    write_index,
)
from .ranking import (
    average_ranks,
    competition_ranks,
    pearson,
    sample_std,
    spearman,
    srank,
)
from .scoring import (
    ScoreCard,
    ScoringConfig,
    compute_scorecard,
    diversity_bonus,
    interpolate,
    logistic,
    normalize_delta,
    q,
    s1,
    s1a,
    s1b,
    s1c,
    s2,
    s3,
    write_scorecards,
)
from .synth import (
    SynthResult,
    SynthSpec,
    load_synth_manifests,
    make_leak_fixture,
    measure_attribution,
    synth_corpus,
)
from .textdiff import DiffSpan, case_payload, changed_spans, diff_spans, render_visible
from .tracing import (
    AlreadyDecidedError,
    AuditDecision,
    DecisionLog,
    MatchCandidate,
    PipelineConfig,
    TraceError,
    TraceState,
    UnknownPairError,
    apply_decision,
    auto_audit,
    collect_unmatched,
    finalize,
    init_state,
    pending_candidates,
    propose_matches,
    replay_decisions,
    restore_state,
    run_recovery_iteration,
    run_trace,
    settle_recovery,
    unmatched_fraction,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "AlreadyDecidedError",
    "AttributionResult",
    "AuditDecision",
    "CATEGORIES",
    "CanonicalInstance",
    "CheckpointInfo",
    "CorpusError",
    "DatasetManifest",
    "DecisionLog",
    "DiffSpan",
    "EmbeddingProvider",
    "LeakBandConfig",
    "LeakRecord",
    "LeakReport",
    "LineageEntry",
    "LineageIndex",
    "MatchCandidate",
    "Occurrence",
    "OutcomePair",
    "PipelineConfig",
    "SCAConfig",
    "ScoreCard",
    "ScoringConfig",
    "SynthResult",
    "SynthSpec",
    "TraceError",
    "TraceState",
    "UnknownPairError",
    "alphas_for_scale",
    "answer_consistency",
    "apply_decision",
    "attribute_outcomes",
    "auto_audit",
    "average_ranks",
    "build_index",
    "canonicalize_record",
    "case_key",
    "case_payload",
    "category_proportions",
    "changed_spans",
    "collect_unmatched",
    "competition_ranks",
    "composition_report",
    "compute_scorecard",
    "cosine",
    "decontaminate",
    "detect_mcq",
    "diff_spans",
    "diversity_bonus",
    "embed_text",
    "embed_texts",
    "extract_case",
    "finalize",
    "hash_prompt",
    "ingest_manifest",
    "init_state",
    "interpolate",
    "knn",
    "label_instance",
    "leak_scan",
    "learnability_score",
    "load_checkpoint_manifest",
    "load_manifest",
    "load_manifests",
    "load_outcomes",
    "load_synth_manifests",
    "logistic",
    "make_entry",
    "make_leak_fixture",
    "mark_unknown",
    "measure_attribution",
    "merge_entries",
    "normalize_delta",
    "normalize_prompt",
    "origin_attribution",
    "pair_outcomes",
    "pearson",
    "pending_candidates",
    "propose_matches",
    "q",
    "read_corpus",
    "read_index",
    "replay_decisions",
    "report_similarity",
    "restore_state",
    "reuse_profile",
    "run_recovery_iteration",
    "run_trace",
    "s1",
    "s1a",
    "s1b",
    "s1c",
    "s2",
    "s3",
    "sample_std",
    "settle_recovery",
    "spearman",
    "srank",
    "synth_corpus",
    "unmatched_fraction",
    "write_corpus",
    "write_index",
    "write_scorecards",
]
