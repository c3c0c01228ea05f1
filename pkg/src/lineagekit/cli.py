"""Command-line entry points.

Subcommands mirror the pipeline phases and read/write one run
directory, so a full audit is a sequence of invocations over the same
--run path:

    lineagekit ingest --run r --manifest a.json b.json
    lineagekit trace --run r --auto-accept
    lineagekit leak-scan --run r --benchmarks bench/
    lineagekit sca --run r --outcomes out/ --checkpoints ckpts.json --scale 8e9
    lineagekit score --run r --scale 8e9
    lineagekit srank --results results.json
    lineagekit report --run r --out audit/
    lineagekit serve --run r --port 8787

Exit status: 0 success, 1 validation error (bad flags, bad config,
missing inputs), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .attribution import (
    attribute_outcomes,
    category_proportions,
    learnability_score,
    load_checkpoint_manifest,
    load_outcomes,
    pair_outcomes,
)
from .corpus import (
    CorpusError,
    DatasetManifest,
    detect_mcq,
    ingest_manifest,
    load_manifest,
    load_manifests,
    normalize_prompt,
    write_corpus,
)
from .leakage import (
    LeakBandConfig,
    case_key,
    decontaminate,
    extract_case,
    leak_scan,
)
from .lineage import (
    LineageIndex,
    answer_consistency,
    composition_report,
    origin_attribution,
    reuse_profile,
    write_index,
)
from .ranking import competition_ranks, pearson, sample_std, spearman, srank
from .runstate import (
    load_config,
    load_run,
    run_paths,
    save_config,
    save_run,
)
from .scoring import (
    ScoreCard,
    ScoringConfig,
    compute_scorecard,
    normalize_delta,
    write_scorecards,
)
from .tracing import (
    DecisionLog,
    PipelineConfig,
    TraceError,
    pending_candidates,
    run_trace,
)

__all__ = ["main"]

REUSE_CAP = 5


class UsageError(Exception):
    """Bad command line; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _load_run_state(run_dir: Path):
    state, config, log = load_run(run_dir)
    return state, config, log


def _parse_bands(text: str) -> LeakBandConfig:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"bands must be two floors 'suspect,high': {text!r}")
    try:
        suspect, high = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise UsageError(f"bands must be numeric: {text!r}") from exc
    return LeakBandConfig(suspect_floor=suspect, high_floor=high)


def _dataset_inputs(index: LineageIndex, dataset_id: str) -> dict:
    """Assemble one dataset's raw scoring inputs from the shared index.

    All rates are weighted by the dataset's own instances; answer
    agreement is per entry, over every occurrence the entry has
    (disagreement anywhere in the lineage taints the prompt).
    """
    n = 0
    mcq = 0
    within_cap = 0
    touched = 0
    consistent = 0
    source_counts: dict[str, int] = {}
    for entry in index.entries.values():
        own = [o for o in entry.occurrences if o.dataset_id == dataset_id]
        if not own:
            continue
        touched += 1
        n += len(own)
        if entry.reuse_count() <= REUSE_CAP:
            within_cap += len(own)
        if detect_mcq(entry.canonical_prompt):
            mcq += len(own)
        answers = [o.answer for o in entry.occurrences if o.answer.strip()]
        if all(
            normalize_prompt(answers[0]) == normalize_prompt(a)
            for a in answers[1:]
        ):
            consistent += 1
        source_counts[entry.atomic_source] = (
            source_counts.get(entry.atomic_source, 0) + len(own)
        )
    return {
        "n": n,
        "r_con": consistent / touched if touched else 1.0,
        "r_mcq": mcq / n if n else 0.0,
        "p_reuse": within_cap / n if n else 1.0,
        "source_histogram": {s: c / n for s, c in sorted(source_counts.items())},
    }


def _read_json(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


def cmd_ingest(args: argparse.Namespace) -> int:
    from .tracing import init_state

    manifests = load_manifests(args.manifest)
    instances = []
    for m in manifests:
        instances.extend(ingest_manifest(m))
    state = init_state(instances, manifests)
    run = Path(args.run)
    save_run(run, state)
    save_config(run, load_config(run))
    counts = state.counts()
    print(
        f"ingested {counts['total']} instances from {len(manifests)} datasets "
        f"into {run} ({counts['unmatched']} unmatched)"
    )
    return 0


def cmd_trace(args: argparse.Namespace) -> int:
    run = Path(args.run)
    base = load_config(run)
    config = PipelineConfig(
        tau=args.tau if args.tau is not None else base.tau,
        delta=args.delta if args.delta is not None else base.delta,
        knn_k=args.k if args.k is not None else base.knn_k,
        max_iterations=(
            args.max_iterations
            if args.max_iterations is not None
            else base.max_iterations
        ),
        auto_accept=args.auto_accept or base.auto_accept,
        provider=base.provider,
    )
    state, _, log = _load_run_state(run)
    batches = [[load_manifest(p)] for p in (args.recover or [])]
    state = run_trace(state, config, log, recovery_batches=batches)
    save_run(run, state)
    save_config(run, config)
    counts = state.counts()
    if state.phase == "finalized":
        print(
            f"trace finalized: {counts['matched']}/{counts['total']} matched, "
            f"{counts['unmatched']} unmatched, iteration {counts['iteration']}"
        )
        if state.discarded:
            print(f"discarded datasets: {', '.join(state.discarded)}")
        if state.cap_warning:
            print("warning: finalized above tau (no recovery options left)")
    else:
        print(
            f"{counts['pending_candidates']} pairs await review "
            f"(serve this run and decide them, then rerun trace)"
        )
    return 0


def cmd_leak_scan(args: argparse.Namespace) -> int:
    run = Path(args.run)
    state, config, _ = _load_run_state(run)
    bench_dir = Path(args.benchmarks)
    if not bench_dir.is_dir():
        raise FileNotFoundError(f"benchmark directory not found: {bench_dir}")
    manifest_files = sorted(bench_dir.glob("*.json"))
    if not manifest_files:
        raise UsageError(f"no benchmark manifests in {bench_dir}")
    benchmarks = []
    for f in manifest_files:
        m = load_manifest(f)
        benchmarks.append(ingest_manifest(m))

    bench_ids = state.benchmark_ids()
    train = [i for i in state.instances if i.dataset_id not in bench_ids]
    bands = _parse_bands(args.bands) if args.bands else LeakBandConfig()
    report = leak_scan(train, benchmarks, config.provider, bands)

    paths = run_paths(run)
    paths["reports"].mkdir(exist_ok=True)
    out = paths["reports"] / "leaks.json"
    report.write(out)

    # Case payloads need both canonical texts, which only exist together
    # here at scan time; the review service serves them back later.
    train_text = {(i.dataset_id, i.instance_id): i.canonical_prompt for i in train}
    bench_text = {
        (i.dataset_id, i.instance_id): i.canonical_prompt
        for bench in benchmarks
        for i in bench
    }
    cases = {
        case_key(rec): extract_case(
            rec,
            train_text[(rec.train_dataset, rec.train_instance_id)],
            bench_text[(rec.benchmark_id, rec.benchmark_item_id)],
        )
        for rec in report.records
    }
    cases_out = paths["reports"] / "leak_cases.json"
    cases_out.write_text(
        json.dumps(cases, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )

    for ds in sorted(report.train_sizes):
        totals = report.band_totals[ds]
        print(
            f"{ds}: {report.n_leak[ds]} leaked of {report.train_sizes[ds]} "
            f"(exact {totals['exact']}, high {totals['high']}, "
            f"suspect {totals['suspect']})"
        )
    print(f"report written to {out}")

    if args.decontaminate:
        kept, removed = decontaminate(train, report)
        kept_path = paths["corpus"].with_name("corpus.decontaminated.jsonl")
        removed_path = paths["reports"] / "removed.jsonl"
        write_corpus(kept, kept_path)
        write_corpus(removed, removed_path)
        print(
            f"decontaminated: kept {len(kept)}, removed {len(removed)} "
            f"-> {kept_path}"
        )
    return 0


def cmd_sca(args: argparse.Namespace) -> int:
    run = Path(args.run)
    state, _, _ = _load_run_state(run)
    checkpoints = load_checkpoint_manifest(args.checkpoints)
    outcome_dir = Path(args.outcomes)
    if not outcome_dir.is_dir():
        raise FileNotFoundError(f"outcome directory not found: {outcome_dir}")
    outcome_files = sorted(outcome_dir.glob("*.jsonl"))
    if not outcome_files:
        raise UsageError(f"no outcome files in {outcome_dir}")
    outcomes: dict = {}
    for f in outcome_files:
        outcomes.update(load_outcomes(f))

    sources = {
        h: e.atomic_source
        for h, e in state.index.entries.items()
        if e.atomic_source != "unknown"
    }
    pairs, unpaired = pair_outcomes(outcomes, checkpoints, sources)
    result = attribute_outcomes(pairs, args.scale, unpaired)

    # Per-dataset breakdown: an instance counts toward every dataset its
    # lineage entry occurs in.
    per_dataset: dict[str, dict] = {}
    roles = state.roles()
    targets = [ds for ds, role in roles.items() if role == "target"]
    for ds in sorted(targets):
        labels = [
            result.labels[h]
            for h, e in state.index.entries.items()
            if h in result.labels
            and any(o.dataset_id == ds for o in e.occurrences)
        ]
        if not labels:
            continue
        props = category_proportions(labels)
        per_dataset[ds] = {
            "proportions": props,
            "l_sca": learnability_score(props, result.alphas),
            "n_pairs": len(labels),
        }

    paths = run_paths(run)
    paths["reports"].mkdir(exist_ok=True)
    out = paths["reports"] / "sca.json"
    out.write_text(
        json.dumps(
            {
                "model_scale": args.scale,
                "alphas": list(result.alphas),
                "proportions": result.proportions,
                "l_sca": result.l_sca,
                "n_pairs": len(pairs),
                "n_unpaired": len(unpaired),
                "per_dataset": per_dataset,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    print(
        f"L_SCA = {result.l_sca:.4f} at scale {args.scale:g} "
        f"({len(pairs)} pairs, {len(unpaired)} unpaired)"
    )
    for cat in ("01", "11", "10", "00"):
        print(f"  p{cat} = {result.proportions[cat]:.4f}")
    print(f"report written to {out}")
    return 0


def _scorecards_from_inputs(rows: list[dict], m: float, config: ScoringConfig):
    mean_norm = normalize_delta([float(r.get("delta_mean", 0.0)) for r in rows])
    pass_norm = normalize_delta([float(r.get("delta_pass", 0.0)) for r in rows])
    cards = []
    for row, dm, dp in zip(rows, mean_norm, pass_norm):
        cards.append(
            compute_scorecard(
                dataset_id=row["dataset_id"],
                m=m,
                r_con=float(row["r_con"]),
                r_mcq=float(row["r_mcq"]),
                p_reuse=float(row["p_reuse"]),
                l_sca=float(row.get("l_sca", 0.0)),
                n_leak=int(row.get("n_leak", 0)),
                n=int(row["n"]),
                delta_mean_norm=dm,
                delta_pass_norm=dp,
                source_histogram=row.get("source_histogram"),
                config=config,
            )
        )
    return cards


def cmd_score(args: argparse.Namespace) -> int:
    config = (
        ScoringConfig.from_dict(_read_json(Path(args.config)))
        if args.config
        else ScoringConfig()
    )
    run = Path(args.run)
    paths = run_paths(run)

    if args.inputs:
        rows = _read_json(Path(args.inputs))["datasets"]
    else:
        state, _, _ = _load_run_state(run)
        roles = state.roles()
        targets = sorted(ds for ds, role in roles.items() if role == "target")
        if not targets:
            raise UsageError("run has no target datasets to score")
        leak_report = {}
        leaks_file = paths["reports"] / "leaks.json"
        if leaks_file.exists():
            leak_report = _read_json(leaks_file).get("n_leak", {})
        sca_report: dict = {}
        sca_file = paths["reports"] / "sca.json"
        if sca_file.exists():
            sca_report = _read_json(sca_file)
        deltas = _read_json(Path(args.deltas)) if args.deltas else {}

        rows = []
        for ds in targets:
            inputs = _dataset_inputs(state.index, ds)
            per_ds_sca = sca_report.get("per_dataset", {}).get(ds)
            l_sca = (
                per_ds_sca["l_sca"]
                if per_ds_sca
                else sca_report.get("l_sca", 0.0)
            )
            ds_deltas = deltas.get(ds, {})
            rows.append(
                {
                    "dataset_id": ds,
                    "r_con": inputs["r_con"],
                    "r_mcq": inputs["r_mcq"],
                    "p_reuse": inputs["p_reuse"],
                    "l_sca": l_sca,
                    "n_leak": leak_report.get(ds, 0),
                    "n": inputs["n"],
                    "delta_mean": ds_deltas.get("mean", 0.0),
                    "delta_pass": ds_deltas.get("pass", 0.0),
                    "source_histogram": inputs["source_histogram"],
                }
            )

    cards = _scorecards_from_inputs(rows, args.scale, config)
    paths["reports"].mkdir(parents=True, exist_ok=True)
    out = paths["reports"] / "scorecards.json"
    write_scorecards(cards, out, config)
    for card in cards:
        o = card.outputs
        print(
            f"{card.dataset_id}: S1={o['s1']:.3f} S2={o['s2']:.3f} "
            f"S3={o['s3']:.3f} Q={o['q']:.3f}"
        )
    print(f"scorecards written to {out}")
    return 0


def cmd_srank(args: argparse.Namespace) -> int:
    results = _read_json(Path(args.results))
    datasets = results["datasets"]
    scores = results["scores"]
    if not scores:
        raise UsageError("results file has no score vectors")
    for scale, values in scores.items():
        if len(values) != len(datasets):
            raise UsageError(
                f"scale {scale}: {len(values)} scores for "
                f"{len(datasets)} datasets"
            )

    rank_matrix = {s: competition_ranks(v) for s, v in scores.items()}
    sigmas = {s: sample_std(v) for s, v in scores.items()}
    final = srank(rank_matrix, sigmas)
    total_sigma = sum(sigmas.values())

    correlations = {}
    for scale, q_vec in results.get("q_scores", {}).items():
        if scale not in scores:
            raise UsageError(f"q_scores scale {scale} has no score vector")
        correlations[scale] = {
            "pearson": pearson(q_vec, scores[scale]),
            "spearman": spearman(q_vec, scores[scale]),
        }

    payload = {
        "datasets": datasets,
        "per_scale": {
            s: {
                "ranks": rank_matrix[s],
                "sigma": sigmas[s],
                "weight": (
                    sigmas[s] / total_sigma
                    if total_sigma
                    else 1.0 / len(sigmas)
                ),
            }
            for s in scores
        },
        "srank": dict(zip(datasets, final)),
        "order": [ds for _, ds in sorted(zip(final, datasets))],
        "correlations": correlations,
    }
    if args.run:
        paths = run_paths(Path(args.run))
        paths["reports"].mkdir(parents=True, exist_ok=True)
        out = paths["reports"] / "srank.json"
        out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"ranking written to {out}")
    for ds, value in sorted(payload["srank"].items(), key=lambda kv: kv[1]):
        print(f"{value:8.4f}  {ds}")
    for scale, corr in correlations.items():
        print(
            f"{scale}: pearson {corr['pearson']:+.4f} "
            f"spearman {corr['spearman']:+.4f}"
        )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    run = Path(args.run)
    state, config, _ = _load_run_state(run)
    paths = run_paths(run)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    write_index(state.index, out_dir / "lineage.jsonl")

    composition = {
        ds: {
            src: {"count": count, "proportion": proportion}
            for src, (count, proportion) in per_source.items()
        }
        for ds, per_source in composition_report(state.index).items()
    }
    histogram, p_reuse = reuse_profile(state.index)
    (out_dir / "composition.json").write_text(
        json.dumps(
            {
                "counts": state.counts(),
                "composition": composition,
                "origin_attribution": origin_attribution(state.index),
                "reuse_histogram": histogram,
                "p_reuse": p_reuse,
                "answer_consistency": answer_consistency(state.index),
                "discarded": list(state.discarded),
                "config": config.to_dict(),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    for name in ("leaks.json", "scorecards.json", "sca.json", "srank.json"):
        src = paths["reports"] / name
        if src.exists():
            (out_dir / name).write_text(
                src.read_text(encoding="utf-8"), encoding="utf-8"
            )
        elif name in ("leaks.json", "scorecards.json"):
            (out_dir / name).write_text(
                json.dumps({"available": False}) + "\n", encoding="utf-8"
            )
    print(f"report written to {out_dir}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import make_app

    app = make_app(Path(args.run), ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="lineagekit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="canonicalize datasets into a run")
    p.add_argument("--manifest", action="extend", nargs="+", required=True)
    p.add_argument("--run", default="run")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("trace", help="run the tracing pipeline")
    p.add_argument("--run", default="run")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--auto-accept", action="store_true")
    p.add_argument(
        "--recover",
        action="extend",
        nargs="+",
        default=None,
        help="candidate source dataset manifests, one recovery batch each",
    )
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("leak-scan", help="scan training data against benchmarks")
    p.add_argument("--run", default="run")
    p.add_argument("--benchmarks", required=True)
    p.add_argument("--bands", default=None, help="suspect,high floors")
    p.add_argument("--decontaminate", action="store_true")
    p.set_defaults(func=cmd_leak_scan)

    p = sub.add_parser("sca", help="counterfactual learnability attribution")
    p.add_argument("--run", default="run")
    p.add_argument("--outcomes", required=True)
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--scale", type=float, required=True)
    p.set_defaults(func=cmd_sca)

    p = sub.add_parser("score", help="compute quality scorecards")
    p.add_argument("--run", default="run")
    p.add_argument("--scale", type=float, required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--inputs", default=None, help="precomputed input rows")
    p.add_argument("--deltas", default=None, help="measured deltas per dataset")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("srank", help="aggregate rankings across scales")
    p.add_argument("--results", required=True)
    p.add_argument("--run", default=None)
    p.set_defaults(func=cmd_srank)

    p = sub.add_parser("report", help="export the audit bundle")
    p.add_argument("--run", default="run")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="start the audit service")
    p.add_argument("--run", default="run")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", default=None, help="built UI directory to serve")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, TraceError, CorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
