"""Tracing pipeline: unmatched collection, proposal, audit, recovery."""

from __future__ import annotations

import datetime as dt

import pytest

from lineagekit.lineage import mark_unknown, write_index
from lineagekit.tracing import (
    AlreadyDecidedError,
    AuditDecision,
    DecisionLog,
    MatchCandidate,
    PipelineConfig,
    TraceError,
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
    unmatched_fraction,
)

from helpers import inst, mem_manifest, rec, write_dataset

# Fixture prose chosen so single-character edits stay well inside the
# 0.90 similarity floor while unrelated prompts stay far below it.
P_A = "the quick brown fox jumps over the lazy dog near the river bank"
P_B = "what is the smallest prime number greater than one hundred"
P_C = "compute the total surface area of a cube with side length seven"
P_C_EDIT = "compute the totol surface area of a cube with side length seven"
P_D = "a completely unrelated question about ancient roman history topics"

P_L = (
    "in how many distinct ways can seven identical apples be divided "
    "among three children standing in a line"
)
P_L_NEAR = P_L.replace("line", "lane")
P_L_EDIT = P_L.replace("apples", "applus")
P_L_EDIT2 = P_L.replace("children", "childran")


def _decision(pair_id, verdict="accept", reviewer="tester"):
    return AuditDecision(
        pair_id=pair_id,
        verdict=verdict,
        reviewer=reviewer,
        decided_at="2025-01-01T00:00:00+00:00",
    )


def _main_state():
    """One source dataset, one audited dataset with four variant kinds."""
    pool = [
        mem_manifest("src2023", "2023-01-01", role="source"),
        mem_manifest("tgt2024", "2024-06-01", role="target"),
    ]
    instances = [
        inst(P_A, "src2023", "s1", "2023-01-01", source="lab_a"),
        inst(P_B, "src2023", "s2", "2023-01-01", source="lab_a"),
        inst(P_C, "src2023", "s3", "2023-01-01", source="lab_b"),
        inst(P_A, "tgt2024", "t1", "2024-06-01"),
        inst("what  is the smallest prime\nnumber greater than one hundred",
             "tgt2024", "t2", "2024-06-01"),
        inst(P_C_EDIT, "tgt2024", "t3", "2024-06-01"),
        inst(P_D, "tgt2024", "t4", "2024-06-01"),
    ]
    return init_state(instances, pool)


class TestCollectUnmatched:
    def test_variants_and_novel_are_unmatched(self):
        state = _main_state()
        expected = {inst(P_C_EDIT, "x").digest, inst(P_D, "x").digest}
        assert state.unmatched == expected

    def test_exact_and_whitespace_copies_match_at_stage1(self):
        pool = [
            mem_manifest("src", "2023-01-01", role="source"),
            mem_manifest("tgt", "2024-01-01", role="target"),
        ]
        instances = [
            inst(P_A, "src", "s1", "2023-01-01"),
            inst(P_A, "tgt", "t1", "2024-01-01"),
            inst(P_A.replace(" ", "  "), "tgt", "t2", "2024-01-01"),
        ]
        state = init_state(instances, pool)
        assert state.unmatched == set()

    def test_novel_prompt_collected(self):
        pool = [mem_manifest("tgt", "2024-01-01", role="target")]
        state = init_state([inst(P_D, "tgt", "t1", "2024-01-01")], pool)
        assert state.unmatched == {inst(P_D, "x").digest}

    def test_rerun_is_stable(self):
        state = _main_state()
        assert collect_unmatched(state) == collect_unmatched(state)

    def test_fraction_is_instance_weighted(self):
        state = _main_state()
        assert unmatched_fraction(state) == pytest.approx(2 / 7)

    def test_duplicate_pool_ids_rejected(self):
        pool = [mem_manifest("same"), mem_manifest("same")]
        with pytest.raises(ValueError):
            init_state([], pool)


class TestProposeMatches:
    def test_planted_edit_yields_one_candidate(self):
        state = _main_state()
        new = propose_matches(state, PipelineConfig(delta=0.90))
        assert len(new) == 1
        cand = new[0]
        assert cand.unmatched_digest == inst(P_C_EDIT, "x").digest
        assert cand.candidate_digest == inst(P_C, "x").digest
        assert cand.similarity >= 0.90
        assert state.phase == "stage2_audit"

    def test_delta_above_similarity_blocks(self):
        state = _main_state()
        assert propose_matches(state, PipelineConfig(delta=0.99)) == []

    def test_unrelated_prompt_gets_no_candidate(self):
        state = _main_state()
        new = propose_matches(state, PipelineConfig(delta=0.90))
        d_digest = inst(P_D, "x").digest
        assert all(c.unmatched_digest != d_digest for c in new)

    def test_pairs_not_recreated(self):
        state = _main_state()
        config = PipelineConfig(delta=0.90)
        assert propose_matches(state, config)
        assert propose_matches(state, config) == []

    def test_later_released_entries_ineligible(self):
        pool = [
            mem_manifest("future2025", "2025-01-01", role="source"),
            mem_manifest("tgt2024", "2024-06-01", role="target"),
        ]
        instances = [
            inst(P_C, "future2025", "f1", "2025-01-01"),
            inst(P_C_EDIT, "tgt2024", "t1", "2024-06-01"),
        ]
        state = init_state(instances, pool)
        assert propose_matches(state, PipelineConfig(delta=0.90)) == []

    def test_raising_delta_never_adds_candidates(self):
        lo = _main_state()
        hi = _main_state()
        n_lo = len(propose_matches(lo, PipelineConfig(delta=0.90)))
        n_hi = len(propose_matches(hi, PipelineConfig(delta=0.95)))
        assert n_hi <= n_lo

    def test_queue_sorted_by_similarity(self):
        state = _sibling_state()
        propose_matches(state, PipelineConfig(delta=0.90))
        queue = pending_candidates(state)
        sims = [c.similarity for c in queue]
        assert sims == sorted(sims, reverse=True)


def _sibling_state():
    """One edited prompt similar to two distinct source prompts."""
    pool = [
        mem_manifest("src", "2023-01-01", role="source"),
        mem_manifest("tgt", "2024-01-01", role="target"),
    ]
    instances = [
        inst(P_L, "src", "s1", "2023-01-01", source="lab_a"),
        inst(P_L_NEAR, "src", "s2", "2023-01-01", source="lab_a"),
        inst(P_L_EDIT, "tgt", "t1", "2024-01-01"),
    ]
    return init_state(instances, pool)


class TestApplyDecision:
    def test_accept_merges_and_shrinks_unmatched(self):
        state = _main_state()
        (cand,) = propose_matches(state, PipelineConfig(delta=0.90))
        entries_before = len(state.index.entries)
        total_before = state.index.total_instances

        pair = apply_decision(state, _decision(cand.pair_id))
        assert pair.status == "accepted"
        assert len(state.index.entries) == entries_before - 1
        assert state.index.total_instances == total_before
        state.index.check_complete()
        assert cand.unmatched_digest not in state.unmatched
        merged = state.index.entries[cand.candidate_digest]
        assert len(merged.occurrences) == 2
        assert merged.atomic_source == "lab_b"

    def test_reject_changes_only_status(self):
        state = _main_state()
        (cand,) = propose_matches(state, PipelineConfig(delta=0.90))
        entries_before = dict(state.index.entries)
        unmatched_before = set(state.unmatched)
        pair = apply_decision(state, _decision(cand.pair_id, "reject"))
        assert pair.status == "rejected"
        assert state.index.entries == entries_before
        assert state.unmatched == unmatched_before

    def test_skip(self):
        state = _main_state()
        (cand,) = propose_matches(state, PipelineConfig(delta=0.90))
        assert apply_decision(state, _decision(cand.pair_id, "skip")).status == "skipped"

    def test_second_decision_rejected(self):
        state = _main_state()
        (cand,) = propose_matches(state, PipelineConfig(delta=0.90))
        apply_decision(state, _decision(cand.pair_id, "reject"))
        with pytest.raises(AlreadyDecidedError):
            apply_decision(state, _decision(cand.pair_id))

    def test_unknown_pair_rejected(self):
        state = _main_state()
        with pytest.raises(UnknownPairError):
            apply_decision(state, _decision("nope-nope"))

    def test_invalid_verdict_rejected(self):
        with pytest.raises(ValueError):
            _decision("p", verdict="maybe")

    def test_decision_logged_with_pair_fields(self, tmp_path):
        state = _main_state()
        (cand,) = propose_matches(state, PipelineConfig(delta=0.90))
        log = DecisionLog(tmp_path / "decisions.log")
        apply_decision(state, _decision(cand.pair_id), log)
        (record,) = log.read()
        assert record["pair_id"] == cand.pair_id
        assert record["verdict"] == "accept"
        assert record["reviewer"] == "tester"
        assert record["unmatched_digest"] == cand.unmatched_digest
        assert record["candidate_digest"] == cand.candidate_digest
        assert record["similarity"] == pytest.approx(cand.similarity)

    def test_sibling_pairs_close_after_accept(self):
        state = _sibling_state()
        new = propose_matches(state, PipelineConfig(delta=0.90, knn_k=5))
        u = inst(P_L_EDIT, "x").digest
        mine = [c for c in new if c.unmatched_digest == u]
        assert len(mine) == 2
        top, other = mine[0], mine[1]
        apply_decision(state, _decision(top.pair_id))
        assert top.status == "accepted"
        assert other.status == "skipped"

    def test_accept_after_chain_convergence_is_moot(self):
        pool = [
            mem_manifest("src", "2023-01-01", role="source"),
            mem_manifest("tgt", "2024-01-01", role="target"),
        ]
        instances = [
            inst(P_L, "src", "s1", "2023-01-01", source="lab_a"),
            inst(P_L_EDIT, "tgt", "t1", "2024-01-01"),
            inst(P_L_EDIT2, "tgt", "t2", "2024-01-01"),
        ]
        state = init_state(instances, pool)
        u1 = inst(P_L_EDIT, "x").digest
        u2 = inst(P_L_EDIT2, "x").digest
        c = inst(P_L, "x").digest

        def plant(pid, u, cd):
            state.candidates[pid] = MatchCandidate(
                pair_id=pid,
                unmatched_digest=u,
                candidate_digest=cd,
                similarity=0.95,
                unmatched_prompt="",
                candidate_prompt="",
            )

        plant("x1", u1, c)
        plant("x2", u2, u1)
        assert apply_decision(state, _decision("x1")).status == "accepted"
        assert apply_decision(state, _decision("x2")).status == "accepted"
        # x3 proposes a merge whose two sides already converged via the
        # chain u2 -> u1 -> c; the accept downgrades to a skip.
        plant("x3", c, u2)
        assert apply_decision(state, _decision("x3")).status == "skipped"
        state.index.check_complete()
        assert len(state.index.entries[c].occurrences) == 3

    def test_unmatched_never_grows_under_decisions(self):
        state = _sibling_state()
        propose_matches(state, PipelineConfig(delta=0.90, knn_k=5))
        sizes = [len(state.unmatched)]
        for cand in pending_candidates(state):
            if cand.status != "pending":
                continue
            apply_decision(state, _decision(cand.pair_id))
            sizes.append(len(state.unmatched))
        assert sizes == sorted(sizes, reverse=True)


class TestAutoAudit:
    def test_accepts_entire_queue(self):
        state = _main_state()
        config = PipelineConfig(delta=0.90)
        propose_matches(state, config)
        decided = auto_audit(state, config)
        assert decided == 1
        assert pending_candidates(state) == []

    def test_oracle_verdicts_respected(self):
        state = _main_state()
        config = PipelineConfig(delta=0.90)
        propose_matches(state, config)
        entries_before = dict(state.index.entries)
        auto_audit(state, config, oracle=lambda pair: "reject")
        assert state.index.entries == entries_before
        assert all(
            c.status == "rejected" for c in state.candidates.values()
        )


class TestRecovery:
    def _disk_state(self, tmp_path, extra_target=()):
        src = write_dataset(
            tmp_path,
            "src2023",
            "2023-01-01",
            [rec(P_A, "s1", origin="lab_a")],
            role="source",
        )
        tgt = write_dataset(
            tmp_path,
            "tgt2024",
            "2024-06-01",
            [rec(P_A, "t0")] + [rec(p, f"t{k + 1}") for k, p in enumerate(extra_target)],
            role="target",
        )
        from lineagekit.corpus import ingest_manifest, load_manifest

        manifests = [load_manifest(src), load_manifest(tgt)]
        instances = []
        for m in manifests:
            instances.extend(ingest_manifest(m))
        return init_state(instances, manifests)

    def test_noop_below_tau(self, tmp_path):
        state = self._disk_state(tmp_path)
        config = PipelineConfig(tau=0.5)
        assert run_recovery_iteration(state, [], config) is False
        assert state.iteration == 0

    def test_exact_rescue_dataset_contributes(self, tmp_path):
        state = self._disk_state(tmp_path, extra_target=[P_L])
        rescue = write_dataset(
            tmp_path,
            "rescue2022",
            "2022-05-01",
            [rec(P_L, "r1", origin="lab_r")],
            role="source",
        )
        from lineagekit.corpus import load_manifest

        config = PipelineConfig(tau=0.01, auto_accept=True)
        assert run_recovery_iteration(state, [load_manifest(rescue)], config)
        assert state.iteration == 1
        assert state.discarded == []
        assert unmatched_fraction(state) == 0.0
        entry = state.index.entries[inst(P_L, "x").digest]
        assert entry.origin_dataset == "rescue2022"
        assert entry.atomic_source == "lab_r"

    def test_zero_contribution_dataset_discarded(self, tmp_path):
        state = self._disk_state(tmp_path, extra_target=[P_D])
        noise = write_dataset(
            tmp_path,
            "noise2022",
            "2022-05-01",
            [rec("totally different filler text about gardening", "n1")],
            role="source",
        )
        from lineagekit.corpus import load_manifest

        config = PipelineConfig(tau=0.01, auto_accept=True)
        run_recovery_iteration(state, [load_manifest(noise)], config)
        assert state.discarded == ["noise2022"]
        assert all(m.dataset_id != "noise2022" for m in state.pool)
        assert all(i.dataset_id != "noise2022" for i in state.instances)
        state.index.check_complete()

    def test_iteration_cap_enforced(self, tmp_path):
        state = self._disk_state(tmp_path, extra_target=[P_D])
        config = PipelineConfig(tau=0.01, max_iterations=2)
        state.iteration = 2
        with pytest.raises(TraceError, match="cap"):
            run_recovery_iteration(state, [], config)

    def test_duplicate_dataset_rejected(self, tmp_path):
        state = self._disk_state(tmp_path, extra_target=[P_D])
        dup = write_dataset(
            tmp_path, "src2023x", "2022-01-01", [rec("z", "z1")], role="source"
        )
        from lineagekit.corpus import load_manifest

        m = load_manifest(dup)
        m.dataset_id = "src2023"
        with pytest.raises(ValueError, match="duplicate"):
            run_recovery_iteration(state, [m], PipelineConfig())


class TestFinalize:
    def test_small_residual_within_tau(self):
        # 1 unmatched instance out of 200 (0.5%) finalizes cleanly.
        pool = [
            mem_manifest("src", "2023-01-01", role="source"),
            mem_manifest("tgt", "2024-01-01", role="target"),
        ]
        instances = []
        for i in range(100):
            text = f"shared prompt number {i} with enough words to stand alone"
            instances.append(inst(text, "src", f"s{i}", "2023-01-01"))
            instances.append(inst(text, "tgt", f"t{i}", "2024-01-01"))
        instances[-1] = inst(P_D, "tgt", "t99", "2024-01-01")
        state = init_state(instances, pool)
        assert unmatched_fraction(state) == pytest.approx(0.005)

        index = finalize(state, PipelineConfig(tau=0.01))
        assert state.phase == "finalized"
        assert state.cap_warning is False
        assert index.entries[inst(P_D, "x").digest].status == "unknown"

    def test_refuses_above_tau_with_iterations_left(self):
        state = _main_state()
        with pytest.raises(TraceError, match="cannot finalize"):
            finalize(state, PipelineConfig(tau=0.01))

    def test_force_finalizes_with_warning(self):
        state = _main_state()
        finalize(state, PipelineConfig(tau=0.01), force=True)
        assert state.cap_warning is True
        assert state.phase == "finalized"

    def test_no_unmatched_no_unknowns(self):
        pool = [
            mem_manifest("src", "2023-01-01", role="source"),
            mem_manifest("tgt", "2024-01-01", role="target"),
        ]
        instances = [
            inst(P_A, "src", "s1", "2023-01-01", source="lab_a"),
            inst(P_A, "tgt", "t1", "2024-01-01"),
        ]
        state = init_state(instances, pool)
        index = finalize(state, PipelineConfig(tau=0.01))
        assert all(e.status != "unknown" for e in index.entries.values())


class TestRunTrace:
    def test_auto_accept_finalizes(self):
        state = _main_state()
        config = PipelineConfig(tau=0.35, delta=0.90, auto_accept=True)
        run_trace(state, config)
        assert state.phase == "finalized"
        assert state.cap_warning is False
        assert unmatched_fraction(state) <= 0.35
        state.index.check_complete()

    def test_exhausted_batches_force_finalize(self):
        state = _main_state()
        config = PipelineConfig(tau=0.01, delta=0.90, auto_accept=True)
        run_trace(state, config)
        assert state.phase == "finalized"
        assert state.cap_warning is True
        d_entry = state.index.entries[inst(P_D, "x").digest]
        assert d_entry.status == "unknown"

    def test_interactive_run_stops_at_queue(self):
        state = _main_state()
        config = PipelineConfig(tau=0.01, delta=0.90)
        run_trace(state, config)
        assert state.phase == "stage2_audit"
        assert pending_candidates(state)

    def test_conservation_through_full_run(self):
        state = _main_state()
        total = state.index.total_instances
        run_trace(state, PipelineConfig(tau=0.35, auto_accept=True))
        assert state.index.total_instances == total
        assert state.index.occurrence_count() == total


class TestReplayAndRestore:
    def test_replay_reproduces_export_bytes(self, tmp_path):
        state = _main_state()
        log = DecisionLog(tmp_path / "decisions.log")
        run_trace(
            state, PipelineConfig(tau=0.35, delta=0.90, auto_accept=True), log
        )
        live = tmp_path / "live.jsonl"
        write_index(state.index, live)

        replayed = replay_decisions(state.instances, state.pool, log)
        final = mark_unknown(replayed.index, replayed.unmatched)
        again = tmp_path / "replayed.jsonl"
        write_index(final, again)
        assert live.read_bytes() == again.read_bytes()

    def test_replay_with_rejections(self, tmp_path):
        state = _sibling_state()
        log = DecisionLog(tmp_path / "decisions.log")
        config = PipelineConfig(tau=0.5, delta=0.90, knn_k=5)
        propose_matches(state, config)
        queue = pending_candidates(state)
        apply_decision(state, _decision(queue[0].pair_id, "reject"), log)
        apply_decision(state, _decision(queue[1].pair_id, "accept"), log)

        replayed = replay_decisions(state.instances, state.pool, log)
        assert replayed.index.entries == state.index.entries
        assert replayed.unmatched == state.unmatched

    def test_restore_matches_live_state(self, tmp_path):
        state = _sibling_state()
        config = PipelineConfig(tau=0.01, delta=0.90, knn_k=5)
        propose_matches(state, config)
        saved = [
            MatchCandidate.from_dict(dict(c.to_dict(), status="pending"))
            for c in state.candidates.values()
        ]
        log = DecisionLog(tmp_path / "decisions.log")
        queue = pending_candidates(state)
        apply_decision(state, _decision(queue[0].pair_id), log)

        restored = restore_state(state.instances, state.pool, log, saved)
        assert restored.index.entries == state.index.entries
        assert restored.unmatched == state.unmatched
        assert {
            p: c.status for p, c in restored.candidates.items()
        } == {p: c.status for p, c in state.candidates.items()}

    def test_restore_with_pending_queue_resumes_audit(self, tmp_path):
        state = _main_state()
        propose_matches(state, PipelineConfig(delta=0.90))
        saved = list(state.candidates.values())
        log = DecisionLog(tmp_path / "decisions.log")
        restored = restore_state(state.instances, state.pool, log, saved)
        assert restored.phase == "stage2_audit"
        assert len(pending_candidates(restored)) == 1
