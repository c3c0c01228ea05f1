"""Counterfactual outcome labeling and learnability scoring."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lineagekit.attribution import (
    CheckpointInfo,
    OutcomePair,
    alphas_for_scale,
    attribute_outcomes,
    category_proportions,
    label_instance,
    learnability_score,
    load_checkpoint_manifest,
    load_outcomes,
    pair_outcomes,
)

ALPHAS_1B = (-0.3, -0.5, 1.5, -1.5)
ALPHAS_8B = (1.5, -0.8, 0.5, -0.8)


class TestLabelInstance:
    def test_truth_table_exhaustive(self):
        assert label_instance(False, False) == "00"
        assert label_instance(False, True) == "01"
        assert label_instance(True, False) == "10"
        assert label_instance(True, True) == "11"

    def test_total_on_truthy_inputs(self):
        assert label_instance(1, 0) == "10"


class TestCategoryProportions:
    def test_counting(self):
        p = category_proportions(["01", "01", "11", "00"])
        assert p == {"00": 0.25, "01": 0.5, "10": 0.0, "11": 0.25}

    def test_degenerate(self):
        assert category_proportions(["11", "11"])["11"] == 1.0

    def test_uniform(self):
        p = category_proportions(["00", "01", "10", "11"])
        assert all(v == 0.25 for v in p.values())

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            category_proportions([])

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError):
            category_proportions(["01", "02"])

    @given(st.lists(st.sampled_from(["00", "01", "10", "11"]), min_size=1))
    @settings(max_examples=80)
    def test_sums_to_one(self, labels):
        assert sum(category_proportions(labels).values()) == pytest.approx(
            1.0, abs=1e-9
        )

    @given(
        st.lists(st.sampled_from(["00", "01", "10", "11"]), min_size=1),
        st.randoms(use_true_random=False),
    )
    @settings(max_examples=40)
    def test_permutation_invariant(self, labels, rng):
        shuffled = labels[:]
        rng.shuffle(shuffled)
        assert category_proportions(shuffled) == category_proportions(labels)


class TestAlphasForScale:
    def test_small_anchor_exact(self):
        assert alphas_for_scale(1e9) == ALPHAS_1B

    def test_large_anchor_exact(self):
        assert alphas_for_scale(8e9) == ALPHAS_8B

    def test_log_midpoint(self):
        m = 10**0.4515 * 1e9
        a01, _, _, _ = alphas_for_scale(m)
        assert a01 == pytest.approx(0.6, abs=1e-3)

    def test_monotone_between_anchors(self):
        scales = [1e9 * 8 ** (k / 10) for k in range(11)]
        rows = [alphas_for_scale(m) for m in scales]
        for i in range(4):
            lo, hi = sorted((ALPHAS_1B[i], ALPHAS_8B[i]))
            column = [r[i] for r in rows]
            assert all(lo - 1e-12 <= v <= hi + 1e-12 for v in column)
            if ALPHAS_1B[i] < ALPHAS_8B[i]:
                assert column == sorted(column)
            else:
                assert column == sorted(column, reverse=True)


class TestLearnabilityScore:
    def test_pure_learnable_large_scale(self):
        p = {"00": 0.0, "01": 1.0, "10": 0.0, "11": 0.0}
        assert learnability_score(p, ALPHAS_8B) == pytest.approx(1.5)

    def test_uniform_large_scale(self):
        p = {c: 0.25 for c in ("00", "01", "10", "11")}
        assert learnability_score(p, ALPHAS_8B) == pytest.approx(
            0.1, abs=1e-12
        )

    def test_uniform_small_scale(self):
        p = {c: 0.25 for c in ("00", "01", "10", "11")}
        assert learnability_score(p, ALPHAS_1B) == pytest.approx(
            -0.2, abs=1e-12
        )

    @given(
        st.lists(st.sampled_from(["00", "01", "10", "11"]), min_size=1),
        st.floats(min_value=-3, max_value=3),
    )
    @settings(max_examples=60)
    def test_linear_in_alphas(self, labels, c):
        p = category_proportions(labels)
        base = learnability_score(p, ALPHAS_8B)
        scaled = learnability_score(p, tuple(c * a for a in ALPHAS_8B))
        assert scaled == pytest.approx(c * base, abs=1e-9)


def _outcome_file(path, checkpoint_id, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for digest, correct in rows:
            fh.write(
                json.dumps(
                    {
                        "digest": digest,
                        "checkpoint_id": checkpoint_id,
                        "correct": correct,
                    }
                )
                + "\n"
            )


class TestOutcomeLoading:
    def test_bool_and_accuracy_rows(self, tmp_path):
        p = tmp_path / "o.jsonl"
        _outcome_file(
            p, "base", [("d1", True), ("d2", 0.75), ("d3", 0.25)]
        )
        outcomes = load_outcomes(p)
        assert outcomes[("d1", "base")] is True
        assert outcomes[("d2", "base")] is True
        assert outcomes[("d3", "base")] is False

    def test_checkpoint_manifest(self, tmp_path):
        p = tmp_path / "checkpoints.json"
        p.write_text(
            json.dumps(
                {
                    "base": {"role": "base", "model_scale": 8e9},
                    "ck_a": {"role": "trained", "model_scale": 8e9},
                }
            ),
            encoding="utf-8",
        )
        infos = load_checkpoint_manifest(p)
        assert infos["base"] == CheckpointInfo("base", "base", 8e9)
        assert infos["ck_a"].role == "trained"


class TestPairOutcomes:
    def _checkpoints(self):
        # One checkpoint per atomic source, plus the untrained base.
        return {
            "base": CheckpointInfo("base", "base", 8e9),
            "ck_a": CheckpointInfo("ck_a", "src_a", 8e9),
        }

    def test_joins_per_source_checkpoint(self):
        outcomes = {
            ("d1", "base"): False,
            ("d1", "ck_a"): True,
            ("d2", "base"): True,
            ("d2", "ck_a"): True,
        }
        sources = {"d1": "src_a", "d2": "src_a"}
        pairs, unpaired = pair_outcomes(outcomes, self._checkpoints(), sources)
        assert [p.digest for p in pairs] == ["d1", "d2"]
        assert pairs[0].category == "01"
        assert pairs[0].atomic_source == "src_a"
        assert pairs[1].category == "11"
        assert unpaired == []

    def test_source_without_checkpoint_unpaired(self):
        outcomes = {("d1", "base"): False}
        pairs, unpaired = pair_outcomes(
            outcomes, self._checkpoints(), {"d1": "src_b"}
        )
        assert pairs == []
        assert unpaired == ["d1"]

    def test_missing_base_outcome_unpaired(self):
        outcomes = {("d1", "ck_a"): True}
        pairs, unpaired = pair_outcomes(
            outcomes, self._checkpoints(), {"d1": "src_a"}
        )
        assert pairs == []
        assert unpaired == ["d1"]

    def test_requires_exactly_one_base(self):
        with pytest.raises(ValueError, match="base"):
            pair_outcomes(
                {}, {"ck_a": CheckpointInfo("ck_a", "src_a", 8e9)}, {}
            )
        two_bases = {
            "b1": CheckpointInfo("b1", "base", 8e9),
            "b2": CheckpointInfo("b2", "base", 8e9),
        }
        with pytest.raises(ValueError, match="base"):
            pair_outcomes({}, two_bases, {})


class TestAttributeOutcomes:
    def test_end_to_end_uniform(self):
        pairs = [
            OutcomePair("d1", "src_a", False, False),
            OutcomePair("d2", "src_a", False, True),
            OutcomePair("d3", "src_a", True, False),
            OutcomePair("d4", "src_a", True, True),
        ]
        result = attribute_outcomes(pairs, 8e9)
        assert result.l_sca == pytest.approx(0.1, abs=1e-12)
        assert result.labels == {
            "d1": "00",
            "d2": "01",
            "d3": "10",
            "d4": "11",
        }
        assert sum(result.proportions.values()) == pytest.approx(1.0)

    def test_unpaired_carried_through(self):
        pairs = [OutcomePair("d1", "src_a", False, True)]
        result = attribute_outcomes(pairs, 8e9, unpaired=["d9"])
        assert result.unpaired == ["d9"]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            attribute_outcomes([], 8e9)
