from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, strategies as st

from langworld.errors import DivisionUndefined, EmptyInput, NonPositiveLength
from langworld.metrics import (
    EpisodeScore,
    aggregate,
    format_table,
    path_weighted,
    rearrangement_scores,
)
from langworld.tasks import randomize_rearrangement
from langworld.world import compare_status

from .scenes import kitchen_world


class TestRearrangementScores:
    def _setup(self, n=3, seed=13):
        world = kitchen_world()
        shuffled, target = randomize_rearrangement(world, n, seed=seed)
        return shuffled, target

    def test_all_restored(self):
        shuffled, target = self._setup()
        scores = rearrangement_scores(shuffled, target.clone(), target)
        assert scores == {"misplaced_pct": 0.0, "fixed_strict_pct": 100.0}

    def test_agent_does_nothing(self):
        shuffled, target = self._setup(n=3)
        scores = rearrangement_scores(shuffled, shuffled.clone(), target)
        assert scores == {"misplaced_pct": 100.0, "fixed_strict_pct": 0.0}

    def test_fixes_two_of_three_but_displaces_a_correct_object(self):
        # enumerate object-by-object per the strictness rule
        shuffled, target = self._setup(n=3, seed=21)
        wrong = sorted(compare_status(shuffled, target).object_ids)
        assert len(wrong) == 3
        end = shuffled.clone()
        for oid in wrong[:2]:  # restore two of the three
            end.objects[oid].cell = target.objects[oid].cell
            end.objects[oid].state.open = target.objects[oid].state.open
            tgt_container = target.container_of(oid)
            cur_container = end.container_of(oid)
            if cur_container is not None:
                cur_container.contents.remove(oid)
            if tgt_container is not None:
                end.objects[tgt_container.id].contents.append(oid)
        correct_ids = sorted(set(end.objects) - set(wrong))
        victim = next(
            oid
            for oid in correct_ids
            if end.objects[oid].holder is None and end.container_of(oid) is None
        )
        end.objects[victim].cell = (
            end.objects[victim].cell[0],
            (end.objects[victim].cell[1] + 1) % 8,
        )
        scores = rearrangement_scores(shuffled, end, target)
        assert scores["misplaced_pct"] == pytest.approx(100.0 * 2 / 3)
        assert scores["fixed_strict_pct"] == 0.0

    def test_undefined_when_nothing_shuffled(self):
        world = kitchen_world()
        with pytest.raises(DivisionUndefined):
            rearrangement_scores(world, world.clone(), world.clone())


class TestPathWeighted:
    def test_equal_lengths_identity(self):
        assert path_weighted(73.0, 10, 10) == 73.0

    def test_double_length_halves(self):
        assert path_weighted(100.0, 10, 20) == 50.0

    def test_shorter_than_expert_clamps(self):
        assert path_weighted(42.0, 10, 5) == 42.0

    def test_non_positive_length(self):
        with pytest.raises(NonPositiveLength):
            path_weighted(1.0, 0, 5)
        with pytest.raises(NonPositiveLength):
            path_weighted(1.0, 5, 0)

    @given(
        st.floats(0, 100),
        st.integers(1, 500),
        st.integers(1, 500),
        st.integers(1, 500),
    )
    def test_monotone_in_agent_length_and_homogeneous(self, s, lstar, l1, l2):
        lo, hi = sorted((l1, l2))
        assert path_weighted(s, lstar, hi) <= path_weighted(s, lstar, lo) + 1e-12
        assert math.isclose(
            path_weighted(2.0 * s, lstar, l1), 2.0 * path_weighted(s, lstar, l1), abs_tol=1e-9
        )


class TestAggregate:
    def test_avg_steps(self):
        scores = [
            EpisodeScore(success=True, goal_sr=1.0, steps=2),
            EpisodeScore(success=True, goal_sr=1.0, steps=4),
        ]
        assert aggregate(scores).avg_steps == 3.0

    def test_sr_percentage(self):
        scores = [
            EpisodeScore(success=bool(v), goal_sr=1.0 if v else 0.0, steps=1)
            for v in (1, 0, 1, 1)
        ]
        assert aggregate(scores).sr == 75.0

    def test_path_weighted_success_counts_half(self):
        scores = [
            EpisodeScore(success=True, goal_sr=1.0, steps=20, expert_len=10),
        ]
        assert aggregate(scores).path_weighted_sr == 50.0

    def test_acc_by_question_type(self):
        scores = [
            EpisodeScore(True, 1.0, 3, answer_correct=True, question_type="Exists"),
            EpisodeScore(False, 0.0, 3, answer_correct=False, question_type="Exists"),
            EpisodeScore(True, 1.0, 3, answer_correct=True, question_type="Counts"),
        ]
        summary = aggregate(scores)
        assert summary.acc_by_question == {"Counts": 100.0, "Exists": 50.0}

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            aggregate([])

    def test_permutation_invariant(self):
        rng = random.Random(3)
        scores = [
            EpisodeScore(
                success=rng.random() < 0.5,
                goal_sr=rng.random(),
                steps=rng.randint(1, 50),
                expert_len=rng.randint(1, 30),
            )
            for _ in range(12)
        ]
        base = aggregate(scores).to_dict()
        for _ in range(5):
            rng.shuffle(scores)
            assert aggregate(scores).to_dict() == base

    def test_sr_never_exceeds_goal_sr(self):
        rng = random.Random(9)
        scores = []
        for _ in range(30):
            success = rng.random() < 0.4
            goal_sr = 1.0 if success else rng.random()
            scores.append(EpisodeScore(success=success, goal_sr=goal_sr, steps=1))
        summary = aggregate(scores)
        assert summary.sr <= summary.goal_sr + 1e-9

    def test_table_formatting(self):
        summary = aggregate(
            [EpisodeScore(True, 1.0, 2), EpisodeScore(False, 0.5, 4)]
        )
        table = format_table({"Household": summary})
        lines = table.splitlines()
        assert lines[0].startswith("Group")
        assert "SR" in lines[0] and "Avg Steps" in lines[0]
        assert lines[2].startswith("Household")
