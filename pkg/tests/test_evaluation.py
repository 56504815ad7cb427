import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from provkit.errors import NoScoresError, UnknownObjectError
from provkit.evaluation import (
    ExpertScore,
    ScoreLog,
    distribution_from_scores,
)


@pytest.fixture()
def log(tmp_path) -> ScoreLog:
    return ScoreLog(tmp_path / "scores.jsonl")


class TestRecordScore:
    def test_basic_store(self, log):
        log.submit("obj1", "Q1", "raterA", 3)
        state = log.current()
        assert state[("obj1", "Q1", "raterA")].score == 3

    def test_overwrite_keeps_audit_trail(self, log):
        log.submit("obj1", "Q1", "raterA", 3)
        log.submit("obj1", "Q1", "raterA", 4)
        assert log.current()[("obj1", "Q1", "raterA")].score == 4
        assert len(log.audit("obj1", "Q1", "raterA")) == 2

    def test_out_of_range_score(self, log):
        with pytest.raises(ValueError):
            log.submit("obj1", "Q1", "raterA", 5)
        with pytest.raises(ValueError):
            log.submit("obj1", "Q1", "raterA", 0)

    def test_bad_question(self, log):
        with pytest.raises(ValueError):
            log.submit("obj1", "Q3", "raterA", 2)

    def test_unknown_object_rejected(self, tmp_path):
        log = ScoreLog(tmp_path / "s.jsonl", object_exists=lambda oid: oid == "known")
        log.submit("known", "Q1", "r", 2)
        with pytest.raises(UnknownObjectError):
            log.submit("unknown", "Q1", "r", 2)

    def test_comment_round_trip(self, log):
        log.submit("obj1", "Q2", "raterB", 2, comment="borderline parallel")
        assert log.entries()[0].comment == "borderline parallel"

    def test_validation_in_dataclass(self):
        with pytest.raises(ValueError):
            ExpertScore("", "Q1", "r", 2, 0.0)
        with pytest.raises(ValueError):
            ExpertScore("o", "Q1", "", 2, 0.0)


class TestDistribution:
    def test_reported_proportions(self, log):
        # 368 / 306 / 177 / 149 of 1000 across scores 1..4
        counts = {1: 368, 2: 306, 3: 177, 4: 149}
        i = 0
        for score, n in counts.items():
            for _ in range(n):
                log.submit(f"obj{i}", "Q1", "rater", score)
                i += 1
        dist = log.distribution("Q1")
        assert dist.total == 1000
        assert dist.counts == counts
        assert dist.meaningful_share == pytest.approx(63.2, abs=0.05)
        rounded = dist.rounded()
        assert rounded["percentages"] == {"1": 36.8, "2": 30.6, "3": 17.7, "4": 14.9}
        assert rounded["meaningful_share"] == 63.2
        assert dist.meaningful_share == pytest.approx(100.0 - dist.percentages[1], abs=0.01)

    def test_all_ones_zero_meaningful(self, log):
        for i in range(5):
            log.submit(f"o{i}", "Q1", "r", 1)
        dist = log.distribution("Q1")
        assert dist.meaningful_share == 0.0

    def test_single_four(self, log):
        log.submit("o", "Q2", "r", 4)
        dist = log.distribution("Q2")
        assert dist.percentages[4] == 100.0
        assert dist.meaningful_share == 100.0

    def test_no_data_signals(self, log):
        with pytest.raises(NoScoresError):
            log.distribution("Q1")

    def test_questions_are_independent(self, log):
        log.submit("o", "Q1", "r", 1)
        log.submit("o", "Q2", "r", 4)
        assert log.distribution("Q1").meaningful_share == 0.0
        assert log.distribution("Q2").meaningful_share == 100.0

    def test_counts_conservation(self, log):
        for i in range(17):
            log.submit(f"o{i}", "Q1", "r", 1 + i % 4)
        dist = log.distribution("Q1")
        assert sum(dist.counts.values()) == 17

    def test_overwrite_not_double_counted(self, log):
        log.submit("o", "Q1", "r", 1)
        log.submit("o", "Q1", "r", 4)
        dist = log.distribution("Q1")
        assert dist.total == 1
        assert dist.counts[4] == 1 and dist.counts[1] == 0

    def test_exact_percentages_sum_to_100(self, log):
        for i, s in enumerate([1, 2, 2, 3, 4, 4, 4]):
            log.submit(f"o{i}", "Q1", "r", s)
        dist = log.distribution("Q1")
        assert sum(dist.percentages.values()) == pytest.approx(100.0, abs=1e-9)

    def test_half_up_rounding(self):
        # 1 of 400 = 0.25%: half-up gives 0.3 (banker's would give 0.2)
        scores = [1] * 399 + [4]
        dist = distribution_from_scores("Q1", scores)
        assert dist.rounded()["percentages"]["4"] == 0.3

    def test_table_render(self, log):
        log.submit("o", "Q1", "r", 3)
        text = log.distribution("Q1").table()
        assert "Q1" in text and "meaningful" in text

    @given(st.lists(st.sampled_from([1, 2, 3, 4]), min_size=1, max_size=60), st.randoms())
    @settings(max_examples=50, deadline=None)
    def test_permutation_invariance(self, scores, rnd):
        a = distribution_from_scores("Q1", scores)
        shuffled = list(scores)
        rnd.shuffle(shuffled)
        b = distribution_from_scores("Q1", shuffled)
        assert a.counts == b.counts
        assert a.meaningful_share == b.meaningful_share

    def test_recomputed_from_audit_equals_live(self, log, tmp_path):
        submissions = [
            ("a", "Q1", "r1", 2),
            ("b", "Q1", "r1", 3),
            ("a", "Q1", "r1", 1),  # overwrite
            ("a", "Q1", "r2", 4),
        ]
        for obj, q, r, s in submissions:
            log.submit(obj, q, r, s)
        live = log.distribution("Q1")
        replay = ScoreLog(tmp_path / "replay.jsonl")
        for entry in log.entries():
            replay.record(entry)
        assert replay.distribution("Q1").counts == live.counts
