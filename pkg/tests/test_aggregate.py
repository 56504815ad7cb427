import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from provkit.aggregate import dedup_sort, pool, pool_records, truncate
from provkit.retrieval import SearchHit

label_lists = st.lists(
    st.sampled_from([f"doc:{p:04d}:img-{c}" for p in (1, 2, 3) for c in "abcdef"]),
    max_size=8,
    unique=True,
)


def hits(labels, strategy, base=0.9):
    return [SearchHit(label, base - 0.01 * i, strategy) for i, label in enumerate(labels)]


class TestPool:
    def test_hand_executed_union(self):
        # A = {b, c}, B = {a, c}, C = {c}
        p = pool(hits(["b", "c"], "raw"), hits(["a", "c"], "edge"), hits(["c"], "clip"))
        assert {label: e.multiplicity for label, e in p.entries.items()} == {
            "a": 1,
            "b": 1,
            "c": 3,
        }
        assert p.entries["c"].strategies == frozenset({"raw", "edge", "clip"})
        assert p.entries["a"].strategies == frozenset({"edge"})

    def test_three_empty_lists(self):
        assert len(pool([], [], [])) == 0

    def test_disjoint_singletons(self):
        p = pool(hits(["a"], "raw"), hits(["b"], "edge"), hits(["c"], "clip"))
        assert len(p) == 3
        assert all(e.multiplicity == 1 for e in p.entries.values())

    def test_scores_preserved_per_strategy(self):
        p = pool(
            [SearchHit("x", 0.9, "raw")],
            [SearchHit("x", 0.7, "edge")],
            [SearchHit("x", 0.5, "clip")],
        )
        assert p.entries["x"].scores == {"raw": 0.9, "edge": 0.7, "clip": 0.5}

    def test_duplicate_label_within_one_list_rejected(self):
        with pytest.raises(ValueError):
            pool(hits(["a", "a"], "raw"), [], [])

    def test_accepts_bare_label_strings(self):
        p = pool(["b", "c"], ["a", "c"], ["c"])
        assert p.multiplicity("c") == 3


class TestDedupSortTruncate:
    def test_hand_executed_order(self):
        p = pool(hits(["b", "c"], "raw"), hits(["a", "c"], "edge"), hits(["c"], "clip"))
        assert dedup_sort(p) == ["a", "b", "c"]
        assert truncate(dedup_sort(p), 2) == ["a", "b"]

    def test_multiplicity_does_not_affect_order(self):
        # c appears three times but still sorts by label alone
        p = pool(hits(["c"], "raw"), hits(["c", "a"], "edge"), hits(["c"], "clip"))
        assert dedup_sort(p) == ["a", "c"]

    def test_empty_pool(self):
        assert dedup_sort(pool([], [], [])) == []
        assert truncate([], 5) == []

    def test_zero_padded_page_order(self):
        p = pool(hits(["doc:0010:x"], "raw"), hits(["doc:0002:x"], "edge"), [])
        assert dedup_sort(p) == ["doc:0002:x", "doc:0010:x"]

    def test_truncate_m_exceeds_n(self):
        assert truncate(["a", "b", "c"], 10) == ["a", "b", "c"]

    def test_truncate_rejects_bad_m(self):
        with pytest.raises(ValueError):
            truncate(["a"], 0)

    def test_salience_order_extension(self):
        p = pool(
            [SearchHit("zz", 0.9, "raw"), SearchHit("aa", 0.8, "raw")],
            [SearchHit("zz", 0.7, "edge")],
            [],
        )
        assert dedup_sort(p, order="salience") == ["zz", "aa"]
        assert dedup_sort(p) == ["aa", "zz"]

    def test_unknown_order_rejected(self):
        with pytest.raises(ValueError):
            dedup_sort(pool([], [], []), order="rank")


class TestProperties:
    @given(a=label_lists, b=label_lists, c=label_lists)
    @settings(max_examples=200, deadline=None)
    def test_pool_size_bound(self, a, b, c):
        p = pool(hits(a, "raw"), hits(b, "edge"), hits(c, "clip"))
        assert len(p) <= len(a) + len(b) + len(c)
        disjoint = not (set(a) & set(b) or set(a) & set(c) or set(b) & set(c))
        assert (len(p) == len(a) + len(b) + len(c)) == disjoint

    @given(a=label_lists, b=label_lists, c=label_lists)
    @settings(max_examples=200, deadline=None)
    def test_multiplicity_bounds(self, a, b, c):
        p = pool(hits(a, "raw"), hits(b, "edge"), hits(c, "clip"))
        for entry in p.entries.values():
            assert 1 <= entry.multiplicity <= 3

    @given(a=label_lists, b=label_lists, c=label_lists)
    @settings(max_examples=200, deadline=None)
    def test_dedup_sort_idempotent_and_strictly_increasing(self, a, b, c):
        p = pool(hits(a, "raw"), hits(b, "edge"), hits(c, "clip"))
        ordered = dedup_sort(p)
        assert sorted(set(ordered)) == ordered
        assert all(x < y for x, y in zip(ordered, ordered[1:]))
        # re-pooling the ordered list yields the same order
        assert dedup_sort(pool(ordered, [], [])) == ordered

    @given(a=label_lists, b=label_lists, c=label_lists, m=st.integers(1, 12))
    @settings(max_examples=200, deadline=None)
    def test_truncate_is_prefix(self, a, b, c, m):
        ordered = dedup_sort(pool(hits(a, "raw"), hits(b, "edge"), hits(c, "clip")))
        kept = truncate(ordered, m)
        assert kept == ordered[: len(kept)]
        assert len(kept) == min(m, len(ordered))

    @given(a=label_lists, b=label_lists, c=label_lists)
    @settings(max_examples=200, deadline=None)
    def test_adding_a_strategy_never_removes_labels(self, a, b, c):
        without = pool(hits(a, "raw"), hits(b, "edge"), [])
        with_all = pool(hits(a, "raw"), hits(b, "edge"), hits(c, "clip"))
        assert set(without.entries) <= set(with_all.entries)


def test_pool_records_canonical_order():
    p = pool(
        [SearchHit("b", 0.91234567, "raw")],
        [SearchHit("a", 0.5, "edge")],
        [SearchHit("b", 0.25, "clip")],
    )
    records = pool_records(p)
    assert [r["label"] for r in records] == ["a", "b"]
    assert records[1]["strategies"] == ["clip", "raw"]
    assert records[1]["scores"] == {"clip": 0.25, "raw": 0.912346}
