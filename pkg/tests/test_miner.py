from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taxolex import oracles
from taxolex.mapping import TerminalSequence
from taxolex.miner import (
    MinedPattern,
    common_subsequences,
    count_bucket,
    cross_dataset_intersection,
    fold,
    maximal_common,
)


def seqs(*sessions, taxonomy="gotzzhou2009"):
    return [TerminalSequence.from_labels(f"s{i}", list(s), taxonomy) for i, s in enumerate(sessions)]


def items(found):
    return {p.items for p in found}


def test_brush_delete_family_under_plus():
    core = ["brush", "brush", "delete", "brush", "brush"]
    found = common_subsequences(seqs(["filter"] + core + ["select"], ["navigate"] + core, core + ["annotate"]), "plus")
    assert items(found) == {("brush+", "delete", "brush+")}
    assert fold(["brush+", "delete", "brush+", "delete", "brush+"]) == ["(brush+, delete)+", "brush+"]


def test_no_shared_bigram():
    assert common_subsequences(seqs(["filter", "select"], ["select", "filter"]), "plus") == []


def test_numeric_minimal_pair():
    found = common_subsequences(seqs(["filter", "delete", "brush", "select"], ["delete", "brush", "annotate"]), "numeric")
    assert items(found) == {("delete", "brush")}
    assert found[0].render() == "(delete, brush)"


def test_numeric_counts_are_part_of_identity():
    a = ["filter", "filter", "select"]
    b = ["filter", "filter", "filter", "select"]
    assert common_subsequences(seqs(a, b), "numeric") == []
    assert items(common_subsequences(seqs(a, b), "plus")) == {("filter+", "select")}
    bucketed = common_subsequences(seqs(a, b), "numeric", bucket_counts=True)
    assert items(bucketed) == {("filter[2-3]", "select")}


def test_min_support_and_ordering():
    found = common_subsequences(seqs(["a", "b", "c"], ["a", "b"], ["x", "y"], taxonomy=None), "plus", min_support=0.5)
    assert [(p.items, p.support) for p in found] == [(("a", "b"), 2)]


def test_nulls_never_join_patterns():
    assert common_subsequences(seqs(["a", "null", "b"], ["a", "null", "b"], taxonomy=None), "plus") == []


def test_argument_checks():
    one = seqs(["a", "b"], taxonomy=None)
    with pytest.raises(ValueError):
        common_subsequences(one, "plus")
    with pytest.raises(ValueError):
        common_subsequences(one * 2, "plus", min_support=0)
    with pytest.raises(ValueError):
        common_subsequences(one * 2, "zip")


def pattern(*names, tax="bm"):
    return MinedPattern(tuple(names), 2, "plus", tax)


def test_intersections():
    a, b, c = [pattern("a", "b")], [pattern("c", "d")], [pattern("e", "f")]
    assert cross_dataset_intersection([a, b, c]) == set()
    assert cross_dataset_intersection([a, [pattern("a", "b")]]) == {("a", "b")}
    shared = [pattern("a", "b"), pattern("x", "y")]
    assert cross_dataset_intersection([shared, [pattern("x", "y"), pattern("q", "r")]]) == {("x", "y")}


def test_intersection_rejects_mixed_taxonomies():
    with pytest.raises(ValueError):
        cross_dataset_intersection([[pattern("a", "b", tax="bm")], [pattern("a", "b", tax="yi")]])


def test_fold_numeric_and_bucket():
    long = ["navigate", "change2"] * 19 + ["navigate", "change"]
    assert fold(long, "numeric") == ["(navigate, change2)19", "navigate", "change"]
    assert count_bucket(1) == (1, 1) and count_bucket(5) == (4, 7)


tokens = st.sampled_from(["a", "b", "c", "null"])


@given(st.lists(st.lists(tokens, max_size=25), min_size=2, max_size=5), st.sampled_from([1.0, 0.6, 0.4]))
@settings(max_examples=300, deadline=None)
def test_maximal_common_matches_oracle(sessions, support):
    assert set(maximal_common(sessions, 2, support)) == oracles.oracle_mine(sessions, 2, support)


@given(st.lists(st.lists(tokens, max_size=20), min_size=2, max_size=4), st.sampled_from(["plus", "numeric"]))
@settings(max_examples=200, deadline=None)
def test_encoded_mining_matches_oracle(sessions, approach):
    found = common_subsequences(seqs(*sessions, taxonomy=None), approach)
    want = oracles.oracle_mine([oracles.oracle_encode(s, approach) for s in sessions])
    assert items(found) == want
    for p in found:
        assert p.support == len(sessions)
