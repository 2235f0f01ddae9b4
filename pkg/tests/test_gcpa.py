import random

import pytest

from spanroute.gcpa import (compute_depths, partition_parts, process_cluster)
from spanroute.layout import Query, validate_cover
from spanroute.setcover import WorkCounter, greedy_cover
from util import correlated_cluster, layout_from, random_layout

STAIRCASE = [
    Query(1, frozenset(range(0, 6))),
    Query(2, frozenset(range(3, 9))),
    Query(3, frozenset(range(6, 12))),
    Query(4, frozenset(range(9, 15))),
]


def test_depths_count_containing_queries():
    queries = [Query(i, frozenset({7, i})) for i in range(1, 4)]
    depths = compute_depths(queries)
    assert depths[7] == 3
    assert depths[1] == depths[2] == 1


def test_depths_for_disjoint_queries_are_one():
    queries = [Query(i, frozenset({2 * i, 2 * i + 1})) for i in range(4)]
    assert set(compute_depths(queries).values()) == {1}


def test_depths_match_naive_scan():
    rng = random.Random(4)
    for trial in range(20):
        cluster = correlated_cluster(rng, 100, trial * 10)
        depths = compute_depths(cluster)
        for item in {i for q in cluster for i in q.items}:
            assert depths[item] == sum(1 for q in cluster if item in q.items)


def test_identical_queries_collapse_to_one_part():
    queries = [Query(0, frozenset({1, 2, 3})), Query(1, frozenset({1, 2, 3}))]
    parts = partition_parts(queries)
    assert len(parts) == 1
    assert parts[0].depth == 2
    assert parts[0].items == (1, 2, 3)


def test_nested_queries_split_into_two_parts():
    queries = [Query(0, frozenset({1, 2})), Query(1, frozenset({1, 2, 3, 4}))]
    parts = partition_parts(queries)
    assert [(p.depth, p.items) for p in parts] == [(2, (1, 2)), (1, (3, 4))]


def test_same_depth_different_signatures_are_distinct_parts():
    queries = [Query(0, frozenset({0, 1, 2})), Query(1, frozenset({1, 2, 3})),
               Query(2, frozenset({4, 5})), Query(3, frozenset({5, 6}))]
    parts = partition_parts(queries)
    deep = [p for p in parts if p.depth == 2]
    assert len(deep) == 2
    assert {p.items for p in deep} == {(1, 2), (5,)}
    assert {p.signature for p in deep} == {(0, 1), (2, 3)}


def test_parts_partition_the_union():
    rng = random.Random(8)
    for trial in range(25):
        cluster = correlated_cluster(rng, 120, trial * 10)
        parts = partition_parts(cluster)
        union = {i for q in cluster for i in q.items}
        seen = [i for p in parts for i in p.items]
        assert len(seen) == len(set(seen)) == len(union)
        # membership signature really is shared within each part
        for p in parts:
            for item in p.items:
                holders = tuple(sorted(q.id for q in cluster if item in q.items))
                assert holders == p.signature
        # every query is the union of the parts whose signature contains it
        for q in cluster:
            rebuilt = {i for p in parts if q.id in p.signature for i in p.items}
            assert rebuilt == set(q.items)


def test_single_query_cluster_reduces_to_greedy():
    rng = random.Random(12)
    layout = random_layout(rng, 80, 10, replication=2)
    query = Query(3, frozenset(rng.sample(range(80), 9)))
    result = process_cluster([query], layout, "g")
    assert result.covers[3] == greedy_cover(query.items, layout)
    assert len(result.cover_parts) == 1
    assert result.cover_calls == 1
    assert result.items_processed == len(query.items)


def test_staircase_cluster_needs_more_cover_calls_than_queries():
    # five membership-signature parts across four queries; one machine per part
    layout = layout_from([set(range(i, i + 3)) for i in range(0, 15, 3)], 15)
    result = process_cluster(STAIRCASE, layout, "g")
    assert result.cover_calls == 5 > len(STAIRCASE)
    assert result.items_processed == 15
    for q in STAIRCASE:
        assert validate_cover(result.covers[q.id], q.items, layout)


def test_spill_credit_drops_fully_covered_parts():
    # one machine holds both queries entirely, so the shallow residue of the
    # second query is covered for free and produces no extra part
    layout = layout_from([{0, 1, 2, 3, 4}, {0, 1}, {4}], 5)
    queries = [Query(0, frozenset({0, 1, 2, 3})), Query(1, frozenset({2, 3, 4}))]
    result = process_cluster(queries, layout, "g")
    assert len(result.cover_parts) == 1
    assert result.cover_parts[0].machines == (0,)
    assert result.items_processed == 2  # only the deepest residual was processed
    assert result.covers[0] == result.covers[1] == frozenset({0})


def test_cover_parts_partition_and_covers_validate():
    rng = random.Random(19)
    for trial in range(40):
        layout = random_layout(rng, 150, 12, replication=3)
        cluster = correlated_cluster(rng, 150, trial * 10)
        for variant in ("g", "bg"):
            result = process_cluster(cluster, layout, variant)
            union = {i for q in cluster for i in q.items}
            items = [i for p in result.cover_parts for i in p.items]
            assert len(items) == len(set(items)) == len(union)
            assert result.items_processed <= len(union)
            for part in result.cover_parts:
                assert validate_cover(part.machines, part.items, layout)
            for q in cluster:
                assert validate_cover(result.covers[q.id], q.items, layout)


def test_bg_variant_not_worse_on_average():
    spans = {"g": 0, "bg": 0}
    count = 0
    for seed in range(3):
        rng = random.Random(seed + 50)
        layout = random_layout(rng, 300, 20, replication=3)
        for trial in range(15):
            cluster = correlated_cluster(rng, 300, trial * 10)
            for variant in spans:
                result = process_cluster(cluster, layout, variant)
                spans[variant] += sum(len(result.covers[q.id]) for q in cluster)
            count += len(cluster)
    assert spans["bg"] <= spans["g"]


def test_unknown_variant_rejected():
    layout = layout_from([{0}])
    with pytest.raises(ValueError):
        process_cluster([Query(0, frozenset({0}))], layout, "xx")


def test_work_counter_threads_through():
    rng = random.Random(33)
    layout = random_layout(rng, 60, 8, replication=2)
    cluster = correlated_cluster(rng, 60, 0)
    counter = WorkCounter()
    result = process_cluster(cluster, layout, "bg", counter=counter)
    assert len(counter.picks) == sum(len(p.machines) for p in result.cover_parts)
