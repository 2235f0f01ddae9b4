import math
import random
from collections import deque

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spanroute.layout import Query
from spanroute.workload import (QueryLogError, RandomGraph, Workload,
                                WorkloadConfig, build_workload, component_map,
                                component_sizes, gen_er_graph,
                                generate_queries, load_query_log,
                                mean_pairwise_intersection, save_query_log,
                                uniform_workload_like)


def bfs_component_sizes(graph):
    """Independent oracle for component structure."""
    seen = set()
    sizes = []
    for start in range(graph.n):
        if start in seen:
            continue
        size = 0
        queue = deque([start])
        seen.add(start)
        while queue:
            v = queue.popleft()
            size += 1
            for w in graph.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        sizes.append(size)
    return sizes


def test_er_graph_edge_probability_extremes():
    assert gen_er_graph(50, 0.0, seed=1).edge_count() == 0
    assert gen_er_graph(3, 1.0, seed=1).edge_count() == 3


def test_er_graph_is_undirected_without_self_loops():
    graph = gen_er_graph(300, 0.02, seed=4)
    for v, neighbors in graph.adjacency.items():
        assert v not in neighbors
        assert len(set(neighbors)) == len(neighbors)
        for w in neighbors:
            assert v in graph.neighbors(w)


def test_er_graph_deterministic_per_seed():
    assert gen_er_graph(500, 0.003, seed=9).adjacency == gen_er_graph(500, 0.003, seed=9).adjacency
    assert gen_er_graph(500, 0.003, seed=9).adjacency != gen_er_graph(500, 0.003, seed=10).adjacency


def test_component_map_matches_bfs_oracle():
    for seed in range(4):
        graph = gen_er_graph(2000, 0.9 / 2000, seed=seed)
        ids, sizes = component_map(graph)
        assert sorted(sizes) == sorted(bfs_component_sizes(graph))
        for v, neighbors in graph.adjacency.items():
            assert all(ids[v] == ids[w] for w in neighbors)


def test_subcritical_components_stay_small():
    # Deep in the subcritical regime the largest component is logarithmic in n.
    # Near np = 1 (inside the critical window, where the published experiments
    # sit) components scale like n^(2/3) instead, so that is the honest bound.
    for seed in range(3):
        deep = gen_er_graph(100_000, 0.5 / 100_000, seed=seed)
        assert max(component_sizes(deep)) <= 150
        near = gen_er_graph(100_000, 0.993 / 100_000, seed=seed)
        assert max(component_sizes(near)) <= 2 * 100_000 ** (2 / 3)


def test_generated_lengths_stay_in_bounds():
    config = WorkloadConfig.from_np(10_000, 0.99, 300, min_len=6, max_len=15, seed=0)
    workload = build_workload(config)
    assert len(workload.queries) == 300
    assert all(6 <= len(q) <= 15 for q in workload.queries)


def test_query_covering_a_whole_component_is_forced():
    # a single 10-cycle: every length-10 query must equal the component
    adjacency = {v: ((v - 1) % 10, (v + 1) % 10) for v in range(10)}
    graph = RandomGraph(10, {v: tuple(sorted(ns)) for v, ns in adjacency.items()})
    config = WorkloadConfig(n=10, p=0.0, query_count=5, min_len=10, max_len=10, seed=3)
    workload = generate_queries(graph, config)
    assert all(q.items == frozenset(range(10)) for q in workload.queries)


def test_queries_induce_connected_subgraphs():
    config = WorkloadConfig.from_np(4_000, 0.99, 150, min_len=6, max_len=15, seed=2)
    graph = gen_er_graph(4_000, 0.99 / 4_000, seed=3)
    workload = generate_queries(graph, config)
    for q in workload.queries:
        items = set(q.items)
        start = next(iter(items))
        seen = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in graph.neighbors(v):
                if w in items and w not in seen:
                    seen.add(w)
                    queue.append(w)
        assert seen == items


def test_clamping_when_components_are_too_small():
    # two disjoint edges: no component can host a length-4 query
    graph = RandomGraph(4, {0: (1,), 1: (0,), 2: (3,), 3: (2,)})
    config = WorkloadConfig(n=4, p=0.0, query_count=3, min_len=4, max_len=4,
                            seed=0, max_retries=20)
    workload = generate_queries(graph, config)
    assert all(len(q) == 2 for q in workload.queries)


def test_literal_frontier_mode_limits_reach():
    # path graph: without frontier extension a query cannot outgrow the star
    # of its start vertex, so lengths clamp at degree + 1
    adjacency = {v: tuple(w for w in (v - 1, v + 1) if 0 <= w < 6) for v in range(6)}
    graph = RandomGraph(6, adjacency)
    base = dict(n=6, p=0.0, query_count=8, min_len=6, max_len=6, seed=1, max_retries=50)
    literal = generate_queries(graph, WorkloadConfig(extend_frontier=False, **base))
    extended = generate_queries(graph, WorkloadConfig(extend_frontier=True, **base))
    assert all(len(q) <= 3 for q in literal.queries)
    assert all(len(q) == 6 for q in extended.queries)


def test_workload_determinism():
    config = WorkloadConfig.from_np(3_000, 0.95, 120, seed=11)
    a = build_workload(config)
    b = build_workload(config)
    assert [q.items for q in a.queries] == [q.items for q in b.queries]


def test_split_uses_floor():
    workload = Workload([Query(i, frozenset({i})) for i in range(5)])
    pre, rt = workload.split(0.5)
    assert len(pre) == 2 and len(rt) == 3


def test_mean_pairwise_intersection_matches_direct_count():
    rng = random.Random(5)
    queries = [Query(i, frozenset(rng.sample(range(40), rng.randint(2, 8))))
               for i in range(30)]
    direct = sum(len(a.items & b.items)
                 for i, a in enumerate(queries) for b in queries[i + 1:])
    direct /= math.comb(30, 2)
    assert mean_pairwise_intersection(queries) == pytest.approx(direct)


def test_generated_workload_more_correlated_than_uniform():
    config = WorkloadConfig.from_np(4_000, 0.99, 400, seed=1)
    workload = build_workload(config)
    uniform = uniform_workload_like(workload, 4_000, seed=77)
    assert (mean_pairwise_intersection(workload.queries)
            > mean_pairwise_intersection(uniform.queries))
    assert [len(q) for q in workload.queries] == [len(q) for q in uniform.queries]


def test_query_log_parsing(tmp_path):
    path = tmp_path / "q.txt"
    path.write_text("# header\n1 2 3\n\n2 3\n")
    workload = load_query_log(path)
    assert [len(q) for q in workload.queries] == [3, 2]
    assert [q.id for q in workload.queries] == [0, 1]


def test_query_log_empty_file(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("")
    assert load_query_log(path).queries == []


def test_query_log_round_trip(tmp_path):
    config = WorkloadConfig.from_np(2_000, 0.9, 60, seed=8)
    workload = build_workload(config)
    path = tmp_path / "wl.txt"
    save_query_log(workload, path)
    loaded = load_query_log(path, universe_size=2_000)
    assert [q.items for q in loaded.queries] == [q.items for q in workload.queries]


def test_query_log_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 2\nx y\n")
    with pytest.raises(QueryLogError, match=":2"):
        load_query_log(path)
    oob = tmp_path / "oob.txt"
    oob.write_text("1 2\n5 6\n")
    with pytest.raises(QueryLogError, match="outside"):
        load_query_log(oob, universe_size=4)


@given(st.integers(0, 2 ** 31), st.floats(0.3, 0.999))
def test_generation_is_length_bounded(seed, np_product):
    config = WorkloadConfig.from_np(400, np_product, 10, min_len=2, max_len=5, seed=seed)
    workload = build_workload(config)
    assert len(workload.queries) == 10
    assert all(1 <= len(q) <= 5 for q in workload.queries)
