"""Correlated synthetic workloads from sparse random graphs, plus query log IO.

Queries are grown as connected vertex sets of a sub-critical random graph, so
queries drawn from the same component share items far more often than uniform
random queries of the same lengths.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .layout import Query

QUERIES_MAGIC = "#queries v1"


class QueryLogError(ValueError):
    """A query log file failed to parse or validate."""


@dataclass(frozen=True)
class WorkloadConfig:
    n: int
    p: float
    query_count: int
    min_len: int = 6
    max_len: int = 15
    seed: int = 0
    # False keeps the sampling pool fixed to the start vertex's neighbors
    # instead of extending it with each chosen vertex's neighbors.
    extend_frontier: bool = True
    max_retries: int = 1000

    @classmethod
    def from_np(cls, n: int, np_product: float, query_count: int, **kw) -> "WorkloadConfig":
        return cls(n=n, p=np_product / n, query_count=query_count, **kw)

    def validate(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("edge probability p must be in [0, 1]")
        if not 1 <= self.min_len <= self.max_len <= self.n:
            raise ValueError("need 1 <= min_len <= max_len <= n")
        if self.query_count < 0:
            raise ValueError("query_count must be >= 0")


@dataclass(frozen=True)
class RandomGraph:
    """Undirected graph stored as sorted neighbor lists; absent vertices are isolated."""

    n: int
    adjacency: dict[int, tuple[int, ...]]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency.get(v, ())

    def degree(self, v: int) -> int:
        return len(self.adjacency.get(v, ()))

    def edge_count(self) -> int:
        return sum(len(ns) for ns in self.adjacency.values()) // 2


@dataclass
class Workload:
    queries: list[Query]
    pretrain_fraction: float = 0.0

    def split(self, fraction: float | None = None) -> tuple[list[Query], list[Query]]:
        """Split at floor(fraction * count) preserving arrival order."""
        frac = self.pretrain_fraction if fraction is None else fraction
        cut = int(math.floor(frac * len(self.queries)))
        return self.queries[:cut], self.queries[cut:]


def gen_er_graph(n: int, p: float, seed: int = 0) -> RandomGraph:
    """Sample G(n, p): each of the C(n,2) edges present independently with probability p.

    Uses geometric skipping over the linearized pair order, so sparse graphs on
    1e5 vertices are cheap.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    rng = random.Random(seed)
    adj: dict[int, list[int]] = {}

    def add(u: int, v: int) -> None:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)

    if p >= 1.0:
        for v in range(1, n):
            for w in range(v):
                add(v, w)
    elif p > 0.0:
        log_q = math.log(1.0 - p)
        v, w = 1, -1
        while v < n:
            w += 1 + int(math.log(1.0 - rng.random()) / log_q)
            while w >= v and v < n:
                w -= v
                v += 1
            if v < n:
                add(v, w)
    return RandomGraph(n, {u: tuple(sorted(ns)) for u, ns in sorted(adj.items())})


def component_map(graph: RandomGraph) -> tuple[list[int], list[int]]:
    """Union-find over the edges; returns (component id per vertex, size per component)."""
    parent = list(range(graph.n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, ns in graph.adjacency.items():
        for v in ns:
            if v < u:
                continue
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[rv] = ru
    ids = [0] * graph.n
    sizes: list[int] = []
    seen: dict[int, int] = {}
    for v in range(graph.n):
        root = find(v)
        cid = seen.get(root)
        if cid is None:
            cid = len(sizes)
            seen[root] = cid
            sizes.append(0)
        ids[v] = cid
        sizes[cid] += 1
    return ids, sizes


def component_sizes(graph: RandomGraph) -> list[int]:
    return component_map(graph)[1]


def _grow(graph: RandomGraph, rng: random.Random, start: int, length: int,
          extend: bool) -> set[int]:
    # Collision draws resample from the pool, matching the stream semantics of
    # growing a query one random frontier vertex at a time.
    chosen = {start}
    pool = list(graph.neighbors(start))
    pooled = set(pool)
    available = len(pool)
    while len(chosen) < length and available:
        x = pool[rng.randrange(len(pool))]
        if x in chosen:
            continue
        chosen.add(x)
        available -= 1
        if extend:
            for nb in graph.neighbors(x):
                if nb not in pooled:
                    pooled.add(nb)
                    pool.append(nb)
                    if nb not in chosen:
                        available += 1
    return chosen


def generate_queries(graph: RandomGraph, config: WorkloadConfig) -> Workload:
    """Grow `query_count` queries, each a connected vertex set of the graph.

    Per query the target length is uniform in [min_len, max_len]. Starts whose
    reachable set is too small are redrawn; after `max_retries` redraws the
    length is clamped to what the last start can provide, which avoids the
    livelock when every component is smaller than the target.
    """
    config.validate()
    if graph.n < config.max_len:
        raise ValueError("graph has fewer vertices than max_len")
    rng = random.Random(config.seed)
    comp_ids, comp_sizes = component_map(graph)

    def reach(v: int) -> int:
        if config.extend_frontier:
            return comp_sizes[comp_ids[v]]
        return graph.degree(v) + 1

    queries: list[Query] = []
    for qid in range(config.query_count):
        length = rng.randint(config.min_len, config.max_len)
        start = rng.randrange(graph.n)
        tries = 0
        while reach(start) < length:
            if tries >= config.max_retries:
                length = reach(start)
                break
            start = rng.randrange(graph.n)
            tries += 1
        items = _grow(graph, rng, start, length, config.extend_frontier)
        queries.append(Query(qid, frozenset(items)))
    return Workload(queries)


def build_workload(config: WorkloadConfig) -> Workload:
    """Generate the graph (seed+1) and then the queries (seed) for one config."""
    graph = gen_er_graph(config.n, config.p, config.seed + 1)
    return generate_queries(graph, config)


def save_query_log(workload: Workload, path, header: str | None = None) -> None:
    """One query per line, space-separated ascending item ids; `#` lines are comments."""
    lines = [header if header is not None else QUERIES_MAGIC]
    for q in workload.queries:
        lines.append(" ".join(str(i) for i in sorted(q.items)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_query_log(path, universe_size: int | None = None) -> Workload:
    """Read queries in file order, assigning ids sequentially from 0."""
    queries: list[Query] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                items = frozenset(int(tok) for tok in line.split())
            except ValueError as exc:
                raise QueryLogError(f"{path}:{lineno}: malformed query line: {line!r}") from exc
            if universe_size is not None:
                bad = sorted(i for i in items if i < 0 or i >= universe_size)
                if bad:
                    raise QueryLogError(
                        f"{path}:{lineno}: item {bad[0]} outside universe of {universe_size}"
                    )
            queries.append(Query(len(queries), items))
    return Workload(queries)


def uniform_workload_like(workload: Workload, universe_size: int, seed: int = 0) -> Workload:
    """Uniform-random workload with the same per-query lengths, for correlation baselines."""
    rng = random.Random(seed)
    queries = [
        Query(q.id, frozenset(rng.sample(range(universe_size), len(q.items))))
        for q in workload.queries
    ]
    return Workload(queries, workload.pretrain_fraction)


def mean_pairwise_intersection(queries: Sequence[Query]) -> float:
    """Average |Qi ∩ Qj| over unordered pairs.

    Computed through per-item membership counts: the sum over pairs of the
    intersection sizes equals the sum over items of C(count, 2).
    """
    if len(queries) < 2:
        return 0.0
    counts: Counter[int] = Counter()
    for q in queries:
        counts.update(q.items)
    shared = sum(c * (c - 1) // 2 for c in counts.values())
    pairs = len(queries) * (len(queries) - 1) // 2
    return shared / pairs
