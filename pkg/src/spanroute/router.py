"""Routing strategies over a fixed layout.

The real-time router reuses cover parts built from the pre-real-time queries.
A query is first attributed to a cluster (fast: one random item, one random
cluster holding it); the parts of that cluster then supply machines for the
items they contain, leftover items are checked against the machines picked so
far, and only what remains goes through a greedy call, which itself becomes a
new reusable cover part of the assigned cluster.
"""

from __future__ import annotations

import json
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

from .clustering import (Clustering, ClusteringParams, cluster_stream,
                         clustering_from_dict, clustering_to_dict)
from .gcpa import CoverPart, Variant, process_cluster
from .layout import Cover, DataLayout, Query, validate_cover
from .setcover import UncoverableItemError, greedy_cover, greedy_cover_seq

AssignMode = Literal["fast", "full"]

STATE_FORMAT = "routerstate"
STATE_VERSION = 1

_perf_ns = time.perf_counter_ns


@dataclass(frozen=True)
class RouterParams:
    theta1: float = 0.5
    theta2: float = 0.5
    variant: Variant = "bg"
    assign_mode: AssignMode = "fast"
    small_query_limit: int = 1  # queries this short bypass part reuse entirely
    seed: int = 0


@dataclass
class RoutingResult:
    query_id: int
    cover: Cover
    span: int
    elapsed_ns: int
    strategy: str
    valid: bool


@dataclass
class RouterState:
    """Mutable routing state: single writer, one state per query stream."""

    layout: DataLayout
    params: RouterParams
    clustering: Clustering
    cover_parts: dict[int, CoverPart] = field(default_factory=dict)
    # Per-cluster item -> part id; parts of one cluster are pairwise disjoint,
    # different clusters may legitimately claim the same item.
    cluster_item_to_part: dict[int, dict[int, int]] = field(default_factory=dict)
    next_part_id: int = 0
    rng: random.Random = field(default_factory=random.Random)
    stats: Counter = field(default_factory=Counter)

    @property
    def item_to_machines(self) -> dict[int, tuple[int, ...]]:
        return self.layout.item_index

    @property
    def strategy_tag(self) -> str:
        return f"gcpa-{self.params.variant}"

    def register_part(self, cluster_id: int, items: Sequence[int],
                      machines: Sequence[int], depth: int = 1) -> CoverPart:
        part = CoverPart(self.next_part_id, tuple(sorted(items)),
                         tuple(machines), depth)
        self.next_part_id += 1
        self.cover_parts[part.id] = part
        item_map = self.cluster_item_to_part.setdefault(cluster_id, {})
        for item in part.items:
            item_map[item] = part.id
        return part


def precompute(pre_queries: Sequence[Query], layout: DataLayout, params: RouterParams,
               clustering: Clustering | None = None) -> RouterState:
    """Cluster the pre-real-time queries and cover every cluster once,
    recording each cluster's cover parts for real-time reuse."""
    if clustering is None:
        clustering = cluster_stream(
            pre_queries, ClusteringParams(params.theta1, params.theta2)
        )
    state = RouterState(
        layout=layout,
        params=params,
        clustering=clustering,
        rng=random.Random(params.seed),
    )
    by_id = {q.id: q for q in pre_queries}
    for cid in sorted(clustering.clusters):
        members = [by_id[qid] for qid in clustering.clusters[cid].member_query_ids]
        result = process_cluster(members, layout, params.variant)
        for part in result.cover_parts:
            state.register_part(cid, part.items, part.machines, part.depth)
    return state


def route_ngreedy(query: Query, layout: DataLayout) -> RoutingResult:
    """Repeated-greedy reference: one independent greedy cover per query."""
    start = _perf_ns()
    cover = greedy_cover(query.items, layout)
    elapsed = _perf_ns() - start
    return RoutingResult(query.id, cover, len(cover), elapsed, "ngreedy",
                         validate_cover(cover, query.items, layout))


def route_baseline(query: Query, layout: DataLayout, seed: int) -> RoutingResult:
    """Response-order baseline over the machines intersecting the query.

    The response order is a seeded uniform permutation; the first responder
    is always taken, later ones only when they cover something new.
    """
    start = _perf_ns()
    index = layout.item_index
    candidates: set[int] = set()
    for item in query.items:
        homes = index.get(item, ())
        if not homes:
            raise UncoverableItemError(item)
        candidates.update(homes)
    order = sorted(candidates)
    random.Random(seed).shuffle(order)
    uncovered = set(query.items)
    chosen: list[int] = []
    for m in order:
        if not uncovered:
            break
        newly = layout.machines[m] & uncovered
        if newly or not chosen:
            chosen.append(m)
            uncovered -= newly
    elapsed = _perf_ns() - start
    cover = frozenset(chosen)
    return RoutingResult(query.id, cover, len(cover), elapsed, "baseline",
                         validate_cover(cover, query.items, layout))


def route_better_baseline(query: Query, layout: DataLayout, seed: int) -> RoutingResult:
    """Reconstructed smarter baseline: random uncovered item, then a random
    machine holding it. Caps the span at the query length."""
    start = _perf_ns()
    rng = random.Random(seed)
    index = layout.item_index
    uncovered = set(query.items)
    chosen: set[int] = set()
    while uncovered:
        item = rng.choice(sorted(uncovered))
        homes = index.get(item, ())
        if not homes:
            raise UncoverableItemError(item)
        m = homes[rng.randrange(len(homes))]
        chosen.add(m)
        uncovered -= layout.machines[m]
    elapsed = _perf_ns() - start
    cover = frozenset(chosen)
    return RoutingResult(query.id, cover, len(cover), elapsed, "better-baseline",
                         validate_cover(cover, query.items, layout))


def assign_cluster(query: Query, state: RouterState, mode: AssignMode | None = None) -> int | None:
    """Pick a cluster for the query: `fast` samples one item and one of its
    clusters in constant time, `full` runs the eligibility-gated entropy
    minimization. None when the query shares no item with any cluster (or
    nothing is eligible)."""
    mode = mode or state.params.assign_mode
    clustering = state.clustering
    if mode == "full":
        return clustering.choose_cluster(query)
    item_to_clusters = clustering.item_to_clusters
    items = tuple(query.items)
    cids = item_to_clusters.get(items[state.rng.randrange(len(items))])
    if not cids:
        # The sampled item is unknown to every cluster; fall back to scanning
        # so queries that do share items are still attributed.
        viable = [x for x in sorted(items) if item_to_clusters.get(x)]
        if not viable:
            return None
        cids = item_to_clusters[viable[state.rng.randrange(len(viable))]]
    return cids[state.rng.randrange(len(cids))]


def _patch_cover(uncovered: list[int], index, machine_sets, layout) -> tuple[int, ...]:
    """Greedy cover of the leftover items, with exact shortcuts for the
    one- and two-item cases that dominate in practice."""
    if len(uncovered) == 1:
        return (min(index[uncovered[0]]),)
    if len(uncovered) == 2:
        first, second = uncovered
        shared = set(index[first]) & set(index[second])
        if shared:
            return (min(shared),)
        lead = min(min(index[first]), min(index[second]))
        other = second if first in machine_sets[lead] else first
        return (lead, min(index[other]))
    return greedy_cover_seq(uncovered, layout)


def route_realtime(query: Query, state: RouterState,
                   mode: AssignMode | None = None) -> RoutingResult:
    """Route one real-time query by reusing the assigned cluster's cover parts.

    Timed phases: attribute the query to a cluster, collect the machines of
    that cluster's parts containing query items, check leftover items against
    the machines picked so far, greedy-cover what is still uncovered, and
    register that residue as a new cover part of the cluster. The clustering
    bookkeeping insert happens afterwards, outside the timed region.
    """
    layout = state.layout
    params = state.params
    strategy = state.strategy_tag
    if len(query.items) <= params.small_query_limit:
        start = _perf_ns()
        cover = greedy_cover(query.items, layout)
        elapsed = _perf_ns() - start
        state.stats["small_direct"] += 1
        return RoutingResult(query.id, cover, len(cover), elapsed, strategy,
                             validate_cover(cover, query.items, layout))
    start = _perf_ns()
    cluster_id = assign_cluster(query, state, mode)
    cover_parts = state.cover_parts
    item_to_part = (
        state.cluster_item_to_part.get(cluster_id, {}) if cluster_id is not None else {}
    )
    index = layout.item_index
    machine_sets = layout.machines
    by_part: dict[int, list[int]] = {}
    leftover: list[int] = []
    for item in query.items:
        part_id = item_to_part.get(item)
        if part_id is None:
            leftover.append(item)
        else:
            bucket = by_part.get(part_id)
            if bucket is None:
                by_part[part_id] = [item]
            else:
                bucket.append(item)
    solution: set[int] = set()
    skipped = 0
    # Widest coverage first, deeper parts breaking ties. Each part's stored
    # cover is replayed in pick order for the query items it holds, skipping
    # machines (or whole parts) that no longer cover anything needed.
    if len(by_part) == 1:
        order = list(by_part)
    else:
        ranked = sorted(
            (-len(items), -cover_parts[pid].depth, pid)
            for pid, items in by_part.items()
        )
        order = [entry[2] for entry in ranked]
    for part_id in order:
        if solution:
            needed = set()
            for item in by_part[part_id]:
                for m in index[item]:
                    if m in solution:
                        break
                else:
                    needed.add(item)
            if not needed:
                skipped += 1
                continue
        else:
            needed = set(by_part[part_id])
        for m in cover_parts[part_id].machines:
            held = machine_sets[m]
            covered_here = needed & held
            if covered_here:
                solution.add(m)
                needed -= covered_here
                if not needed:
                    break
    uncovered: list[int] = []
    if leftover:
        for item in leftover:
            homes = index.get(item)
            if not homes:
                raise UncoverableItemError(item)
            for m in homes:
                if m in solution:
                    break
            else:
                uncovered.append(item)
    new_part_items: list[int] = []
    if uncovered:
        extra = _patch_cover(uncovered, index, machine_sets, layout)
        solution.update(extra)
        new_part_items = uncovered
    elapsed = _perf_ns() - start
    cover = frozenset(solution)
    stats = state.stats
    if skipped:
        stats["parts_skipped"] += skipped
    if new_part_items:
        stats["greedy_calls"] += 1
    stats[f"assigned_{mode or params.assign_mode}"] += 1
    # Bookkeeping: the query joins its cluster (a fresh one when unattributed),
    # and the greedy residue becomes a reusable part of that cluster.
    final_cluster = state.clustering.insert(query, cluster_id)
    if new_part_items:
        state.register_part(final_cluster, new_part_items, extra)
    return RoutingResult(query.id, cover, len(cover), elapsed, strategy,
                         validate_cover(cover, query.items, layout))


def save_state(state: RouterState, path) -> None:
    """Versioned snapshot of everything needed to restart and replay a stream."""
    rng_state = state.rng.getstate()
    doc = {
        "format": STATE_FORMAT,
        "version": STATE_VERSION,
        "params": {
            "theta1": state.params.theta1,
            "theta2": state.params.theta2,
            "variant": state.params.variant,
            "assign_mode": state.params.assign_mode,
            "small_query_limit": state.params.small_query_limit,
            "seed": state.params.seed,
        },
        "rng_state": [rng_state[0], list(rng_state[1]), rng_state[2]],
        "next_part_id": state.next_part_id,
        "cover_parts": [
            {"id": p.id, "items": list(p.items), "machines": list(p.machines),
             "depth": p.depth}
            for _, p in sorted(state.cover_parts.items())
        ],
        "cluster_parts": [
            [cid, sorted({pid for pid in item_map.values()})]
            for cid, item_map in sorted(state.cluster_item_to_part.items())
        ],
        "clustering": clustering_to_dict(state.clustering),
        "stats": dict(state.stats),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_state(path, layout: DataLayout) -> RouterState:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != STATE_FORMAT or doc.get("version") != STATE_VERSION:
        raise ValueError(f"{path}: not a version {STATE_VERSION} router state file")
    params = RouterParams(**doc["params"])
    clustering = clustering_from_dict(
        doc["clustering"], ClusteringParams(params.theta1, params.theta2)
    )
    state = RouterState(layout=layout, params=params, clustering=clustering)
    for entry in doc["cover_parts"]:
        part = CoverPart(entry["id"], tuple(entry["items"]),
                         tuple(entry["machines"]), entry["depth"])
        state.cover_parts[part.id] = part
    for cid, part_ids in doc["cluster_parts"]:
        item_map = state.cluster_item_to_part.setdefault(cid, {})
        for pid in part_ids:
            for item in state.cover_parts[pid].items:
                item_map[item] = pid
    state.next_part_id = doc["next_part_id"]
    encoded = doc["rng_state"]
    state.rng.setstate((encoded[0], tuple(encoded[1]), encoded[2]))
    state.stats = Counter(doc["stats"])
    return state
