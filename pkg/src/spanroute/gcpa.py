"""Cluster-level cover processing (the gcpa strategies).

Items sharing an identical query-membership signature form a data part; parts
are covered from deepest to shallowest, crediting anything earlier machine
choices already covered. Each processed part yields a reusable cover part: the
residual items plus any still-unassigned cluster items its machines happen to
hold, stored together with those machines.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Literal, Sequence

from .layout import Cover, DataLayout, Query
from .setcover import WorkCounter, biased_greedy_cover_seq, greedy_cover_seq

Variant = Literal["g", "bg"]


@dataclass(frozen=True)
class DataPart:
    """Items contained in exactly the same member queries."""

    signature: tuple[int, ...]
    items: tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.signature)


@dataclass(frozen=True)
class CoverPart:
    """A disjoint block of items stored with the machines covering it.

    `machines` keeps the greedy pick order, so a stored cover can be replayed
    for any subset of the block's items. `depth` carries over from the data
    part whose residual produced the block; parts made while routing single
    real-time queries have depth 1.
    """

    id: int
    items: tuple[int, ...]
    machines: tuple[int, ...]
    depth: int = 1


@dataclass
class ClusterCoverResult:
    covers: dict[int, Cover]  # query id -> machine ids
    cover_parts: list[CoverPart]
    items_processed: int = 0
    cover_calls: int = 0


def compute_depths(cluster_queries: Sequence[Query]) -> dict[int, int]:
    """Depth of an item is the number of member queries containing it."""
    depths: Counter[int] = Counter()
    for q in cluster_queries:
        depths.update(q.items)
    return dict(depths)


def partition_parts(cluster_queries: Sequence[Query]) -> list[DataPart]:
    """Group items by their exact query-membership signature.

    The returned parts partition the cluster's item union and are ordered by
    descending depth, then lexicographic signature, which fixes part ids.
    """
    signatures: dict[int, list[int]] = {}
    for q in sorted(cluster_queries, key=lambda q: q.id):
        for item in q.items:
            signatures.setdefault(item, []).append(q.id)
    groups: dict[tuple[int, ...], list[int]] = {}
    for item, sig in signatures.items():
        groups.setdefault(tuple(sig), []).append(item)
    parts = [DataPart(sig, tuple(sorted(items))) for sig, items in groups.items()]
    parts.sort(key=lambda part: (-part.depth, part.signature))
    return parts


def process_cluster(cluster_queries: Sequence[Query], layout: DataLayout,
                    variant: Variant = "bg",
                    counter: WorkCounter | None = None) -> ClusterCoverResult:
    """Cover a whole cluster, processing every item at most once.

    Variant "g" covers each part's residual with the plain greedy kernel;
    variant "bg" biases ties toward the union of the queries containing the
    part. A query's cover is the union of machines of the cover parts its
    items landed in.
    """
    parts = partition_parts(cluster_queries)
    items_by_qid = {q.id: q.items for q in cluster_queries}
    unassigned = {item for part in parts for item in part.items}
    assigned: dict[int, int] = {}
    cover_parts: list[CoverPart] = []
    items_processed = 0
    cover_calls = 0
    for part in parts:
        residual = [item for item in part.items if item in unassigned]
        if not residual:
            continue
        if variant == "bg":
            union: set[int] = set()
            for qid in part.signature:
                union |= items_by_qid[qid]
            machines = biased_greedy_cover_seq(residual, union, layout, counter=counter)
        elif variant == "g":
            machines = greedy_cover_seq(residual, layout, counter=counter)
        else:
            raise ValueError(f"unknown variant {variant!r}")
        cover_calls += 1
        items_processed += len(residual)
        block: set[int] = set()
        for m in machines:
            got = unassigned & layout.machines[m]
            block |= got
            unassigned -= got
        part_id = len(cover_parts)
        for item in block:
            assigned[item] = part_id
        cover_parts.append(
            CoverPart(part_id, tuple(sorted(block)), machines, part.depth)
        )
    covers: dict[int, Cover] = {}
    for q in cluster_queries:
        machines_for_query: set[int] = set()
        for item in q.items:
            machines_for_query.update(cover_parts[assigned[item]].machines)
        covers[q.id] = frozenset(machines_for_query)
    return ClusterCoverResult(covers, cover_parts, items_processed, cover_calls)
