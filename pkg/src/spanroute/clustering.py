"""Incremental entropy-based query clustering and its analysis primitives.

Each cluster tracks per-item occurrence counts, so an item's presence
probability is count/size and the cluster entropy is the sum of binary
entropies over its item support (absent items contribute exactly zero).
A query joins the eligible cluster that minimizes the post-insertion expected
entropy, or founds a new cluster when nothing is eligible.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .layout import Query


def binary_entropy(p: float) -> float:
    """Entropy in bits of one presence probability; 0*log2(0) is taken as 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


@dataclass(frozen=True)
class ClusteringParams:
    theta1: float = 0.5
    theta2: float = 0.5
    # Validation mode: rank every cluster instead of only item-indexed candidates.
    full_scan: bool = False
    # Optional ceiling on the expected-entropy increase; disabled by default.
    max_delta: float | None = None

    def validate(self) -> None:
        if not 0.0 <= self.theta1 <= 1.0 or not 0.0 <= self.theta2 <= 1.0:
            raise ValueError("theta1 and theta2 must be in [0, 1]")


@dataclass
class Cluster:
    id: int
    member_query_ids: list[int] = field(default_factory=list)
    item_counts: dict[int, int] = field(default_factory=dict)
    entropy: float = 0.0  # cached S, refreshed on every insertion

    @property
    def size(self) -> int:
        return len(self.member_query_ids)


def item_probability(cluster: Cluster, item: int) -> float:
    """Fraction of member queries containing the item; 0 for absent items."""
    if cluster.size == 0:
        raise ValueError("item probability is undefined for an empty cluster")
    return cluster.item_counts.get(item, 0) / cluster.size


def cluster_entropy(cluster: Cluster) -> float:
    """Cluster entropy in bits, summed over the item support."""
    n = cluster.size
    if n == 0:
        return 0.0
    return sum(binary_entropy(c / n) for c in cluster.item_counts.values())


def average_probability(cluster: Cluster) -> float:
    """Membership-weighted mean item probability of the cluster."""
    if cluster.size == 0:
        raise ValueError("average probability is undefined for an empty cluster")
    num = sum(c * c for c in cluster.item_counts.values())
    den = cluster.size * sum(cluster.item_counts.values())
    return num / den


def eligible(query: Query, cluster: Cluster, params: ClusteringParams) -> bool:
    """Gate on the fraction of query items that are common in the cluster.

    At least theta2 * |query| items must have probability >= theta1.
    """
    n = cluster.size
    if n == 0:
        return False
    counts = cluster.item_counts
    hits = sum(1 for x in query.items if counts.get(x, 0) / n >= params.theta1)
    return hits >= params.theta2 * len(query.items)


@dataclass
class Clustering:
    params: ClusteringParams = field(default_factory=ClusteringParams)
    clusters: dict[int, Cluster] = field(default_factory=dict)
    # Item -> ids of clusters whose support holds it, kept sorted and unique.
    item_to_clusters: dict[int, list[int]] = field(default_factory=dict)
    total_clustered: int = 0  # number of clustered queries
    weighted_entropy: float = 0.0  # sum of size * entropy over clusters
    progress: list[int] = field(default_factory=list)  # cluster count after each insertion
    next_cluster_id: int = 0

    def expected_entropy(self) -> float:
        if self.total_clustered == 0:
            return 0.0
        return self.weighted_entropy / self.total_clustered

    def _post_expected_entropy(self, query: Query, cluster: Cluster) -> float:
        n = cluster.size
        n1 = n + 1
        counts = cluster.item_counts
        items = query.items
        s_after = 0.0
        for item, c in counts.items():
            s_after += binary_entropy((c + 1 if item in items else c) / n1)
        for item in items:
            if item not in counts:
                s_after += binary_entropy(1.0 / n1)
        weighted_after = self.weighted_entropy - n * cluster.entropy + n1 * s_after
        return weighted_after / (self.total_clustered + 1)

    def choose_cluster(self, query: Query) -> int | None:
        """Best eligible cluster by post-insertion expected entropy, or None.

        Candidates are the clusters sharing at least one item with the query;
        a count prefilter skips candidates that cannot reach the theta2 quota.
        Ties break to the lowest cluster id.
        """
        params = self.params
        needed = params.theta2 * len(query.items)
        if params.full_scan:
            candidates = sorted(self.clusters)
        else:
            shared: dict[int, int] = {}
            for item in query.items:
                for cid in self.item_to_clusters.get(item, ()):
                    shared[cid] = shared.get(cid, 0) + 1
            candidates = sorted(cid for cid, k in shared.items() if k >= needed)
        best: int | None = None
        best_post = math.inf
        for cid in candidates:
            cluster = self.clusters[cid]
            if not eligible(query, cluster, params):
                continue
            post = self._post_expected_entropy(query, cluster)
            if post < best_post:
                best, best_post = cid, post
        if best is not None and params.max_delta is not None:
            if best_post - self.expected_entropy() > params.max_delta:
                return None
        return best

    def insert(self, query: Query, cluster_id: int | None = None) -> int:
        """Add the query to a cluster (a fresh one when cluster_id is None)."""
        if cluster_id is None:
            cluster = Cluster(self.next_cluster_id)
            self.clusters[cluster.id] = cluster
            self.next_cluster_id += 1
        else:
            cluster = self.clusters[cluster_id]
        old_n, old_s = cluster.size, cluster.entropy
        cluster.member_query_ids.append(query.id)
        counts = cluster.item_counts
        cid = cluster.id
        for item in query.items:
            counts[item] = counts.get(item, 0) + 1
            ids = self.item_to_clusters.setdefault(item, [])
            if not ids or ids[-1] < cid:
                ids.append(cid)
            else:
                pos = bisect_left(ids, cid)
                if pos == len(ids) or ids[pos] != cid:
                    ids.insert(pos, cid)
        cluster.entropy = cluster_entropy(cluster)
        self.weighted_entropy += cluster.size * cluster.entropy - old_n * old_s
        self.total_clustered += 1
        self.progress.append(len(self.clusters))
        return cluster.id

    def add(self, query: Query) -> int:
        return self.insert(query, self.choose_cluster(query))


def cluster_stream(queries: Iterable[Query], params: ClusteringParams | None = None) -> Clustering:
    """Cluster queries in arrival order with incremental count updates."""
    params = params or ClusteringParams()
    params.validate()
    clustering = Clustering(params)
    for query in queries:
        clustering.add(query)
    return clustering


def expected_entropy(clustering: Clustering) -> float:
    """Size-weighted entropy sum normalized by the number of clustered queries."""
    return clustering.expected_entropy()


def expected_entropy_per_cluster(clustering: Clustering) -> float:
    """Alternate reporting metric: normalize by the cluster count instead."""
    if not clustering.clusters:
        return 0.0
    return clustering.weighted_entropy / len(clustering.clusters)


@dataclass(frozen=True)
class EntropyDeltaInputs:
    """Closed-form inputs: cluster size n, probability p, clustered total M,
    current expected entropy omega, and for the multi-element form the element
    count m and the disjoint fraction k."""

    n: int
    p: float
    M: int
    omega: float
    m: int = 1
    k: float = 0.0


def delta_expected_entropy_single(inputs: EntropyDeltaInputs, member: bool) -> float:
    """Expected-entropy change from one element when a query joins a cluster.

    `member` selects the (np+1)/(n+1) branch of the updated probability.
    """
    n, p = inputs.n, inputs.p
    p_star = (n * p + (1.0 if member else 0.0)) / (n + 1)
    new_total = (
        inputs.M * inputs.omega
        - n * binary_entropy(p)
        + (n + 1) * binary_entropy(p_star)
    )
    return new_total / (inputs.M + 1) - inputs.omega


def delta_expected_entropy_multi(inputs: EntropyDeltaInputs) -> float:
    """Expected-entropy change when a query misses k*m of a cluster's m
    equal-probability elements and contains the other (1-k)*m."""
    n, p, m, k = inputs.n, inputs.p, inputs.m, inputs.k
    new_total = (
        inputs.M * inputs.omega
        - n * m * binary_entropy(p)
        + (n + 1) * k * m * binary_entropy(n * p / (n + 1))
        + (n + 1) * (1.0 - k) * m * binary_entropy((n * p + 1.0) / (n + 1))
    )
    return new_total / (inputs.M + 1) - inputs.omega


@dataclass(frozen=True)
class QualityReport:
    """Histogram of per-(cluster, item) probabilities in ten equal bins, plus
    (size, average probability) per cluster ordered by cluster id."""

    bins: tuple[int, ...]
    per_cluster: tuple[tuple[int, float], ...]


def quality_report(clustering: Clustering) -> QualityReport:
    bins = [0] * 10
    per_cluster: list[tuple[int, float]] = []
    for cid in sorted(clustering.clusters):
        cluster = clustering.clusters[cid]
        n = cluster.size
        for c in cluster.item_counts.values():
            bins[min(int(c / n * 10), 9)] += 1
        per_cluster.append((n, average_probability(cluster)))
    return QualityReport(tuple(bins), tuple(per_cluster))


def clustering_to_dict(clustering: Clustering) -> dict:
    return {
        "next_cluster_id": clustering.next_cluster_id,
        "total_clustered": clustering.total_clustered,
        "progress": list(clustering.progress),
        "clusters": [
            {
                "id": cid,
                "members": list(clustering.clusters[cid].member_query_ids),
                "item_counts": [
                    [item, count]
                    for item, count in sorted(clustering.clusters[cid].item_counts.items())
                ],
            }
            for cid in sorted(clustering.clusters)
        ],
    }


def clustering_from_dict(doc: dict, params: ClusteringParams | None = None) -> Clustering:
    clustering = Clustering(params or ClusteringParams())
    for entry in doc["clusters"]:
        cluster = Cluster(
            id=entry["id"],
            member_query_ids=list(entry["members"]),
            item_counts={int(item): int(count) for item, count in entry["item_counts"]},
        )
        cluster.entropy = cluster_entropy(cluster)
        clustering.clusters[cluster.id] = cluster
        clustering.weighted_entropy += cluster.size * cluster.entropy
        for item in cluster.item_counts:
            insort(clustering.item_to_clusters.setdefault(item, []), cluster.id)
    clustering.total_clustered = doc["total_clustered"]
    clustering.progress = list(doc.get("progress", []))
    clustering.next_cluster_id = doc["next_cluster_id"]
    return clustering


def save_clustering(clustering: Clustering, path) -> None:
    """JSON dump with stable ordering, suitable for golden tests."""
    doc = {"format": "clustering", "version": 1}
    doc.update(clustering_to_dict(clustering))
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_clustering(path, params: ClusteringParams | None = None) -> Clustering:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != "clustering":
        raise ValueError(f"{path}: not a clustering dump")
    return clustering_from_dict(doc, params)
