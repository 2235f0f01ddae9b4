"""Benchmark harness: route one workload through competing strategies.

Only the routing calls are timed; building clusters and cover parts is
reported separately as precompute time. Wall-clock figures are medians over
the configured repetitions, while spans and covers come from the first run
(they are deterministic per seed).
"""

from __future__ import annotations

import math
import statistics
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .clustering import QualityReport, quality_report
from .layout import DataLayout, PlacementConfig, generate_placement, load_placement
from .router import (RouterParams, RouterState, RoutingResult, precompute,
                     route_baseline, route_better_baseline, route_ngreedy,
                     route_realtime)
from .workload import Workload, WorkloadConfig, build_workload, load_query_log

KNOWN_STRATEGIES = ("baseline", "better-baseline", "ngreedy", "gcpa-g", "gcpa-bg")

BENCH_COLUMNS = ("strategy,seed,n_queries,avg_span,p50_span,p95_span,span_std,"
                 "route_ns_per_query,precompute_ms,valid_fraction")

# Desk-scale defaults: a 1/10 scale instance with the same placement density
# (each machine holds 6% of the universe) and query lengths as the full setup.
DESK_UNIVERSE = 10_000
DESK_MACHINES = 50
DESK_REPLICATION = 3
DESK_QUERY_COUNT = 5_000
DESK_NP = 0.99
DESK_MIN_LEN = 6
DESK_MAX_LEN = 15
DESK_PRETRAIN_FRACTION = 0.4


@dataclass(frozen=True)
class BenchConfig:
    placement: PlacementConfig | str
    workload: WorkloadConfig | str
    strategies: tuple[str, ...] = ("baseline", "ngreedy", "gcpa-bg")
    pretrain_fraction: float = DESK_PRETRAIN_FRACTION
    theta1: float = 0.5
    theta2: float = 0.5
    assign_mode: str = "fast"
    small_query_limit: int = 1
    repetitions: int = 1
    seed: int = 0

    def validate(self) -> None:
        unknown = [s for s in self.strategies if s not in KNOWN_STRATEGIES]
        if unknown:
            raise ValueError(f"unknown strategies: {', '.join(unknown)}")
        if not 0.0 <= self.pretrain_fraction < 1.0:
            raise ValueError("pretrain_fraction must be in [0, 1)")


def desk_config(seed: int = 0, strategies: Sequence[str] = ("baseline", "ngreedy", "gcpa-bg"),
                repetitions: int = 1, query_count: int = DESK_QUERY_COUNT) -> BenchConfig:
    return BenchConfig(
        placement=PlacementConfig(DESK_UNIVERSE, DESK_MACHINES, DESK_REPLICATION, seed),
        workload=WorkloadConfig.from_np(
            DESK_UNIVERSE, DESK_NP, query_count,
            min_len=DESK_MIN_LEN, max_len=DESK_MAX_LEN, seed=seed + 1,
        ),
        strategies=tuple(strategies),
        repetitions=repetitions,
        seed=seed,
    )


@dataclass
class StrategyMetrics:
    strategy: str
    seed: int
    n_queries: int
    avg_span: float
    p50_span: float
    p95_span: float
    span_std: float
    route_ns_per_query: float
    precompute_ms: float
    valid_fraction: float
    total_machines_touched: int
    spans: list[int] = field(default_factory=list, repr=False)


@dataclass
class MetricsReport:
    config: BenchConfig
    strategies: dict[str, StrategyMetrics] = field(default_factory=dict)
    cluster_progress: list[int] | None = None
    quality: QualityReport | None = None


def resolve_placement(placement: PlacementConfig | str) -> DataLayout:
    if isinstance(placement, PlacementConfig):
        return generate_placement(placement)
    return load_placement(placement)


def resolve_workload(workload: WorkloadConfig | str, layout: DataLayout) -> Workload:
    if isinstance(workload, WorkloadConfig):
        return build_workload(workload)
    return load_query_log(workload, layout.universe_size)


def _route_stream(strategy: str, pre: list, rt: list, layout: DataLayout,
                  config: BenchConfig) -> tuple[list[RoutingResult], float, RouterState | None]:
    if strategy in ("gcpa-g", "gcpa-bg"):
        params = RouterParams(
            theta1=config.theta1,
            theta2=config.theta2,
            variant=strategy.removeprefix("gcpa-"),
            assign_mode=config.assign_mode,
            small_query_limit=config.small_query_limit,
            seed=config.seed,
        )
        t0 = time.perf_counter()
        state = precompute(pre, layout, params)
        precompute_ms = (time.perf_counter() - t0) * 1e3
        return [route_realtime(q, state) for q in rt], precompute_ms, state
    if strategy == "ngreedy":
        return [route_ngreedy(q, layout) for q in rt], 0.0, None
    if strategy == "baseline":
        base = config.seed * 1_000_003
        return [route_baseline(q, layout, base + q.id) for q in rt], 0.0, None
    if strategy == "better-baseline":
        base = config.seed * 1_000_003
        return [route_better_baseline(q, layout, base + q.id) for q in rt], 0.0, None
    raise ValueError(f"unknown strategy {strategy!r}")


def _percentile(sorted_values: Sequence[int], q: float) -> float:
    """Nearest-rank percentile over a pre-sorted sequence."""
    if not sorted_values:
        return 0.0
    rank = max(1, math.ceil(q * len(sorted_values)))
    return float(sorted_values[rank - 1])


def run_benchmark(config: BenchConfig) -> MetricsReport:
    """Route the real-time segment through every requested strategy.

    All strategies see identical inputs; gcpa strategies precompute from the
    pre-real-time segment first. Deterministic per seed apart from timings.
    """
    config.validate()
    layout = resolve_placement(config.placement)
    workload = resolve_workload(config.workload, layout)
    pre, rt = workload.split(config.pretrain_fraction)
    report = MetricsReport(config)
    reps = max(1, config.repetitions)
    for strategy in config.strategies:
        runs = [_route_stream(strategy, pre, rt, layout, config) for _ in range(reps)]
        results = runs[0][0]
        spans = [r.span for r in results]
        n = len(results)
        ns_per_query = (
            statistics.median(sum(r.elapsed_ns for r in run_results) for run_results, _, _ in runs) / n
            if n else 0.0
        )
        report.strategies[strategy] = StrategyMetrics(
            strategy=strategy,
            seed=config.seed,
            n_queries=n,
            avg_span=statistics.fmean(spans) if spans else 0.0,
            p50_span=float(statistics.median(spans)) if spans else 0.0,
            p95_span=_percentile(sorted(spans), 0.95),
            span_std=statistics.pstdev(spans) if len(spans) > 1 else 0.0,
            route_ns_per_query=ns_per_query,
            precompute_ms=statistics.median(pre_ms for _, pre_ms, _ in runs),
            valid_fraction=(sum(r.valid for r in results) / n) if n else 1.0,
            total_machines_touched=sum(spans),
            spans=spans,
        )
        state = runs[0][2]
        if state is not None and report.cluster_progress is None:
            report.cluster_progress = list(state.clustering.progress)
            report.quality = quality_report(state.clustering)
    return report


def write_bench_csv(report: MetricsReport, path, include_timing: bool = False) -> None:
    """One row per strategy. Timing columns are zeroed unless requested, so
    identical seeds reproduce byte-identical files."""
    lines = ["#bench v1", BENCH_COLUMNS]
    for strategy in report.config.strategies:
        m = report.strategies[strategy]
        ns = m.route_ns_per_query if include_timing else 0.0
        pre_ms = m.precompute_ms if include_timing else 0.0
        lines.append(",".join([
            m.strategy,
            str(m.seed),
            str(m.n_queries),
            f"{m.avg_span:.6f}",
            f"{m.p50_span:.6f}",
            f"{m.p95_span:.6f}",
            f"{m.span_std:.6f}",
            f"{ns:.1f}",
            f"{pre_ms:.3f}",
            f"{m.valid_fraction:.6f}",
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_pairwise(report: MetricsReport, candidate: str, reference: str, path) -> None:
    """Per-query span deltas of `candidate` against `reference`, grouped as
    (reference span, delta, multiplicity) rows."""
    for name in (candidate, reference):
        if name not in report.strategies:
            raise ValueError(f"strategy {name!r} not present in the report")
    cand = report.strategies[candidate].spans
    ref = report.strategies[reference].spans
    pairs = Counter((r, c - r) for r, c in zip(ref, cand, strict=True))
    lines = [f"#pairwise v1 candidate={candidate} reference={reference}", "ref_span,delta,count"]
    for (ref_span, delta), count in sorted(pairs.items()):
        lines.append(f"{ref_span},{delta},{count}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_cluster_progress(progress: Sequence[int], path) -> None:
    """Cluster-formation series: percent of queries processed vs percent of
    final clusters formed (plus the raw cluster count)."""
    total = len(progress)
    final = progress[-1] if progress else 0
    lines = ["#progress v1", "pct_queries,pct_clusters,clusters"]
    for i, count in enumerate(progress, start=1):
        pct_queries = 100.0 * i / total
        pct_clusters = 100.0 * count / final if final else 0.0
        lines.append(f"{pct_queries:.4f},{pct_clusters:.4f},{count}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_quality_csvs(quality: QualityReport, hist_path, clusters_path) -> None:
    hist_lines = ["#quality v1", "bin_lo,bin_hi,count"]
    for i, count in enumerate(quality.bins):
        hist_lines.append(f"{i / 10:.1f},{(i + 1) / 10:.1f},{count}")
    Path(hist_path).write_text("\n".join(hist_lines) + "\n", encoding="utf-8")
    cluster_lines = ["#clusters v1", "cluster_id,size,avg_probability"]
    for cid, (size, avg_p) in enumerate(quality.per_cluster):
        cluster_lines.append(f"{cid},{size},{avg_p:.6f}")
    Path(clusters_path).write_text("\n".join(cluster_lines) + "\n", encoding="utf-8")
