"""spanroute: query-span minimizing routing over replicated scale-out layouts.

Covers are shared across correlated queries: an entropy-driven incremental
clustering groups the known queries, each cluster is covered once (gcpa), and
the resulting cover parts are reused to route unseen queries in real time.
"""

from .bench import (BenchConfig, MetricsReport, StrategyMetrics, desk_config,
                    emit_cluster_progress, emit_pairwise, run_benchmark,
                    write_bench_csv, write_quality_csvs)
from .clustering import (Cluster, Clustering, ClusteringParams,
                         EntropyDeltaInputs, QualityReport, average_probability,
                         binary_entropy, cluster_entropy, cluster_stream,
                         delta_expected_entropy_multi,
                         delta_expected_entropy_single, eligible,
                         expected_entropy, item_probability, quality_report)
from .gcpa import (ClusterCoverResult, CoverPart, DataPart, compute_depths,
                   partition_parts, process_cluster)
from .layout import (Cover, DataLayout, PlacementConfig, PlacementError, Query,
                     UnknownMachineError, generate_placement, invert_layout,
                     load_placement, save_placement, validate_cover)
from .router import (RouterParams, RouterState, RoutingResult, assign_cluster,
                     load_state, precompute, route_baseline,
                     route_better_baseline, route_ngreedy, route_realtime,
                     save_state)
from .setcover import (PairCoverResult, SizeBucketIndex, UncoverableItemError,
                       WorkCounter, biased_greedy_cover, brute_force_cover,
                       cover_intersecting, cover_nested, greedy_cover)
from .workload import (QueryLogError, RandomGraph, Workload, WorkloadConfig,
                       build_workload, component_map, component_sizes,
                       gen_er_graph, generate_queries, load_query_log,
                       mean_pairwise_intersection, save_query_log,
                       uniform_workload_like)

__version__ = "0.1.0"
