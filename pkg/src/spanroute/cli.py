"""Command line front end: dataset generation, clustering, and benchmark runs.

Every flag can also come from a flat key=value file passed as --config
(explicit flags win). The default seed falls back to the ROUTER_SEED
environment variable. Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .bench import (BenchConfig, MetricsReport, emit_cluster_progress,
                    emit_pairwise, run_benchmark, write_bench_csv,
                    write_quality_csvs)
from .clustering import ClusteringParams, cluster_stream, quality_report, save_clustering
from .layout import PlacementConfig, generate_placement, load_placement, save_placement
from .router import RouterParams, precompute, save_state
from .workload import WorkloadConfig, build_workload, load_query_log, save_query_log


class UsageError(Exception):
    pass


def _env_seed() -> int:
    return int(os.environ.get("ROUTER_SEED", "0"))


@dataclass(frozen=True)
class Opt:
    name: str
    type: Callable = str
    default: object = None
    required: bool = False
    flag: bool = False
    help: str = ""

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


_SEED = Opt("seed", int, _env_seed, help="random seed (default: $ROUTER_SEED or 0)")

_PLACEMENT_INLINE = [
    Opt("items", int, help="universe size for an inline placement"),
    Opt("machines", int, help="machine count for an inline placement"),
    Opt("replication", int, 3, help="copies per item"),
]

_WORKLOAD_INLINE = [
    Opt("count", int, help="number of queries to generate"),
    Opt("p", float, help="edge probability of the generator graph"),
    Opt("np", float, help="target n*p of the generator graph (alternative to --p)"),
    Opt("min-len", int, 6, help="minimum query length"),
    Opt("max-len", int, 15, help="maximum query length"),
]

COMMANDS: dict[str, list[Opt]] = {
    "gen-placement": [
        Opt("items", int, required=True, help="universe size"),
        Opt("machines", int, required=True, help="machine count"),
        Opt("replication", int, 3, help="copies per item"),
        _SEED,
        Opt("out", required=True, help="placement file to write"),
    ],
    "gen-queries": [
        Opt("items", int, required=True, help="universe size (graph vertices)"),
        *_WORKLOAD_INLINE,
        Opt("literal-frontier", flag=True,
            help="keep the sampling pool fixed to the start vertex's neighbors"),
        _SEED,
        Opt("out", required=True, help="query file to write"),
    ],
    "cluster": [
        Opt("queries", required=True, help="query file to cluster"),
        Opt("theta1", float, 0.5, help="per-item probability threshold"),
        Opt("theta2", float, 0.5, help="fraction of query items required above theta1"),
        Opt("out", required=True, help="clustering dump (JSON) to write"),
        Opt("progress-out", help="optional cluster-progress CSV"),
        Opt("placement", help="placement file (needed for --gparts-out or --state-out)"),
        Opt("variant", str, "bg", help="cluster cover variant: g or bg"),
        Opt("gparts-out", help="optional cover-part table (JSON)"),
        Opt("state-out", help="optional full router state snapshot (JSON)"),
        _SEED,
    ],
    "bench": [
        Opt("placement", help="placement file (otherwise --items/--machines inline)"),
        *_PLACEMENT_INLINE,
        Opt("queries", help="query file (otherwise --count/--np inline)"),
        *_WORKLOAD_INLINE,
        Opt("strategies", str, "baseline,ngreedy,gcpa-bg", help="comma-separated strategy list"),
        Opt("pretrain-frac", float, 0.4, help="fraction of the workload known in advance"),
        Opt("theta1", float, 0.5),
        Opt("theta2", float, 0.5),
        Opt("assign-mode", str, "fast", help="real-time cluster attribution: fast or full"),
        Opt("small-query-limit", int, 1, help="queries this short are covered directly"),
        Opt("reps", int, 1, help="timing repetitions (median reported)"),
        Opt("timing", flag=True, help="include measured timings in the CSV"),
        _SEED,
        Opt("out", required=True, help="bench CSV to write"),
        Opt("progress-out", help="optional cluster-progress CSV (needs a gcpa strategy)"),
        Opt("pairwise-out", help="optional pairwise-delta CSV"),
        Opt("pairwise-candidate", str, "gcpa-bg"),
        Opt("pairwise-reference", str, "ngreedy"),
    ],
    "pairwise": [
        Opt("placement", help="placement file (otherwise --items/--machines inline)"),
        *_PLACEMENT_INLINE,
        Opt("queries", help="query file (otherwise --count/--np inline)"),
        *_WORKLOAD_INLINE,
        Opt("candidate", str, "gcpa-bg", help="strategy under comparison"),
        Opt("reference", str, "ngreedy", help="reference strategy"),
        Opt("pretrain-frac", float, 0.4),
        Opt("theta1", float, 0.5),
        Opt("theta2", float, 0.5),
        _SEED,
        Opt("out", required=True, help="pairwise CSV to write"),
    ],
    "analyze": [
        Opt("queries", required=True, help="query file to analyze"),
        Opt("theta1", float, 0.5),
        Opt("theta2", float, 0.5),
        Opt("hist-out", required=True, help="probability histogram CSV"),
        Opt("clusters-out", required=True, help="per-cluster size/probability CSV"),
        Opt("progress-out", help="optional cluster-progress CSV"),
        _SEED,
    ],
}

_HELP = {
    "gen-placement": "generate a replicated random placement file",
    "gen-queries": "generate a correlated synthetic query file",
    "cluster": "cluster a query file and dump the result",
    "bench": "run the routing benchmark and write per-strategy metrics",
    "pairwise": "emit per-query span deltas between two strategies",
    "analyze": "cluster a query file and emit quality statistics",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spanroute",
        description="Query-span minimizing router and benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for command, opts in COMMANDS.items():
        p = sub.add_parser(command, help=_HELP[command])
        p.add_argument("--config", help="flat key=value file supplying defaults for omitted flags")
        for opt in opts:
            flag = f"--{opt.name}"
            if opt.flag:
                p.add_argument(flag, action="store_const", const=True, default=None, help=opt.help)
            else:
                p.add_argument(flag, type=opt.type, default=None, help=opt.help)
        p.set_defaults(command=command)
    return parser


def _parse_bool(raw: str) -> bool:
    return raw.strip().lower() in ("1", "true", "yes", "on")


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _finalize(args: argparse.Namespace) -> argparse.Namespace:
    """Fill omitted flags from the config file, then from built-in defaults."""
    file_values = _read_config_file(args.config) if args.config else {}
    for opt in COMMANDS[args.command]:
        value = getattr(args, opt.dest)
        if value is None:
            raw = file_values.get(opt.dest)
            if raw is not None:
                value = _parse_bool(raw) if opt.flag else opt.type(raw)
            elif callable(opt.default):
                value = opt.default()
            else:
                value = opt.default
        if value is None and opt.required:
            raise UsageError(f"--{opt.name} is required for {args.command}")
        if value is None and opt.flag:
            value = False
        setattr(args, opt.dest, value)
    return args


def _inline_placement(args) -> PlacementConfig | str:
    if args.placement:
        return args.placement
    if args.items is None or args.machines is None:
        raise UsageError("give --placement or both --items and --machines")
    return PlacementConfig(args.items, args.machines, args.replication, args.seed)


def _workload_config(args, n: int) -> WorkloadConfig:
    if args.count is None:
        raise UsageError("give --queries or --count for an inline workload")
    if (args.p is None) == (args.np is None):
        raise UsageError("give exactly one of --p or --np")
    p = args.p if args.p is not None else args.np / n
    extend = not getattr(args, "literal_frontier", False)
    return WorkloadConfig(
        n=n, p=p, query_count=args.count,
        min_len=args.min_len, max_len=args.max_len,
        seed=args.seed + 1, extend_frontier=extend,
    )


def _inline_workload(args) -> WorkloadConfig | str:
    if args.queries:
        return args.queries
    placement = _inline_placement(args)
    n = placement.universe_size if isinstance(placement, PlacementConfig) else load_placement(placement).universe_size
    return _workload_config(args, n)


def _cmd_gen_placement(args) -> int:
    config = PlacementConfig(args.items, args.machines, args.replication, args.seed)
    save_placement(generate_placement(config), args.out)
    return 0


def _cmd_gen_queries(args) -> int:
    if (args.p is None) == (args.np is None):
        raise UsageError("give exactly one of --p or --np")
    p = args.p if args.p is not None else args.np / args.items
    config = WorkloadConfig(
        n=args.items, p=p, query_count=args.count,
        min_len=args.min_len, max_len=args.max_len,
        seed=args.seed, extend_frontier=not args.literal_frontier,
    )
    workload = build_workload(config)
    header = (f"#queries v1 n={config.n} p={config.p!r} count={config.query_count} "
              f"min_len={config.min_len} max_len={config.max_len} seed={config.seed} "
              f"extend_frontier={config.extend_frontier}")
    save_query_log(workload, args.out, header=header)
    return 0


def _cmd_cluster(args) -> int:
    workload = load_query_log(args.queries)
    params = ClusteringParams(args.theta1, args.theta2)
    clustering = cluster_stream(workload.queries, params)
    save_clustering(clustering, args.out)
    if args.progress_out:
        emit_cluster_progress(clustering.progress, args.progress_out)
    if args.gparts_out or args.state_out:
        if not args.placement:
            raise UsageError("--gparts-out/--state-out need --placement")
        layout = load_placement(args.placement)
        router_params = RouterParams(
            theta1=args.theta1, theta2=args.theta2,
            variant=args.variant, seed=args.seed,
        )
        state = precompute(workload.queries, layout, router_params, clustering=clustering)
        if args.gparts_out:
            doc = {
                "format": "coverparts",
                "version": 1,
                "parts": [
                    {"id": p.id, "items": list(p.items), "machines": list(p.machines)}
                    for _, p in sorted(state.cover_parts.items())
                ],
            }
            Path(args.gparts_out).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        if args.state_out:
            save_state(state, args.state_out)
    return 0


def _bench_config(args, strategies: tuple[str, ...]) -> BenchConfig:
    return BenchConfig(
        placement=_inline_placement(args),
        workload=_inline_workload(args),
        strategies=strategies,
        pretrain_fraction=args.pretrain_frac,
        theta1=args.theta1,
        theta2=args.theta2,
        repetitions=getattr(args, "reps", 1) or 1,
        assign_mode=getattr(args, "assign_mode", "fast") or "fast",
        small_query_limit=getattr(args, "small_query_limit", 1) or 1,
        seed=args.seed,
    )


def _cmd_bench(args) -> int:
    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    config = _bench_config(args, strategies)
    report = run_benchmark(config)
    write_bench_csv(report, args.out, include_timing=bool(args.timing))
    if args.progress_out:
        if report.cluster_progress is None:
            raise UsageError("--progress-out needs a gcpa strategy in --strategies")
        emit_cluster_progress(report.cluster_progress, args.progress_out)
    if args.pairwise_out:
        emit_pairwise(report, args.pairwise_candidate, args.pairwise_reference, args.pairwise_out)
    return 0


def _cmd_pairwise(args) -> int:
    strategies = tuple(dict.fromkeys((args.candidate, args.reference)))
    config = _bench_config(args, strategies)
    report = run_benchmark(config)
    emit_pairwise(report, args.candidate, args.reference, args.out)
    return 0


def _cmd_analyze(args) -> int:
    workload = load_query_log(args.queries)
    clustering = cluster_stream(workload.queries, ClusteringParams(args.theta1, args.theta2))
    write_quality_csvs(quality_report(clustering), args.hist_out, args.clusters_out)
    if args.progress_out:
        emit_cluster_progress(clustering.progress, args.progress_out)
    return 0


_DISPATCH = {
    "gen-placement": _cmd_gen_placement,
    "gen-queries": _cmd_gen_queries,
    "cluster": _cmd_cluster,
    "bench": _cmd_bench,
    "pairwise": _cmd_pairwise,
    "analyze": _cmd_analyze,
}


def cli_dispatch(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits itself for --help (0) and usage errors (2)
        return 0 if (exc.code or 0) == 0 else 1
    try:
        _finalize(args)
        return _DISPATCH[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
