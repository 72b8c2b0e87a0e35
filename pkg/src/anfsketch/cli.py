"""Command-line entry point: ``anfsketch {anf,metrics,bench} INPUT [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .errors import (
    AnfSketchError,
    BudgetExceeded,
    ConfigurationError,
    EmptyGraphError,
    FormatError,
    ParameterError,
    ParseError,
    UndefinedMetricError,
    UnsupportedMetricError,
)
from .graph import Graph, load_edge_list
from .hyperball import DEFAULT_MAX_DEPTH, BallTable, run_hyperball
from .hyperball import warm_up as warm_up_hyperball
from .metrics import (
    DEFAULT_SEED,
    avg_clustering,
    dispersion_index,
    distance_distribution,
    small_world_coefficient,
)
from .oracle import bfs_balls, exact_distance_distribution
from .oracle import warm_up as warm_up_oracle
from .sketch import DEFAULT_MINHASH_K, DEFAULT_PRECISION

log = logging.getLogger("anfsketch")

ARTIFACT_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_METRIC = 3


@dataclass
class RunConfig:
    command: str
    input: str
    directed: bool = False
    precision: int = DEFAULT_PRECISION
    minhash_k: int = DEFAULT_MINHASH_K
    max_depth: int = DEFAULT_MAX_DEPTH
    threads: int = os.cpu_count() or 1
    seed: int = DEFAULT_SEED
    mode: str = "estimate"
    format: str = "json"
    output: str | None = None
    budget_secs: float = 3600.0
    strict: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def format_elapsed(seconds: float) -> str:
    """Render seconds as ``h:mm:ss.ffffff``."""
    micros = int(round(seconds * 1_000_000))
    secs, micros = divmod(micros, 1_000_000)
    mins, secs = divmod(secs, 60)
    hours, mins = divmod(mins, 60)
    return f"{hours}:{mins:02d}:{secs:02d}.{micros:06d}"


def format_budget(seconds: float) -> str:
    whole = int(seconds)
    mins, secs = divmod(whole, 60)
    hours, mins = divmod(mins, 60)
    return f"> {hours}:{mins:02d}:{secs:02d}.00"


def _envelope(config: RunConfig, kind: str, body: dict) -> dict:
    return {"format_version": ARTIFACT_VERSION, "kind": kind, "config": config.to_dict(), **body}


def _dump_json(obj: dict) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n").encode()


def _write_artifact(config: RunConfig, data: bytes) -> None:
    if config.output is None:
        return
    Path(config.output).write_bytes(data)
    log.info("wrote %s", config.output)


def _load(config: RunConfig) -> Graph:
    g = load_edge_list(config.input, directed=config.directed)
    log.info(
        "loaded %s: %d nodes, %d edges (%d self-loops, %d duplicates dropped)",
        config.input, g.n, g.num_edges, g.stats.self_loops, g.stats.duplicates,
    )
    return g


def _ball_table(g: Graph, config: RunConfig, threads: int | None = None, budget: float | None = None) -> BallTable:
    threads = config.threads if threads is None else threads
    if config.mode == "oracle":
        return bfs_balls(g, config.max_depth, parallel=threads != 1, threads=threads, budget=budget)
    return run_hyperball(
        g,
        precision=config.precision,
        max_depth=config.max_depth,
        mode=config.mode,
        seed=config.seed,
        threads=threads,
        budget=budget,
    )


# --- commands ----------------------------------------------------------------


def cmd_anf(config: RunConfig, out=None) -> int:
    out = out or sys.stdout
    g = _load(config)
    if config.mode == "oracle":
        warm_up_oracle()
    else:
        warm_up_hyperball()
    started = time.perf_counter()
    bt = _ball_table(g, config, budget=config.budget_secs)
    elapsed = time.perf_counter() - started

    header = {"format_version": ARTIFACT_VERSION, "config": config.to_dict()}
    if config.format == "csv":
        if config.output is not None:
            bt.to_csv(config.output, header=header)
    elif config.format == "bin":
        if config.output is not None:
            bt.save(config.output, header=header)
    else:
        body = {
            **bt.metadata(),
            "n": bt.n,
            "max_t": bt.max_t,
            "labels": list(g.labels) if g.labels is not None else None,
            "sizes": bt.sizes.tolist(),
        }
        _write_artifact(config, _dump_json(_envelope(config, "ball_table", body)))

    agg = bt.aggregate()
    print(f"nodes={g.n} edges={g.num_edges} mode={config.mode} max_t={bt.max_t} converged={bt.converged}", file=out)
    print("t,sum_ball_size", file=out)
    for t, value in enumerate(agg):
        print(f"{t},{int(value) if bt.exact else float(value)!r}", file=out)
    print(f"time {format_elapsed(elapsed)}", file=out)
    return EXIT_OK


def _metric(report: dict, errors: dict, name: str, fn):
    try:
        value = fn()
    except (UndefinedMetricError, UnsupportedMetricError) as exc:
        errors[name] = str(exc)
        report[name] = None
        return None
    report[name] = value
    return value


def compute_metrics(g: Graph, config: RunConfig) -> tuple[dict, dict]:
    report: dict = {}
    errors: dict = {}
    if config.mode == "oracle":
        dist = _metric(report, errors, "distance_distribution", lambda: exact_distance_distribution(g))
        sw_mode = "exact"
    else:
        bt = _ball_table(g, config)
        dist = _metric(report, errors, "distance_distribution", lambda: distance_distribution(bt))
        sw_mode = config.mode
    if dist is not None:
        report["distance_distribution"] = dist.to_dict()
        _metric(report, errors, "average_path_length", dist.mean)
        _metric(report, errors, "dispersion_index", lambda: dispersion_index(dist))
    _metric(report, errors, "clustering", lambda: avg_clustering(g))
    sw = _metric(
        report,
        errors,
        "small_world",
        lambda: small_world_coefficient(
            g,
            precision=config.precision,
            max_depth=config.max_depth,
            seed=config.seed,
            mode=sw_mode,
            threads=config.threads,
        ),
    )
    if sw is not None:
        report["small_world"] = sw.to_dict()
    return report, errors


def cmd_metrics(config: RunConfig, out=None) -> int:
    out = out or sys.stdout
    g = _load(config)
    report, errors = compute_metrics(g, config)
    body = {"n": g.n, "edges": g.num_edges, "metrics": report, "errors": errors}
    if config.format == "csv":
        lines = [
            f"# format_version: {ARTIFACT_VERSION}\n",
            f"# config: {json.dumps(config.to_dict(), sort_keys=True)}\n",
            "metric,value\n",
        ]
        for key in ("average_path_length", "dispersion_index", "clustering"):
            lines.append(f"{key},{report.get(key)!r}\n")
        sw = report.get("small_world") or {}
        for key in ("l", "c", "omega"):
            lines.append(f"small_world.{key},{sw.get(key)!r}\n")
        dist = report.get("distance_distribution") or {"counts": {}}
        for t, count in dist["counts"].items():
            lines.append(f"distance_count.{t},{count!r}\n")
        _write_artifact(config, "".join(lines).encode())
    else:
        _write_artifact(config, _dump_json(_envelope(config, "metrics", body)))
    text = json.dumps(body, indent=2, sort_keys=True)
    print(text, file=out)
    if errors:
        for name, msg in errors.items():
            print(f"metric {name} undefined: {msg}", file=sys.stderr)
        if config.strict:
            return EXIT_METRIC
    return EXIT_OK


def _timed(fn, budget: float) -> tuple[str, float | None]:
    started = time.perf_counter()
    try:
        fn()
    except BudgetExceeded:
        return format_budget(budget), None
    elapsed = time.perf_counter() - started
    if elapsed > budget:
        return format_budget(budget), None
    return format_elapsed(elapsed), elapsed


def run_bench(g: Graph, config: RunConfig) -> dict:
    """Time BFS (sequential), HyperBall (sequential) and HyperBall (parallel)."""
    warm_up_oracle()
    warm_up_hyperball()
    budget = config.budget_secs
    hb = dict(precision=config.precision, max_depth=config.max_depth, seed=config.seed, budget=budget)
    columns = {
        "bfs_sequential": lambda: bfs_balls(g, config.max_depth, parallel=False, budget=budget),
        "hyperball_sequential": lambda: run_hyperball(g, threads=1, **hb),
        "hyperball_parallel": lambda: run_hyperball(g, threads=config.threads, **hb),
    }
    row: dict = {"nodes": g.n, "edges": g.num_edges}
    for name, fn in columns.items():
        label, seconds = _timed(fn, budget)
        row[name] = label
        row[name + "_seconds"] = seconds
    return row


def cmd_bench(config: RunConfig, out=None) -> int:
    out = out or sys.stdout
    g = _load(config)
    row = run_bench(g, config)
    name = Path(config.input).name
    headers = ["", "Nodes", "Edges", "Bfs Sequential", "HyperBall Sequential", "HyperBall Parallel"]
    cells = [name, str(row["nodes"]), str(row["edges"]), row["bfs_sequential"],
             row["hyperball_sequential"], row["hyperball_parallel"]]
    widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
    rule = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    print(rule, file=out)
    print("| " + " | ".join(h.ljust(w) for h, w in zip(headers, widths)) + " |", file=out)
    print(rule, file=out)
    print("| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |", file=out)
    print(rule, file=out)
    _write_artifact(config, _dump_json(_envelope(config, "bench", {"rows": [{"graph": name, **row}]})))
    return EXIT_OK


COMMANDS = {"anf": cmd_anf, "metrics": cmd_metrics, "bench": cmd_bench}


# --- argument parsing --------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("input", help="edge list file (plain or gzip)")
    common.add_argument("--directed", action="store_true", help="keep arc direction (default: symmetrize)")
    common.add_argument("-p", "--precision", type=int, default=DEFAULT_PRECISION, help="HLL index bits (4-18)")
    common.add_argument("--minhash-k", type=int, default=DEFAULT_MINHASH_K, help="MinHash signature size")
    common.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH, help="radius cap for ball growth")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="hash and random-graph seed")
    common.add_argument("--mode", choices=["estimate", "exact", "oracle"], default="estimate")
    common.add_argument("--format", choices=["json", "csv", "bin"], default="json")
    common.add_argument("-o", "--output", help="write the machine-readable artifact here")
    common.add_argument("--budget-secs", type=float, default=3600.0, help="wall-clock budget per run")
    common.add_argument("--strict", action="store_true", help="exit 3 when a metric is undefined")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="anfsketch", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("anf", parents=[common], help="per-node ball sizes and timing")
    sub.add_parser("metrics", parents=[common], help="APL, distance distribution, clustering, small-world")
    sub.add_parser("bench", parents=[common], help="BFS vs HyperBall timing table")
    return parser


def parse_config(argv: list[str] | None = None) -> tuple[RunConfig, bool]:
    args = build_parser().parse_args(argv)
    config = RunConfig(
        command=args.command,
        input=args.input,
        directed=args.directed,
        precision=args.precision,
        minhash_k=args.minhash_k,
        max_depth=args.max_depth,
        threads=args.threads,
        seed=args.seed,
        mode=args.mode,
        format=args.format,
        output=args.output,
        budget_secs=args.budget_secs,
        strict=args.strict,
    )
    return config, args.verbose


def main(argv: list[str] | None = None) -> int:
    config, verbose = parse_config(argv)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if config.format == "bin" and config.command != "anf":
        print("anfsketch: error: --format bin is only available for anf", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[config.command](config)
    except BudgetExceeded as exc:
        print(f"anfsketch: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ParseError, EmptyGraphError, FormatError, OSError) as exc:
        print(f"anfsketch: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ParameterError, ConfigurationError) as exc:
        print(f"anfsketch: parameter error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UndefinedMetricError, UnsupportedMetricError) as exc:
        print(f"anfsketch: metric undefined: {exc}", file=sys.stderr)
        return EXIT_METRIC
    except AnfSketchError as exc:
        print(f"anfsketch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
