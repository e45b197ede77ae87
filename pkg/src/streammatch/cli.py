"""Command line driver: ``run``, ``verify`` and ``gen``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from contextlib import ExitStack
from pathlib import Path
from typing import Sequence

from streammatch import generators
from streammatch.coldstore import ColdStoreError, SpillConfig
from streammatch.engine import Engine, EngineError
from streammatch.graph import GraphError
from streammatch.matchers import MATCHERS
from streammatch.query import QueryError, load_query
from streammatch.stream import (
    SnapshotGenerator,
    StreamConfig,
    StreamError,
    StreamType,
    load_events,
    parse_span,
)
from streammatch.verify import verify_stream

log = logging.getLogger("streammatch")


def _stream_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--query", required=True, type=Path, help="query graph file")
    p.add_argument("--stream", required=True, type=Path, help="edge stream file")
    p.add_argument("--vertex-labels", type=Path, help="file of 'vertex label' lines (default label 0)")
    p.add_argument(
        "--stream-type",
        choices=[t.value for t in StreamType],
        default=StreamType.INSERT_ONLY.value,
    )
    p.add_argument("--window", help="window for sliding streams: N events or N[s|m|h|d]")
    p.add_argument("--stride", help="stride for sliding streams (defaults to the window)")
    p.add_argument("--batch-size", type=int, default=16000)
    p.add_argument("--initial-load", type=int, default=0, help="edges loaded before matching starts")
    p.add_argument("--matcher", choices=sorted(MATCHERS), default="iso")
    p.add_argument("--threads", type=int, default=1, help="enumeration worker processes")


def _config(args: argparse.Namespace) -> StreamConfig:
    return StreamConfig(
        StreamType(args.stream_type),
        parse_span(args.window) if args.window else None,
        parse_span(args.stride) if args.stride else None,
        args.batch_size,
        args.initial_load,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streammatch", description="Continuous subgraph matching over edge streams.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="stream updates and log new and removed embeddings")
    _stream_args(run)
    run.add_argument("--in-memory-window", type=int, help="keep only this many newest edges hot; spill the rest")
    run.add_argument("--spill-dir", type=Path, help="directory for spilled segments")
    run.add_argument("--reset-every", type=int, default=0, help="discard and rebuild the index every N snapshots")
    run.add_argument("--out", type=Path, help="embedding log (default stdout)")
    run.add_argument("--stats", type=Path, help="per-snapshot statistics, one JSON object per line")
    run.add_argument("--plot-data", type=Path, help="CSV series: traversals per update, placeholders, timing")
    run.add_argument("--print-vertices", action="store_true", help="append the vertex map to each log line")
    run.add_argument("--no-recycle", action="store_true", help="never reuse deleted edge ids")

    ver = sub.add_parser("verify", help="check engine deltas against brute force on every snapshot")
    _stream_args(ver)

    gen = sub.add_parser("gen", help="write a synthetic stream")
    gen.add_argument("kind", choices=["powerlaw", "uniform", "churn"])
    gen.add_argument("--vertices", type=int, default=1000)
    gen.add_argument("--edges", type=int, default=10000, help="events (initial edges for churn)")
    gen.add_argument("--exponent", type=float, default=2.5)
    gen.add_argument("--num-vertex-labels", type=int, default=4)
    gen.add_argument("--num-edge-labels", type=int, default=2)
    gen.add_argument("--delete-ratio", type=float, default=0.1)
    gen.add_argument("--strides", type=int, default=90)
    gen.add_argument("--per-stride", type=int, default=100)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--labels-out", type=Path, help="also write vertex labels here")
    return parser


def _labels(args: argparse.Namespace) -> dict[int, int] | None:
    return generators.read_vertex_labels(args.vertex_labels) if args.vertex_labels else None


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.threads < 1:
        raise EngineError("--threads must be at least 1")
    spill = None
    if args.in_memory_window is not None or args.spill_dir is not None:
        if args.in_memory_window is None or args.spill_dir is None:
            raise EngineError("--in-memory-window and --spill-dir go together")
        if cfg.stream_type is StreamType.SLIDING_WINDOW:
            raise EngineError("spilling is only supported for insert-only and insert-delete streams")
        spill = SpillConfig(args.in_memory_window, args.spill_dir)
    query = load_query(args.query)
    labels = _labels(args)
    engine = Engine(
        query,
        args.matcher,
        vertex_labels=labels,
        workers=args.threads,
        recycle=not args.no_recycle,
        spill=spill,
        reset_every=args.reset_every,
        keep_history=False,
    )
    if labels:
        engine.declare_vertices(sorted(labels))
    events = load_events(args.stream)
    with ExitStack() as stack:
        out = stack.enter_context(open(args.out, "w")) if args.out else sys.stdout
        stats = stack.enter_context(open(args.stats, "w")) if args.stats else None
        plot = None
        if args.plot_data:
            plot = csv.writer(stack.enter_context(open(args.plot_data, "w", newline="")))
            plot.writerow(
                ["epoch", "inserts", "deletes", "traversals", "traversals_per_update", "placeholders",
                 "live_edges", "workers", "enumerate_seconds", "wall_seconds"]
            )
        for snap in SnapshotGenerator(cfg, events):
            for emb in engine.process(snap):
                out.write(engine.format(emb, vertices=args.print_vertices) + "\n")
            st = engine.last_stats
            if stats is not None:
                stats.write(json.dumps(st.as_dict()) + "\n")
            if plot is not None:
                updates = st.inserts + st.deletes
                plot.writerow(
                    [st.epoch, st.inserts, st.deletes, st.traversals,
                     f"{st.traversals / updates:.4f}" if updates else "0",
                     st.placeholders, st.live_edges, st.workers,
                     f"{st.enumerate_seconds:.6f}", f"{st.wall_seconds:.6f}"]
                )
            if engine.relation is not None and args.matcher == "dualsim":
                sizes = " ".join(str(len(s)) for s in engine.relation.sets)
                out.write(f"= {snap.epoch} {sizes}\n")
    engine.close()
    t = engine.totals
    print(
        f"snapshots={t.snapshots} inserts={t.inserts} deletes={t.deletes} "
        f"positive={t.positive} negative={t.negative} traversals={t.traversals}",
        file=sys.stderr,
    )
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    report = verify_stream(
        load_query(args.query),
        load_events(args.stream),
        _config(args),
        args.matcher,
        vertex_labels=_labels(args),
        workers=args.threads,
    )
    for line in report.mismatches:
        print(line)
    status = "PASS" if report.ok else "FAIL"
    print(f"{status} snapshots={report.snapshots} positive={report.positive} negative={report.negative} "
          f"duplicates={report.duplicates}")
    return 0 if report.ok else 1


def cmd_gen(args: argparse.Namespace) -> int:
    common = dict(vertex_labels=args.num_vertex_labels, edge_labels=args.num_edge_labels, seed=args.seed)
    if args.kind == "powerlaw":
        g = generators.powerlaw(args.vertices, args.edges, exponent=args.exponent, **common)
    elif args.kind == "uniform":
        g = generators.uniform(args.vertices, args.edges, delete_ratio=args.delete_ratio, **common)
    else:
        g = generators.churn(args.vertices, args.edges, args.strides, args.per_stride, **common)
    g.write(args.out, args.labels_out)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"run": cmd_run, "verify": cmd_verify, "gen": cmd_gen}
    try:
        return handlers[args.command](args)
    except (StreamError, QueryError, ValueError) as exc:
        parser.error(str(exc))
    except (EngineError, GraphError, ColdStoreError, OSError) as exc:
        print(f"streammatch: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
