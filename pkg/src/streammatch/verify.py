"""Replay a stream through the engine and check every snapshot against the oracle."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from streammatch.debi import DebiTable
from streammatch.engine import Engine
from streammatch.filter import IndexMaintainer
from streammatch.oracle import GraphSnapshot, brute_force, delta
from streammatch.query import QueryGraph, QueryPlan
from streammatch.stream import SnapshotGenerator, StreamConfig, StreamEvent


@dataclass
class VerifyReport:
    snapshots: int = 0
    mismatches: list[str] = field(default_factory=list)
    duplicates: int = 0
    index_mismatches: int = 0
    positive: int = 0
    negative: int = 0

    @property
    def ok(self) -> bool:
        return not self.mismatches and not self.duplicates and not self.index_mismatches


def snapshot_of(engine: Engine) -> GraphSnapshot:
    return GraphSnapshot.of(engine.graph.vertex_labels, engine.graph.live_edges())


def recomputed_index(engine: Engine) -> DebiTable:
    """A fresh index for the engine's current graph, built from scratch."""
    fresh = DebiTable(engine.plan.node_of_bit, engine.plan.root, engine.query.num_nodes)
    IndexMaintainer(engine.plan, engine.graph, fresh, engine.matcher).rebuild()
    return fresh


def index_equal(engine: Engine, other: DebiTable) -> bool:
    live = [e.id for e in engine.graph.live_edges()]
    mine = engine.debi
    if any(mine.row(eid) != other.row(eid) for eid in live):
        return False
    return mine.root_set_members() == other.root_set_members()


def verify_stream(
    query: QueryGraph,
    events: Iterable[StreamEvent],
    config: StreamConfig,
    matcher: str = "iso",
    *,
    vertex_labels: Mapping[int, int] | None = None,
    plan: QueryPlan | None = None,
    check_index: bool = True,
    workers: int = 1,
) -> VerifyReport:
    engine = Engine(query, matcher, vertex_labels=vertex_labels, plan=plan, workers=workers, keep_history=False)
    if vertex_labels:
        engine.declare_vertices(sorted(vertex_labels))
    report = VerifyReport()
    sem = engine.matcher.name
    current: set | None = None
    for snap in SnapshotGenerator(config, events):
        out = engine.process(snap)
        report.snapshots += 1
        if check_index and not index_equal(engine, recomputed_index(engine)):
            report.index_mismatches += 1
            report.mismatches.append(f"epoch {snap.epoch}: incremental index differs from recomputation")
        found = brute_force(snapshot_of(engine), query, sem, engine.matcher.edge_matcher)  # type: ignore[arg-type]
        if sem == "dualsim":
            assert engine.relation is not None
            if [set(s) for s in engine.relation.sets] != found:
                report.mismatches.append(f"epoch {snap.epoch}: simulation sets differ")
            continue
        assert isinstance(found, set)
        if current is None:
            # first snapshot: without an initial load its delta is the whole result
            current = set() if not snap.initial else found
            if snap.initial:
                continue
        pos = [e.edge_map for e in out if e.sign > 0]
        neg = [e.edge_map for e in out if e.sign < 0]
        report.positive += len(pos)
        report.negative += len(neg)
        report.duplicates += (len(pos) - len(set(pos))) + (len(neg) - len(set(neg)))
        net = Counter(pos)
        net.subtract(neg)
        added = {k for k, c in net.items() if c > 0}
        removed = {k for k, c in net.items() if c < 0}
        want_added, want_removed = delta(current, found)
        if added != want_added or removed != want_removed:
            report.mismatches.append(
                f"epoch {snap.epoch}: engine +{len(added)}/-{len(removed)}, "
                f"oracle +{len(want_added)}/-{len(want_removed)}"
            )
        current = found
    engine.close()
    return report
