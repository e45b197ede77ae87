"""The per-snapshot driver: apply updates, maintain the index, enumerate."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

from streammatch.coldstore import ColdStore, SpillConfig
from streammatch.debi import DebiTable
from streammatch.enumeration import (
    CompiledPlan,
    Embedding,
    EnumerationContext,
    decompose,
    enumerate_all,
)
from streammatch.filter import IndexMaintainer
from streammatch.graph import DynamicGraph, EdgeRecord
from streammatch.matchers import MatcherSpec, SimulationRelation, dual_simulation, get_matcher
from streammatch.query import QueryGraph, QueryPlan, build_plan
from streammatch.stream import Snapshot


class EngineError(RuntimeError):
    pass


@dataclass
class BatchStats:
    epoch: int
    inserts: int = 0
    deletes: int = 0
    traversals: int = 0
    bits_set: int = 0
    bits_cleared: int = 0
    frontier: int = 0
    units: int = 0
    positive: int = 0
    negative: int = 0
    enumerator_errors: int = 0
    filter_seconds: float = 0.0
    enumerate_seconds: float = 0.0
    wall_seconds: float = 0.0
    workers: int = 1
    live_edges: int = 0
    placeholders: int = 0
    pooled_ids: int = 0
    cold_edges: int = 0
    index_bytes: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class EngineTotals:
    snapshots: int = 0
    inserts: int = 0
    deletes: int = 0
    positive: int = 0
    negative: int = 0
    traversals: int = 0
    history: list[BatchStats] = field(default_factory=list)


class Engine:
    """Continuous matcher for one query over one evolving graph.

    Raw vertex ids from the stream are mapped to dense ids on first sight;
    ``vertex_labels`` maps raw ids to labels (unlisted vertices get 0).
    """

    def __init__(
        self,
        query: QueryGraph,
        matcher: MatcherSpec | str = "iso",
        *,
        vertex_labels: Mapping[int, int] | None = None,
        plan: QueryPlan | None = None,
        workers: int = 1,
        recycle: bool = True,
        spill: SpillConfig | None = None,
        reset_every: int = 0,
        keep_history: bool = True,
        sink: Callable[[Embedding], None] | None = None,
        emit: bool = True,
    ) -> None:
        self.matcher = get_matcher(matcher) if isinstance(matcher, str) else matcher
        if self.matcher.requires_timestamps and not query.has_timestamps:
            raise EngineError(f"matcher {self.matcher.name} needs a timestamp on every query edge")
        self.query = query
        self.raw_labels = dict(vertex_labels or {})
        if plan is None:
            hist: dict[int, int] = {}
            for lab in self.raw_labels.values():
                hist[lab] = hist.get(lab, 0) + 1
            plan = build_plan(query, hist or None)
        self.plan = plan
        self.compiled = CompiledPlan(plan)
        self.graph = DynamicGraph(recycle=recycle)
        self.debi = DebiTable(plan.node_of_bit, plan.root, query.num_nodes)
        self.filter = IndexMaintainer(plan, self.graph, self.debi, self.matcher)
        self.workers = max(1, workers)
        self.reset_every = reset_every
        self.keep_history = keep_history
        self.sink = sink
        self.emit = emit  # False: maintain graph and index only, skip enumeration
        self.vid: dict[int, int] = {}
        self.raw_of: list[int] = []
        self.eid_of_seq: dict[int, int] = {}
        self.epoch = 0
        self.totals = EngineTotals()
        self.relation: SimulationRelation | None = None
        self.spill = spill
        self.cold: ColdStore | None = None
        if spill is not None:
            self.cold = ColdStore(Path(spill.directory), self.debi.row_bytes, buffer_capacity=spill.buffer_capacity)
            self.graph.cold = self.cold

    # -- vertices ------------------------------------------------------------

    def vertex(self, raw: int) -> int:
        v = self.vid.get(raw)
        if v is None:
            v = self.vid[raw] = self.graph.add_vertex(self.raw_labels.get(raw, 0))
            self.raw_of.append(raw)
        return v

    def declare_vertices(self, raws: Iterable[int]) -> None:
        """Create vertices up front, fixing their dense ids in the given order."""
        for r in raws:
            self.vertex(r)
        self.debi.ensure_vertices(self.graph.num_vertices)

    # -- phases --------------------------------------------------------------

    def _context(self, marks: set[int]) -> EnumerationContext:
        return EnumerationContext(self.plan, self.compiled, self.graph, self.debi, self.matcher, marks)

    def _enumerate(self, batch: list[EdgeRecord], sign: int, stats: BatchStats) -> list[Embedding]:
        if self.matcher.emits_relation or not self.emit or not batch:
            return []
        t0 = time.perf_counter()
        ctx = self._context({e.id for e in batch})
        units = decompose(batch, ctx, sign)
        found = enumerate_all(units, ctx, self.matcher.enumerator, workers=self.workers)
        found.sort()
        out = [Embedding(sign, self.epoch, em, vm) for em, vm in found]
        stats.units += len(units)
        stats.enumerator_errors += ctx.errors
        stats.enumerate_seconds += time.perf_counter() - t0
        return out

    def _insert(self, events: list, stats: BatchStats, *, enumerate_: bool) -> list[Embedding]:
        ends = [(self.vertex(ev.src), self.vertex(ev.dst)) for ev in events]
        self.debi.ensure_vertices(self.graph.num_vertices)
        t0 = time.perf_counter()
        before = self.filter.f23_snapshot({v for pair in ends for v in pair})
        batch = []
        for ev, (s, d) in zip(events, ends):
            eid = self.graph.insert_edge(s, d, ev.label, ev.timestamp)
            self.eid_of_seq[ev.seq] = eid
            rec = self.graph.edges[eid]
            assert rec is not None
            batch.append(rec)
        self.debi.ensure_slots(self.graph.num_slots)
        for e in batch:
            self.debi.clear_row(e.id)
        if enumerate_:
            self.filter.apply_inserts(batch, before)
        else:
            self.filter.rebuild()
        stats.filter_seconds += time.perf_counter() - t0
        stats.inserts += len(batch)
        return self._enumerate(batch, +1, stats) if enumerate_ else []

    def _delete(self, events: list, stats: BatchStats) -> list[Embedding]:
        ids = []
        for ev in events:
            eid = self.eid_of_seq.pop(ev.target, None)
            if eid is None:
                raise EngineError(f"delete of {ev.triplet} targets an edge the engine never saw")
            ids.append(eid)
        batch = [self.graph.edge(eid) for eid in ids]
        for e in batch:
            if self.graph.edges[e.id] is None:
                raise EngineError(f"edge {e.id} {(e.src, e.dst, e.label)} was spilled and cannot be deleted")
        out = self._enumerate(batch, -1, stats)
        t0 = time.perf_counter()
        before = self.filter.f23_snapshot({v for e in batch for v in (e.src, e.dst)})
        self.filter.seed_frontier(batch, "delete")
        rows = [self.debi.row_bits(eid) for eid in ids]
        removed = [self.graph.delete_edge(eid) for eid in ids]
        for eid in ids:
            self.debi.clear_row(eid)
        self.filter.apply_deletes(removed, rows, before)
        stats.filter_seconds += time.perf_counter() - t0
        stats.deletes += len(ids)
        return out

    def process(self, snap: Snapshot) -> list[Embedding]:
        """Apply one snapshot: inserts as one batch, then deletes as a second batch."""
        t0 = time.perf_counter()
        self.epoch = snap.epoch
        self.filter.stats.reset()
        stats = BatchStats(snap.epoch, workers=self.workers)
        out: list[Embedding] = []
        if snap.initial:
            self._insert(snap.insert_list, stats, enumerate_=False)
        elif snap.insert_list:
            out += self._insert(snap.insert_list, stats, enumerate_=True)
        if snap.delete_list:
            out += self._delete(snap.delete_list, stats)

        self.totals.snapshots += 1
        if self.reset_every and self.totals.snapshots % self.reset_every == 0:
            self.filter.rebuild()
        if self.matcher.emits_relation:
            self.relation = dual_simulation(self.plan, self.graph, self.debi, self.matcher.edge_matcher)
        if self.cold is not None and self.spill is not None:
            self.cold.evict(self.graph, self.debi, self.graph.next_seq - self.spill.in_memory_window)

        fs = self.filter.stats
        stats.traversals = fs.traversals
        stats.bits_set = fs.bits_set
        stats.bits_cleared = fs.bits_cleared
        stats.frontier = fs.frontier
        stats.positive = sum(1 for e in out if e.sign > 0)
        stats.negative = len(out) - stats.positive
        stats.live_edges = self.graph.live_count
        stats.placeholders = self.graph.num_slots
        stats.pooled_ids = self.graph.pooled_ids()
        stats.cold_edges = self.cold.size() if self.cold is not None else 0
        stats.index_bytes = self.debi.allocated_bytes
        stats.wall_seconds = time.perf_counter() - t0
        self.last_stats = stats
        t = self.totals
        t.inserts += stats.inserts
        t.deletes += stats.deletes
        t.positive += stats.positive
        t.negative += stats.negative
        t.traversals += stats.traversals
        if self.keep_history:
            t.history.append(stats)
        if self.sink is not None:
            for emb in out:
                self.sink(emb)
        return out

    def run(self, snapshots: Iterable[Snapshot]) -> list[Embedding]:
        out: list[Embedding] = []
        for snap in snapshots:
            out.extend(self.process(snap))
        return out

    def close(self) -> None:
        if self.cold is not None:
            self.cold.close()

    # -- views -----------------------------------------------------------------

    def live_edges(self) -> list[EdgeRecord]:
        return list(self.graph.live_edges())

    def format(self, emb: Embedding, *, vertices: bool = False) -> str:
        return emb.log_line(self.raw_of if vertices else None)
