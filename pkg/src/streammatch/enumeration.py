"""Duplicate-free enumeration of the embeddings a batch creates or destroys.

A batch is split into work units, one per (batch edge, query edge) pair
the edge can play.  Each unit carries the matching order for its start
edge and that start edge's mask: query edges that come earlier in the
canonical order may not bind edges of the current batch.  An embedding
touching k batch edges is therefore produced only by the unit that starts
at the smallest canonical position among them, so no post-hoc dedup pass
is needed.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import os
from dataclasses import dataclass, field
from itertools import combinations
from typing import TYPE_CHECKING, Sequence

from streammatch.graph import EdgeRecord

if TYPE_CHECKING:
    from streammatch.debi import DebiTable
    from streammatch.graph import DynamicGraph
    from streammatch.matchers import Enumerator, MatcherSpec
    from streammatch.query import MaskRow, MatchingOrder, QueryPlan

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Embedding:
    sign: int
    epoch: int
    edge_map: tuple[int, ...]
    vertex_map: tuple[int, ...] = ()

    def log_line(self, names: Sequence[int] | None = None) -> str:
        head = f"{'+' if self.sign > 0 else '-'} {self.epoch} "
        body = " ".join(f"{q}:{e}" for q, e in enumerate(self.edge_map))
        if names is not None and self.vertex_map:
            body += " | " + " ".join(f"{u}={names[v]}" for u, v in enumerate(self.vertex_map))
        return head + body


@dataclass(slots=True)
class Step:
    q: int
    src: int
    dst: int
    kind: str  # "src": scan from bound src, "dst": scan into bound dst, "both": close
    is_tree: bool
    bit: int
    blocked: bool
    new_node: int
    new_is_dst: bool
    check_root: bool


@dataclass(frozen=True)
class WorkUnit:
    start: int
    bindings: tuple[tuple[int, EdgeRecord], ...]
    order: MatchingOrder
    mask: MaskRow
    sign: int = 1


@dataclass
class PartialEmbedding:
    emap: list[int]
    vmap: list[int]
    ts: list[int]
    used_vertices: set[int] = field(default_factory=set)
    used_edges: set[int] = field(default_factory=set)


class CompiledPlan:
    """Per-start-edge step lists derived once from a query plan."""

    def __init__(self, plan: QueryPlan) -> None:
        self.plan = plan
        q = plan.query
        self.steps: dict[int, list[Step]] = {}
        for start in plan.canonical_order:
            order = plan.matching_order(start)
            blocked = plan.mask_for(start).blocked
            bound: set[int] = set()
            steps = []
            for i, qi in enumerate(order.sequence):
                qe = q.edges[qi]
                s, d = qe.src, qe.dst
                tree = plan.is_tree_edge(qi)
                bit = plan.bit[plan.child_of(qi)] if tree else -1
                if i == 0 or (s in bound and d in bound):
                    kind, new, new_is_dst = "both", -1, False
                elif s in bound:
                    kind, new, new_is_dst = "src", d, True
                elif d in bound:
                    kind, new, new_is_dst = "dst", s, False
                else:
                    raise AssertionError("matching order prefix is not connected")
                steps.append(
                    Step(
                        qi,
                        s,
                        d,
                        kind,
                        tree,
                        bit,
                        plan.canonical_index[qi] in blocked,
                        new,
                        new_is_dst,
                        new == plan.root,
                    )
                )
                bound.update((s, d))
            self.steps[start] = steps

        # temporal constraints: for each query edge, (other edge, this-before-other?)
        self.temporal: list[list[tuple[int, bool]]] = [[] for _ in q.edges]
        if q.has_timestamps:
            for a, b in combinations(range(q.num_edges), 2):
                ta, tb = q.edges[a].timestamp, q.edges[b].timestamp
                if ta == tb:
                    continue
                self.temporal[a].append((b, ta < tb))
                self.temporal[b].append((a, tb < ta))


class EnumerationContext:
    """Read-only engine operations handed to enumerators."""

    def __init__(
        self,
        plan: QueryPlan,
        compiled: CompiledPlan,
        graph: DynamicGraph,
        debi: DebiTable,
        matcher: MatcherSpec,
        marks: set[int],
    ) -> None:
        self.plan = plan
        self.compiled = compiled
        self.graph = graph
        self.debi = debi
        self.matcher = matcher
        self.marks = marks
        self.errors = 0
        q = plan.query
        self._qlabels = q.labels
        self._qedges = q.edges

    def steps(self, unit: WorkUnit) -> list[Step]:
        return self.compiled.steps[unit.start]

    def initial_state(self, unit: WorkUnit, *, injective: bool) -> PartialEmbedding | None:
        nq = len(self._qedges)
        st = PartialEmbedding([-1] * nq, [-1] * len(self._qlabels), [0] * nq)
        for qi, e in unit.bindings:
            qe = self._qedges[qi]
            for node, v in ((qe.src, e.src), (qe.dst, e.dst)):
                cur = st.vmap[node]
                if cur >= 0 and cur != v:
                    return None
                st.vmap[node] = v
            if injective and e.id in st.used_edges:
                return None
            st.emap[qi] = e.id
            st.ts[qi] = e.timestamp
            st.used_edges.add(e.id)
        bound = [v for v in st.vmap if v >= 0]
        if injective and len(bound) != len(set(bound)):
            return None
        root_v = st.vmap[self.plan.root]
        if root_v >= 0 and not self.debi.root_test(root_v):
            return None
        st.used_vertices = set(bound)
        if not injective:
            st.used_edges = set()
        return st

    def get_candidates(self, step: Step, state: PartialEmbedding) -> list[EdgeRecord]:
        """Edges adjacent to the bound side whose index bit for the step's child is set."""
        g, debi = self.graph, self.debi
        rb = debi.row_bytes
        rows = debi._rows
        byte, shift = step.bit >> 3, step.bit & 7
        blocked = step.blocked
        marks = self.marks
        vmap = state.vmap
        out = []
        kind = step.kind
        if kind == "src":
            adj = g.adjacency(vmap[step.src], "out")
        elif kind == "dst":
            adj = g.adjacency(vmap[step.dst], "in")
        else:
            adj = self._closing(step, vmap)
        check_root = step.check_root
        new_is_dst = step.new_is_dst
        for e in adj:
            eid = e.id
            if not (rows[eid * rb + byte] >> shift) & 1:
                continue
            if blocked and eid in marks:
                continue
            if check_root and not debi.root_test(e.dst if new_is_dst else e.src):
                continue
            out.append(e)
        return out

    def verify_nte(self, step: Step, state: PartialEmbedding) -> list[EdgeRecord]:
        """Data edges realising a non-tree query edge between two bound nodes.

        Every parallel match is returned; each yields a distinct embedding.
        """
        labels = self.graph.vertex_labels
        qe = self._qedges[step.q]
        ql = self._qlabels
        qs, qd = ql[qe.src], ql[qe.dst]
        match = self.matcher.edge_matcher
        blocked = step.blocked
        marks = self.marks
        out = []
        for e in self._closing(step, state.vmap):
            if blocked and e.id in marks:
                continue
            if match(e, labels[e.src], labels[e.dst], qe, qs, qd):
                out.append(e)
        return out

    def _closing(self, step: Step, vmap: list[int]) -> list[EdgeRecord]:
        g = self.graph
        va, vb = vmap[step.src], vmap[step.dst]
        if g.out_degree[va] <= g.in_degree[vb]:
            return [e for e in g.adjacency(va, "out") if e.dst == vb]
        return [e for e in g.adjacency(vb, "in") if e.src == va]

    def temporal_ok(self, q: int, e: EdgeRecord, state: PartialEmbedding) -> bool:
        cmp = self.matcher.temporal_cmp
        emap, ts = state.emap, state.ts
        t = e.timestamp
        for other, before in self.compiled.temporal[q]:
            if emap[other] < 0:
                continue
            if before:
                if not cmp(t, ts[other]):
                    return False
            elif not cmp(ts[other], t):
                return False
        return True

    def temporal_ok_all(self, state: PartialEmbedding) -> bool:
        cmp = self.matcher.temporal_cmp
        for q, cons in enumerate(self.compiled.temporal):
            if state.emap[q] < 0:
                continue
            for other, before in cons:
                if state.emap[other] < 0:
                    continue
                if before and not cmp(state.ts[q], state.ts[other]):
                    return False
        return True


def decompose(batch: Sequence[EdgeRecord], ctx: EnumerationContext, sign: int = 1) -> list[WorkUnit]:
    """One unit per (batch edge, query edge it matches).

    Tree edges need the index bit; a batch edge matching a non-tree edge is
    expanded into one unit per combination of already matched parent tree
    edges at its endpoints.
    """
    plan, debi = ctx.plan, ctx.debi
    q = plan.query
    labels = ctx.graph.vertex_labels
    match = ctx.matcher.edge_matcher
    units: list[WorkUnit] = []
    for b in batch:
        for qi in plan.tree_edges:
            u = plan.child_of(qi)
            if debi.test(b.id, plan.bit[u]):
                units.append(WorkUnit(qi, ((qi, b),), plan.matching_order(qi), plan.mask_for(qi), sign))
        for qi in plan.non_tree_edges:
            qe = q.edges[qi]
            if qe.src == qe.dst and b.src != b.dst:
                continue
            if not match(b, labels[b.src], labels[b.dst], qe, q.labels[qe.src], q.labels[qe.dst]):
                continue
            units.extend(_nte_units(qi, b, ctx, sign))
    return units


def _nte_units(qi: int, b: EdgeRecord, ctx: EnumerationContext, sign: int) -> list[WorkUnit]:
    plan = ctx.plan
    qe = plan.query.edges[qi]
    parents = []
    for node in (qe.dst, qe.src):
        if node != plan.root:
            pe = plan.parent_edge[node]
            if pe not in parents:
                parents.append(pe)
    order, mask = plan.matching_order(qi), plan.mask_for(qi)
    steps = {s.q: s for s in ctx.compiled.steps[qi]}
    nq = plan.query.num_edges
    state = PartialEmbedding([-1] * nq, [-1] * plan.num_nodes, [0] * nq)
    state.vmap[qe.src] = b.src
    state.vmap[qe.dst] = b.dst
    state.emap[qi] = b.id
    units: list[WorkUnit] = []
    chosen: list[tuple[int, EdgeRecord]] = [(qi, b)]

    def expand(i: int) -> None:
        if i == len(parents):
            units.append(WorkUnit(qi, tuple(chosen), order, mask, sign))
            return
        step = steps[parents[i]]
        for e in ctx.get_candidates(step, state):
            new = step.new_node
            if new >= 0:
                state.vmap[new] = e.dst if step.new_is_dst else e.src
            chosen.append((step.q, e))
            expand(i + 1)
            chosen.pop()
            if new >= 0:
                state.vmap[new] = -1

    expand(0)
    return units


# -- execution -----------------------------------------------------------------

_WORK: tuple[EnumerationContext, Enumerator, list[WorkUnit]] | None = None


def _run_unit(i: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    assert _WORK is not None
    ctx, enumerator, units = _WORK
    found: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    try:
        enumerator(units[i], ctx, lambda em, vm: found.append((em, vm)))
    except Exception:  # a faulty plugin aborts only its own unit
        log.exception("enumerator failed on unit %d", i)
        return [((-1,), ())]
    return found


def enumerate_all(
    units: list[WorkUnit],
    ctx: EnumerationContext,
    enumerator: Enumerator,
    *,
    workers: int = 1,
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Run every unit and concatenate results in unit order.

    With ``workers > 1`` units are pulled one chunk at a time by forked
    processes that share the graph and index copy-on-write.
    """
    global _WORK
    if not units:
        return []
    _WORK = (ctx, enumerator, units)
    try:
        if workers <= 1 or len(units) == 1 or "fork" not in mp.get_all_start_methods():
            parts = [_run_unit(i) for i in range(len(units))]
        else:
            chunk = max(1, len(units) // (workers * 32))
            with mp.get_context("fork").Pool(workers) as pool:
                parts = list(pool.imap(_run_unit, range(len(units)), chunksize=chunk))
    finally:
        _WORK = None
    out = []
    for part in parts:
        if part and part[0][0] == (-1,):
            ctx.errors += 1
            continue
        out.extend(part)
    return out


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
