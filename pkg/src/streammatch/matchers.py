"""Pluggable matching semantics.

A semantics is two functions.  The edge matcher decides whether a data
edge can stand in for a query edge; it controls what lands in the index.
The enumerator walks a work unit's matching order, pulling candidates
through the engine operations and pushing finished embeddings to a sink.

Built-ins: subgraph isomorphism, homomorphism, dual simulation and
time-constrained isomorphism.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Protocol

from streammatch.graph import EdgeRecord
from streammatch.query import QueryEdge

if TYPE_CHECKING:
    from streammatch.debi import DebiTable
    from streammatch.enumeration import EnumerationContext, WorkUnit
    from streammatch.graph import DynamicGraph
    from streammatch.query import QueryPlan

EdgeMatcher = Callable[[EdgeRecord, int, int, QueryEdge, int, int], bool]
Sink = Callable[[tuple[int, ...], tuple[int, ...]], None]


class Enumerator(Protocol):
    def __call__(self, unit: WorkUnit, ops: EnumerationContext, sink: Sink) -> None: ...


def iso_edge_matcher(
    e: EdgeRecord, src_label: int, dst_label: int, qe: QueryEdge, qsrc_label: int, qdst_label: int
) -> bool:
    """Edge label (wildcard passes) and both endpoint labels must agree."""
    return (qe.label is None or qe.label == e.label) and src_label == qsrc_label and dst_label == qdst_label


def _backtrack(unit: WorkUnit, ops: EnumerationContext, sink: Sink, *, injective: bool, temporal: bool) -> None:
    state = ops.initial_state(unit, injective=injective)
    if state is None:
        return
    if temporal and not ops.temporal_ok_all(state):
        return
    steps = ops.steps(unit)
    n = len(steps)
    emap, vmap = state.emap, state.vmap
    used_v, used_e = state.used_vertices, state.used_edges

    def extend(k: int) -> None:
        if k == n:
            sink(tuple(emap), tuple(vmap))
            return
        step = steps[k]
        q = step.q
        if emap[q] >= 0:
            extend(k + 1)
            return
        new = step.new_node
        if step.is_tree:
            cands = ops.get_candidates(step, state)
        else:
            cands = ops.verify_nte(step, state)
        for e in cands:
            eid = e.id
            if injective and eid in used_e:
                continue
            if new >= 0:
                v = e.dst if step.new_is_dst else e.src
                # distinct data vertex per query node
                if injective and v in used_v:
                    continue
                vmap[new] = v
            if temporal and not ops.temporal_ok(q, e, state):
                if new >= 0:
                    vmap[new] = -1
                continue
            emap[q] = eid
            state.ts[q] = e.timestamp
            if injective:
                used_e.add(eid)
                if new >= 0:
                    used_v.add(vmap[new])
            extend(k + 1)
            if injective:
                used_e.discard(eid)
                if new >= 0:
                    used_v.discard(vmap[new])
            emap[q] = -1
            if new >= 0:
                vmap[new] = -1

    extend(0)


def iso_enumerator(unit: WorkUnit, ops: EnumerationContext, sink: Sink) -> None:
    _backtrack(unit, ops, sink, injective=True, temporal=False)


def homo_enumerator(unit: WorkUnit, ops: EnumerationContext, sink: Sink) -> None:
    """Isomorphism without the injectivity checks; a data edge may serve several query edges."""
    _backtrack(unit, ops, sink, injective=False, temporal=False)


def tc_iso_enumerator(unit: WorkUnit, ops: EnumerationContext, sink: Sink) -> None:
    _backtrack(unit, ops, sink, injective=True, temporal=True)


def null_enumerator(unit: WorkUnit, ops: EnumerationContext, sink: Sink) -> None:
    """Dual simulation reports a relation per batch instead of embeddings."""


@dataclass(frozen=True)
class MatcherSpec:
    name: str
    edge_matcher: EdgeMatcher
    enumerator: Enumerator
    # counting (injective) or presence-only label filters during index maintenance
    injective: bool = True
    requires_timestamps: bool = False
    temporal_cmp: Callable[[int, int], bool] = field(default=operator.lt)
    emits_relation: bool = False


ISO = MatcherSpec("iso", iso_edge_matcher, iso_enumerator)
HOMO = MatcherSpec("homo", iso_edge_matcher, homo_enumerator, injective=False)
TCISO = MatcherSpec("tciso", iso_edge_matcher, tc_iso_enumerator, requires_timestamps=True)
DUALSIM = MatcherSpec("dualsim", iso_edge_matcher, null_enumerator, injective=False, emits_relation=True)

MATCHERS: dict[str, MatcherSpec] = {m.name: m for m in (ISO, HOMO, TCISO, DUALSIM)}


def get_matcher(name: str) -> MatcherSpec:
    try:
        return MATCHERS[name]
    except KeyError:
        raise ValueError(f"unknown matcher {name!r}; choose from {sorted(MATCHERS)}") from None


# -- dual simulation ----------------------------------------------------------


@dataclass
class SimulationRelation:
    sets: list[set[int]]

    def edge_relation(
        self, plan: QueryPlan, graph: DynamicGraph, edge_matcher: EdgeMatcher = iso_edge_matcher
    ) -> dict[int, set[int]]:
        """Per query edge, the data edges joining two simulating vertices."""
        q = plan.query
        labels = graph.vertex_labels
        out: dict[int, set[int]] = {}
        for i, qe in enumerate(q.edges):
            ok = set()
            for x in self.sets[qe.src]:
                for e in graph.adjacency(x, "out"):
                    if e.dst in self.sets[qe.dst] and edge_matcher(
                        e, labels[e.src], labels[e.dst], qe, q.labels[qe.src], q.labels[qe.dst]
                    ):
                        ok.add(e.id)
            out[i] = ok
        return out

    def is_empty(self) -> bool:
        return any(not s for s in self.sets)


def dual_simulation(
    plan: QueryPlan,
    graph: DynamicGraph,
    debi: DebiTable,
    edge_matcher: EdgeMatcher = iso_edge_matcher,
    *,
    order: list[int] | None = None,
) -> SimulationRelation:
    """Greatest dual simulation, seeded from the index's per-node candidates.

    ``order`` permutes the query-edge sweep; the fixpoint does not depend on it.
    """
    q = plan.query
    labels = graph.vertex_labels
    sets: list[set[int]] = [set() for _ in range(q.num_nodes)]
    sets[plan.root] = set(debi.root_set_members())
    for u in range(q.num_nodes):
        if u == plan.root:
            continue
        bit = plan.bit[u]
        side_dst = plan.forward[u]
        for v in range(graph.num_vertices):
            # u-side endpoint of a tree edge into u is dst when the edge points at u
            for e in graph.adjacency(v, "in" if side_dst else "out"):
                if debi.test(e.id, bit):
                    sets[u].add(v)
                    break

    qedges = list(range(q.num_edges)) if order is None else list(order)

    def supported(qi: int, v: int, forward: bool) -> bool:
        qe = q.edges[qi]
        qs, qd = q.labels[qe.src], q.labels[qe.dst]
        if forward:
            target = sets[qe.dst]
            for e in graph.adjacency(v, "out"):
                if e.dst in target and edge_matcher(e, labels[e.src], labels[e.dst], qe, qs, qd):
                    return True
        else:
            target = sets[qe.src]
            for e in graph.adjacency(v, "in"):
                if e.src in target and edge_matcher(e, labels[e.src], labels[e.dst], qe, qs, qd):
                    return True
        return False

    changed = True
    while changed:
        changed = False
        for qi in qedges:
            qe = q.edges[qi]
            drop = [v for v in sets[qe.src] if not supported(qi, v, True)]
            if drop:
                sets[qe.src].difference_update(drop)
                changed = True
            drop = [v for v in sets[qe.dst] if not supported(qi, v, False)]
            if drop:
                sets[qe.dst].difference_update(drop)
                changed = True
    return SimulationRelation(sets)
