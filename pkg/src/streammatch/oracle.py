"""Exhaustive from-scratch matcher used as ground truth.

Works on a plain snapshot (a list of edge tuples plus vertex labels) and
shares nothing with the engine except the edge matcher.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

from streammatch.graph import EdgeRecord
from streammatch.matchers import EdgeMatcher, iso_edge_matcher
from streammatch.query import QueryGraph

MAX_ORACLE_EDGES = 100_000

Semantics = Literal["iso", "homo", "tciso", "dualsim"]


class OracleRefused(RuntimeError):
    pass


@dataclass(frozen=True)
class GraphSnapshot:
    vertex_labels: tuple[int, ...]
    edges: tuple[EdgeRecord, ...]

    @classmethod
    def of(cls, vertex_labels: Sequence[int], edges: Iterable[EdgeRecord]) -> GraphSnapshot:
        return cls(
            tuple(vertex_labels),
            tuple(EdgeRecord(e.id, e.src, e.dst, e.label, e.timestamp) for e in edges),
        )


def brute_force(
    snap: GraphSnapshot,
    query: QueryGraph,
    semantics: Semantics = "iso",
    edge_matcher: EdgeMatcher = iso_edge_matcher,
) -> set[tuple[int, ...]] | list[set[int]]:
    """All edge maps (tuples indexed by query edge) or, for dualsim, node sets."""
    if len(snap.edges) > MAX_ORACLE_EDGES:
        raise OracleRefused(f"snapshot has {len(snap.edges)} edges; the oracle stops at {MAX_ORACLE_EDGES}")
    if semantics == "dualsim":
        return _dual_sim(snap, query, edge_matcher)
    if semantics == "tciso" and not query.has_timestamps:
        raise ValueError("time-constrained matching needs timestamps on every query edge")
    labels = snap.vertex_labels
    ql = query.labels
    qedges = query.edges
    # candidate data edges for each query edge
    cands = [
        [e for e in snap.edges if edge_matcher(e, labels[e.src], labels[e.dst], qe, ql[qe.src], ql[qe.dst])]
        for qe in qedges
    ]
    # bind edges in a connected order, most selective first
    order: list[int] = []
    bound: set[int] = set()
    remaining = set(range(len(qedges)))
    while remaining:
        touching = [i for i in remaining if not order or qedges[i].src in bound or qedges[i].dst in bound]
        i = min(touching, key=lambda k: (len(cands[k]), k))
        order.append(i)
        remaining.discard(i)
        bound.update((qedges[i].src, qedges[i].dst))

    injective = semantics in ("iso", "tciso")
    temporal = semantics == "tciso"
    emap: list[EdgeRecord | None] = [None] * len(qedges)
    vmap: dict[int, int] = {}
    found: set[tuple[int, ...]] = set()

    def consistent(i: int, e: EdgeRecord) -> bool:
        if temporal:
            ti = qedges[i].timestamp
            for j, f in enumerate(emap):
                if f is None:
                    continue
                tj = qedges[j].timestamp
                if ti < tj and not e.timestamp < f.timestamp:
                    return False
                if tj < ti and not f.timestamp < e.timestamp:
                    return False
        return True

    def go(k: int) -> None:
        if k == len(order):
            found.add(tuple(f.id for f in emap))  # type: ignore[union-attr]
            return
        i = order[k]
        qe = qedges[i]
        for e in cands[i]:
            if injective and any(f is not None and f.id == e.id for f in emap):
                continue
            added = []
            ok = True
            for qn, v in ((qe.src, e.src), (qe.dst, e.dst)):
                if qn in vmap:
                    if vmap[qn] != v:
                        ok = False
                        break
                else:
                    if injective and v in vmap.values():
                        ok = False
                        break
                    vmap[qn] = v
                    added.append(qn)
            if ok and consistent(i, e):
                emap[i] = e
                go(k + 1)
                emap[i] = None
            for qn in added:
                del vmap[qn]

    go(0)
    return found


def _dual_sim(snap: GraphSnapshot, query: QueryGraph, edge_matcher: EdgeMatcher) -> list[set[int]]:
    labels = snap.vertex_labels
    ql = query.labels
    sim = [{v for v in range(len(labels)) if labels[v] == ql[u]} for u in range(query.num_nodes)]
    changed = True
    while changed:
        changed = False
        for qe in query.edges:
            fwd = set()
            bwd = set()
            for e in snap.edges:
                if e.src in sim[qe.src] and e.dst in sim[qe.dst] and edge_matcher(
                    e, labels[e.src], labels[e.dst], qe, ql[qe.src], ql[qe.dst]
                ):
                    fwd.add(e.src)
                    bwd.add(e.dst)
            if sim[qe.src] - fwd or sim[qe.dst] - bwd:
                sim[qe.src] &= fwd
                sim[qe.dst] &= bwd
                changed = True
    return sim


def delta(before: set, after: set) -> tuple[set, set]:
    """(added, removed)."""
    return after - before, before - after
