"""Incremental maintenance of the edge index.

Bit ``u`` of edge ``e`` means: ``e`` matches the tree edge into ``u`` and
its label counters pass (the local test), the parent endpoint of ``e`` is
a candidate for ``u``'s parent (reachability from the root), and the
child endpoint has a supporting edge for every child of ``u`` (subtree
support).  The maintained index is the largest assignment satisfying all
three, which a full bottom-up sweep followed by a full top-down sweep
computes from scratch.  Batches update it incrementally and only touch
the region around the batch:

* inserts can only add bits.  Candidates reachable from the batch are set
  tentatively, then pruned bottom-up (support) and confirmed top-down
  (reachability).
* deletes can only remove bits.  Lost support propagates upward level by
  level, then lost reachability propagates downward.

``traversals`` counts adjacency entries examined; it is the per-batch cost
metric reported in statistics.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Literal, Sequence

if TYPE_CHECKING:
    from streammatch.debi import DebiTable
    from streammatch.graph import DynamicGraph, EdgeRecord
    from streammatch.matchers import MatcherSpec
    from streammatch.query import QueryPlan


@dataclass
class TraversalFrontier:
    """Per non-root query node, the data edges a pass still has to look at."""

    edges: dict[int, set[int]] = field(default_factory=lambda: defaultdict(set))
    roots: set[int] = field(default_factory=set)

    def is_empty(self) -> bool:
        return not self.roots and not any(self.edges.values())

    def size(self) -> int:
        return len(self.roots) + sum(len(s) for s in self.edges.values())


@dataclass
class FilterStats:
    traversals: int = 0
    bits_set: int = 0
    bits_cleared: int = 0
    frontier: int = 0

    def reset(self) -> None:
        self.traversals = self.bits_set = self.bits_cleared = self.frontier = 0


class IndexMaintainer:
    def __init__(self, plan: QueryPlan, graph: DynamicGraph, debi: DebiTable, matcher: MatcherSpec) -> None:
        self.plan = plan
        self.graph = graph
        self.debi = debi
        self.matcher = matcher
        self.stats = FilterStats()
        q = plan.query
        self.reqs = [r if matcher.injective else r.capped() for r in plan.requirements]
        self.qlabels = q.labels
        self.root = plan.root
        self.parent = plan.parent
        self.children = plan.children
        self.fw = plan.forward
        self.bit = plan.bit
        self.levels = plan.levels
        self.qedge = [q.edges[plan.parent_edge[u]] if u != plan.root else None for u in range(q.num_nodes)]

    # -- per-vertex and per-edge tests ---------------------------------------

    def f23(self, x: int, u: int) -> bool:
        """Label and counter requirements of query node ``u`` at data vertex ``x``."""
        g = self.graph
        if g.vertex_labels[x] != self.qlabels[u]:
            return False
        r = self.reqs[u]
        if g.out_degree[x] < r.out_total or g.in_degree[x] < r.in_total:
            return False
        c = g.out_label_count[x]
        for lab, n in r.out_edges:
            if c[lab] < n:
                return False
        c = g.in_label_count[x]
        for lab, n in r.in_edges:
            if c[lab] < n:
                return False
        c = g.out_nbr_label_count[x]
        for lab, n in r.out_nbrs:
            if c[lab] < n:
                return False
        c = g.in_nbr_label_count[x]
        for lab, n in r.in_nbrs:
            if c[lab] < n:
                return False
        return True

    def ends(self, e: EdgeRecord, u: int) -> tuple[int, int]:
        """(endpoint playing u, endpoint playing u's parent)."""
        return (e.dst, e.src) if self.fw[u] else (e.src, e.dst)

    def edge_ok(self, e: EdgeRecord, u: int) -> bool:
        qe = self.qedge[u]
        assert qe is not None
        labels = self.graph.vertex_labels
        return self.matcher.edge_matcher(
            e, labels[e.src], labels[e.dst], qe, self.qlabels[qe.src], self.qlabels[qe.dst]
        )

    def local(self, e: EdgeRecord, u: int, memo: dict[tuple[int, int], bool]) -> bool:
        if not self.edge_ok(e, u):
            return False
        x = e.dst if self.fw[u] else e.src
        key = (x, u)
        ok = memo.get(key)
        if ok is None:
            ok = memo[key] = self.f23(x, u)
        return ok

    def at_child_side(self, u: int, x: int) -> list[EdgeRecord]:
        """Edges whose endpoint ``x`` would play ``u`` on the tree edge into ``u``."""
        adj = self.graph.adjacency(x, "in" if self.fw[u] else "out")
        self.stats.traversals += len(adj)
        return adj

    def at_parent_side(self, c: int, x: int) -> list[EdgeRecord]:
        """Edges whose endpoint ``x`` would play the parent of ``c``."""
        adj = self.graph.adjacency(x, "out" if self.fw[c] else "in")
        self.stats.traversals += len(adj)
        return adj

    def reach(self, u: int, x: int) -> bool:
        """``x`` is currently a candidate for ``u``."""
        if u == self.root:
            return self.debi.root_test(x)
        b = self.bit[u]
        test = self.debi.test
        return any(test(e.id, b) for e in self.at_child_side(u, x))

    def support(self, u: int, x: int) -> bool:
        """Every child of ``u`` has an indexed edge leaving ``x``."""
        test = self.debi.test
        for c in self.children[u]:
            b = self.bit[c]
            if not any(test(e.id, b) for e in self.at_parent_side(c, x)):
                return False
        return True

    def _set(self, eid: int, u: int) -> None:
        self.debi.set(eid, self.bit[u])
        self.stats.bits_set += 1

    def _clear(self, eid: int, u: int) -> None:
        self.debi.clear(eid, self.bit[u])
        self.stats.bits_cleared += 1

    def _root(self, x: int, value: bool) -> None:
        self.debi.root_set(x, value)
        if value:
            self.stats.bits_set += 1
        else:
            self.stats.bits_cleared += 1

    def _ensure_capacity(self) -> None:
        self.debi.ensure_slots(self.graph.num_slots)
        self.debi.ensure_vertices(self.graph.num_vertices)

    # -- from scratch ------------------------------------------------------------

    def rebuild(self) -> None:
        """Reset and recompute the whole index: one bottom-up sweep, one top-down sweep."""
        self._ensure_capacity()
        self.debi.reset_all()
        edges = list(self.graph.live_edges())
        memo: dict[tuple[int, int], bool] = {}
        test, bit = self.debi.test, self.bit
        for level in reversed(self.levels):
            for u in level:
                sup: dict[int, bool] = {}
                for e in edges:
                    if not self.local(e, u, memo):
                        continue
                    x = e.dst if self.fw[u] else e.src
                    ok = sup.get(x)
                    if ok is None:
                        ok = sup[x] = self.support(u, x)
                    if ok:
                        self._set(e.id, u)
        for x in range(self.graph.num_vertices):
            if self.f23(x, self.root) and self.support(self.root, x):
                self._root(x, True)
        for level in self.levels:
            for u in level:
                p = self.parent[u]
                seen: dict[int, bool] = {}
                for e in edges:
                    if not test(e.id, bit[u]):
                        continue
                    y = e.src if self.fw[u] else e.dst
                    ok = seen.get(y)
                    if ok is None:
                        ok = seen[y] = self.reach(p, y)
                    if not ok:
                        self._clear(e.id, u)

    # -- frontier seeding ------------------------------------------------------

    def seed_frontier(self, batch: Sequence[EdgeRecord], mode: Literal["insert", "delete"]) -> TraversalFrontier:
        """Insert mode: batch edges that edge-match each tree edge.  Delete mode: batch edges carrying the bit."""
        fr = TraversalFrontier()
        test = self.debi.test
        for u in range(self.plan.num_nodes):
            if u == self.root:
                continue
            for e in batch:
                if mode == "insert":
                    if self.edge_ok(e, u):
                        fr.edges[u].add(e.id)
                elif test(e.id, self.bit[u]):
                    fr.edges[u].add(e.id)
        self.stats.frontier += fr.size()
        return fr

    def f23_snapshot(self, vertices: Iterable[int]) -> dict[int, list[bool]]:
        n = self.plan.num_nodes
        out = {}
        for x in vertices:
            if x < self.graph.num_vertices:
                out[x] = [self.f23(x, u) for u in range(n)]
        return out

    # -- inserts -----------------------------------------------------------------

    def apply_inserts(self, batch: Sequence[EdgeRecord], before: dict[int, list[bool]]) -> None:
        """Grow the index for edges already added to the graph.

        ``before`` holds the label-requirement results at the batch endpoints
        as they were before the edges went in.
        """
        self._ensure_capacity()
        if not batch:
            return
        fr = self.seed_frontier(batch, "insert")
        memo: dict[tuple[int, int], bool] = {}
        test = self.debi.test
        tent: dict[int, list[EdgeRecord]] = defaultdict(list)
        tent_root: list[int] = []
        queue: list[tuple[int, EdgeRecord | None, int]] = []  # (u, edge, vertex for the root)
        scanned: set[tuple[int, int, int]] = set()

        def add(e: EdgeRecord, u: int) -> None:
            self._set(e.id, u)
            tent[u].append(e)
            queue.append((u, e, -1))

        def try_root(x: int) -> None:
            if not self.debi.root_test(x):
                key = (x, self.root)
                ok = memo.get(key)
                if ok is None:
                    ok = memo[key] = self.f23(x, self.root)
                if ok:
                    self._root(x, True)
                    tent_root.append(x)
                    queue.append((self.root, None, x))

        def scan_child_side(u: int, x: int) -> None:
            key = (0, u, x)
            if key in scanned:
                return
            scanned.add(key)
            b = self.bit[u]
            for e in self.at_child_side(u, x):
                if not test(e.id, b) and self.local(e, u, memo):
                    add(e, u)

        def scan_parent_side(c: int, x: int) -> None:
            key = (1, c, x)
            if key in scanned:
                return
            scanned.add(key)
            b = self.bit[c]
            for e in self.at_parent_side(c, x):
                if not test(e.id, b) and self.local(e, c, memo):
                    add(e, c)

        by_id = {e.id: e for e in batch}
        for u, ids in fr.edges.items():
            b = self.bit[u]
            for eid in sorted(ids):
                e = by_id[eid]
                if not test(eid, b) and self.local(e, u, memo):
                    add(e, u)
        for x, old in before.items():
            for u, was in enumerate(old):
                if was or not self.f23(x, u):
                    continue
                if u == self.root:
                    try_root(x)
                else:
                    scan_child_side(u, x)

        # expansion: everything linked to a new candidate through other new candidates
        while queue:
            u, e, rx = queue.pop()
            if e is None:
                for c in self.children[u]:
                    scan_parent_side(c, rx)
                continue
            x, y = self.ends(e, u)
            p = self.parent[u]
            if p == self.root:
                try_root(y)
            else:
                scan_child_side(p, y)
            for c in self.children[u]:
                scan_parent_side(c, x)

        # bottom-up: drop candidates without subtree support
        for level in reversed(self.levels):
            for u in level:
                if not self.children[u]:
                    continue
                b = self.bit[u]
                sup: dict[int, bool] = {}
                for e in tent[u]:
                    if not test(e.id, b):
                        continue
                    x = e.dst if self.fw[u] else e.src
                    ok = sup.get(x)
                    if ok is None:
                        ok = sup[x] = self.support(u, x)
                    if not ok:
                        self._clear(e.id, u)
        for x in tent_root:
            if not self.support(self.root, x):
                self._root(x, False)

        # top-down: keep only candidates reachable from a root candidate
        for level in self.levels:
            for u in level:
                b = self.bit[u]
                p = self.parent[u]
                seen: dict[int, bool] = {}
                for e in tent[u]:
                    if not test(e.id, b):
                        continue
                    y = e.src if self.fw[u] else e.dst
                    ok = seen.get(y)
                    if ok is None:
                        ok = seen[y] = self.reach(p, y)
                    if not ok:
                        self._clear(e.id, u)

    # -- deletes -----------------------------------------------------------------

    def apply_deletes(self, removed: Sequence[EdgeRecord], rows: Sequence[int], before: dict[int, list[bool]]) -> None:
        """Shrink the index after ``removed`` left the graph.

        ``rows`` holds each removed edge's index row (as an int) from before
        the removal; the rows themselves have already been cleared.
        """
        if not removed:
            return
        self._ensure_capacity()
        levels = self.levels
        depth = self.plan.depth
        lost_child = defaultdict(set)  # u -> parent-side vertices that lost a u edge
        lost_node = defaultdict(set)  # u -> child-side vertices that lost a u edge
        test = self.debi.test

        for e, row in zip(removed, rows):
            for u in range(self.plan.num_nodes):
                if u == self.root or not (row >> self.bit[u]) & 1:
                    continue
                x, y = self.ends(e, u)
                lost_child[u].add(y)
                lost_node[u].add(x)
                self.stats.bits_cleared += 1

        # label requirements that stopped holding at batch endpoints
        by_level: dict[int, list[tuple[int, int]]] = defaultdict(list)
        for x, old in before.items():
            for u, was in enumerate(old):
                if was and not self.f23(x, u):
                    by_level[depth[u]].append((u, x))

        def drop_at(u: int, x: int) -> None:
            """Clear every ``u`` bit whose child-side endpoint is ``x``."""
            if u == self.root:
                if self.debi.root_test(x):
                    self._root(x, False)
                    lost_node[u].add(x)
                return
            b = self.bit[u]
            for e in self.at_child_side(u, x):
                if test(e.id, b):
                    self._clear(e.id, u)
                    lost_child[u].add(e.src if self.fw[u] else e.dst)
                    lost_node[u].add(x)

        # bottom-up: lost subtree support climbs toward the root
        for d in range(len(levels), -1, -1):
            nodes = levels[d - 1] if d > 0 else [self.root]
            for u, x in by_level.get(d, ()):
                drop_at(u, x)
            for u in nodes:
                if not self.children[u]:
                    continue
                todo = set()
                for c in self.children[u]:
                    todo |= lost_child[c]
                for x in todo:
                    if not self.support(u, x):
                        drop_at(u, x)

        # top-down: vertices that stopped being candidates lose their subtrees
        for level in levels:
            for u in level:
                p = self.parent[u]
                b = self.bit[u]
                for y in list(lost_node[p]):
                    if self.reach(p, y):
                        continue
                    for e in self.at_parent_side(u, y):
                        if test(e.id, b):
                            self._clear(e.id, u)
                            lost_node[u].add(e.dst if self.fw[u] else e.src)
