"""Query graphs and their per-query plan.

A plan fixes a root (the most selective query node), a BFS spanning tree
whose parent/child relation ignores edge direction, and a canonical order
of all query edges: tree edges in BFS discovery order followed by the
non-tree edges.  Enumeration may start from any query edge, so the plan
also derives one matching order and one mask per start edge.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping


class QueryError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class QueryEdge:
    src: int
    dst: int
    label: int | None = None  # None is the wildcard
    timestamp: int | None = None


@dataclass
class QueryGraph:
    labels: list[int]
    edges: list[QueryEdge]
    names: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.names:
            self.names = list(range(len(self.labels)))
        n = len(self.labels)
        if n < 2:
            raise QueryError("a query needs at least two nodes")
        for qe in self.edges:
            if not (0 <= qe.src < n and 0 <= qe.dst < n):
                raise QueryError(f"query edge {qe} references an unknown node")
        if not self.is_connected():
            raise QueryError("query graph is not connected")

    @property
    def num_nodes(self) -> int:
        return len(self.labels)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def has_timestamps(self) -> bool:
        return all(qe.timestamp is not None for qe in self.edges)

    def neighbours(self) -> list[list[tuple[int, int]]]:
        """Undirected incidence: node -> [(neighbour, query edge index)]."""
        nbrs: list[list[tuple[int, int]]] = [[] for _ in self.labels]
        for i, qe in enumerate(self.edges):
            nbrs[qe.src].append((qe.dst, i))
            if qe.dst != qe.src:
                nbrs[qe.dst].append((qe.src, i))
        return nbrs

    def is_connected(self) -> bool:
        nbrs = self.neighbours()
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y, _ in nbrs[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == self.num_nodes

    def degree(self, u: int) -> int:
        return sum(1 for qe in self.edges for x in (qe.src, qe.dst) if x == u)


def parse_query(text: str) -> QueryGraph:
    """Parse ``v <id> <label>`` and ``e <src> <dst> <label|*> [ts]`` lines."""
    names: list[int] = []
    labels: list[int] = []
    index: dict[int, int] = {}
    raw_edges: list[tuple[int, int, int | None, int | None]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "v" and len(parts) == 3:
                vid, lab = int(parts[1]), int(parts[2])
                if vid in index:
                    raise QueryError(f"line {lineno}: duplicate node {vid}")
                index[vid] = len(names)
                names.append(vid)
                labels.append(lab)
            elif parts[0] == "e" and len(parts) in (4, 5):
                lab = None if parts[3] == "*" else int(parts[3])
                ts = int(parts[4]) if len(parts) == 5 else None
                raw_edges.append((int(parts[1]), int(parts[2]), lab, ts))
            else:
                raise QueryError(f"line {lineno}: cannot parse {line!r}")
        except ValueError as exc:
            if isinstance(exc, QueryError):
                raise
            raise QueryError(f"line {lineno}: {exc}") from None
    edges = []
    for s, d, lab, ts in raw_edges:
        if s not in index or d not in index:
            raise QueryError(f"edge ({s}, {d}) references an undeclared node")
        edges.append(QueryEdge(index[s], index[d], lab, ts))
    return QueryGraph(labels, edges, names)


def load_query(path: str | Path) -> QueryGraph:
    return parse_query(Path(path).read_text())


@dataclass(frozen=True)
class NodeRequirement:
    """Per-node label counts a data vertex must dominate (edge and neighbour rules)."""

    out_edges: tuple[tuple[int, int], ...]
    in_edges: tuple[tuple[int, int], ...]
    out_total: int
    in_total: int
    out_nbrs: tuple[tuple[int, int], ...]
    in_nbrs: tuple[tuple[int, int], ...]

    def capped(self) -> NodeRequirement:
        """Presence-only variant for semantics that may reuse data edges."""
        cap = lambda items: tuple((k, 1) for k, n in items if n)  # noqa: E731
        return NodeRequirement(
            cap(self.out_edges),
            cap(self.in_edges),
            min(self.out_total, 1),
            min(self.in_total, 1),
            cap(self.out_nbrs),
            cap(self.in_nbrs),
        )


@dataclass(frozen=True)
class MatchingOrder:
    start: int
    sequence: tuple[int, ...]
    tree_edges: frozenset[int]

    @property
    def tree_sequence(self) -> tuple[int, ...]:
        return tuple(q for q in self.sequence if q in self.tree_edges)


@dataclass(frozen=True)
class MaskRow:
    start_index: int
    blocked: frozenset[int]  # canonical indices


@dataclass
class QueryPlan:
    query: QueryGraph
    root: int
    parent: list[int]
    parent_edge: list[int]
    children: list[list[int]]
    depth: list[int]
    tree_edges: list[int]
    non_tree_edges: list[int]
    canonical_order: list[int]
    diameter: int
    requirements: list[NodeRequirement]

    @cached_property
    def canonical_index(self) -> dict[int, int]:
        return {q: i for i, q in enumerate(self.canonical_order)}

    @cached_property
    def bit(self) -> list[int]:
        """DEBI bit position for each non-root node; -1 for the root.

        Bits follow the BFS order of the tree edges, so bit i belongs to the
        child node of canonical tree edge i.
        """
        b = [-1] * self.query.num_nodes
        for i, q in enumerate(self.tree_edges):
            b[self.child_of(q)] = i
        return b

    @cached_property
    def node_of_bit(self) -> list[int]:
        return [self.child_of(q) for q in self.tree_edges]

    @cached_property
    def forward(self) -> list[bool]:
        """True when the tree edge into u is oriented parent -> u."""
        fw = [True] * self.query.num_nodes
        for u in range(self.query.num_nodes):
            if u != self.root:
                fw[u] = self.query.edges[self.parent_edge[u]].src == self.parent[u]
        return fw

    @cached_property
    def levels(self) -> list[list[int]]:
        """Non-root nodes grouped by depth, BFS order within each level."""
        out: list[list[int]] = []
        for q in self.tree_edges:
            u = self.child_of(q)
            d = self.depth[u]
            while len(out) < d:
                out.append([])
            out[d - 1].append(u)
        return out

    @property
    def num_nodes(self) -> int:
        return self.query.num_nodes

    @property
    def width(self) -> int:
        return self.query.num_nodes - 1

    def child_of(self, q: int) -> int:
        qe = self.query.edges[q]
        if self.parent[qe.dst] == qe.src and self.parent_edge[qe.dst] == q:
            return qe.dst
        return qe.src

    def is_tree_edge(self, q: int) -> bool:
        return q in self._tree_set

    @cached_property
    def _tree_set(self) -> frozenset[int]:
        return frozenset(self.tree_edges)

    def path_to_root(self, u: int) -> list[int]:
        path = []
        while u != self.root:
            path.append(self.parent_edge[u])
            u = self.parent[u]
        return path

    @cached_property
    def _orders(self) -> dict[int, MatchingOrder]:
        return {q: _build_order(self, q) for q in self.canonical_order}

    def matching_order(self, start: int) -> MatchingOrder:
        return self._orders[start]

    def mask_for(self, start: int) -> MaskRow:
        i = self.canonical_index[start]
        return MaskRow(i, frozenset(range(i)))


def _build_order(plan: QueryPlan, start: int) -> MatchingOrder:
    edges = plan.query.edges
    seq: list[int] = [start]
    bound: set[int] = {edges[start].src, edges[start].dst}
    placed = {start}
    pending_nte = [q for q in plan.non_tree_edges if q != start]

    def place(q: int) -> None:
        if q in placed:
            return
        seq.append(q)
        placed.add(q)
        bound.update((edges[q].src, edges[q].dst))
        for nte in list(pending_nte):
            if edges[nte].src in bound and edges[nte].dst in bound:
                pending_nte.remove(nte)
                seq.append(nte)
                placed.add(nte)

    # non-tree edges closed by the start edge alone (parallel or self loops)
    for nte in list(pending_nte):
        if edges[nte].src in bound and edges[nte].dst in bound:
            pending_nte.remove(nte)
            seq.append(nte)
            placed.add(nte)

    if plan.is_tree_edge(start):
        u = plan.child_of(start)
        for q in plan.path_to_root(plan.parent[u]):
            place(q)
    else:
        x, y = edges[start].src, edges[start].dst
        if y != plan.root:
            place(plan.parent_edge[y])
        if x != plan.root:
            place(plan.parent_edge[x])
            for q in plan.path_to_root(plan.parent[x]):
                place(q)
    for q in plan.tree_edges:
        place(q)
    assert not pending_nte and len(seq) == len(edges)
    return MatchingOrder(start, tuple(seq), frozenset(plan.tree_edges))


def node_requirements(q: QueryGraph) -> list[NodeRequirement]:
    reqs = []
    for u in range(q.num_nodes):
        out_l: Counter[int] = Counter()
        in_l: Counter[int] = Counter()
        out_total = in_total = 0
        out_n: set[int] = set()
        in_n: set[int] = set()
        for qe in q.edges:
            if qe.src == u:
                out_total += 1
                if qe.label is not None:
                    out_l[qe.label] += 1
                out_n.add(qe.dst)
            if qe.dst == u:
                in_total += 1
                if qe.label is not None:
                    in_l[qe.label] += 1
                in_n.add(qe.src)
        out_nl = Counter(q.labels[w] for w in out_n)
        in_nl = Counter(q.labels[w] for w in in_n)
        reqs.append(
            NodeRequirement(
                tuple(sorted(out_l.items())),
                tuple(sorted(in_l.items())),
                out_total,
                in_total,
                tuple(sorted(out_nl.items())),
                tuple(sorted(in_nl.items())),
            )
        )
    return reqs


def _diameter(q: QueryGraph) -> int:
    nbrs = q.neighbours()
    best = 0
    for s in range(q.num_nodes):
        dist = {s: 0}
        dq = deque([s])
        while dq:
            x = dq.popleft()
            for y, _ in nbrs[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    dq.append(y)
        best = max(best, max(dist.values()))
    return best


def select_root(q: QueryGraph, stats: Mapping[int, int] | None) -> int:
    """Most selective node: data frequency of its label over (1 + degree)."""
    freq = stats or {}

    def key(u: int) -> tuple[float, int]:
        return (freq.get(q.labels[u], 0) / (1 + q.degree(u)), u)

    return min(range(q.num_nodes), key=key)


def build_plan(
    q: QueryGraph,
    stats: Mapping[int, int] | None = None,
    *,
    root: int | None = None,
) -> QueryPlan:
    """Plan a query against a data graph whose vertex-label histogram is ``stats``."""
    if not q.is_connected():
        raise QueryError("query graph is not connected")
    freq = stats or {}
    if root is None:
        root = select_root(q, stats)
    n = q.num_nodes
    nbrs = q.neighbours()
    parent = [-1] * n
    parent_edge = [-1] * n
    depth = [0] * n
    children: list[list[int]] = [[] for _ in range(n)]
    tree: list[int] = []
    seen = {root}
    dq = deque([root])
    while dq:
        x = dq.popleft()
        cand: dict[int, int] = {}
        for y, qi in nbrs[x]:
            if y not in seen and (y not in cand or qi < cand[y]):
                cand[y] = qi
        for y in sorted(cand, key=lambda w: (freq.get(q.labels[w], 0), w)):
            seen.add(y)
            parent[y] = x
            parent_edge[y] = cand[y]
            depth[y] = depth[x] + 1
            children[x].append(y)
            tree.append(cand[y])
            dq.append(y)
    tree_set = set(tree)
    non_tree = [i for i in range(q.num_edges) if i not in tree_set]
    return QueryPlan(
        query=q,
        root=root,
        parent=parent,
        parent_edge=parent_edge,
        children=children,
        depth=depth,
        tree_edges=tree,
        non_tree_edges=non_tree,
        canonical_order=tree + non_tree,
        diameter=_diameter(q),
        requirements=node_requirements(q),
    )


def query_from_edges(
    labels: Iterable[int], edges: Iterable[tuple[int, int, int | None] | tuple[int, int, int | None, int | None]]
) -> QueryGraph:
    """Convenience constructor used by tests and generators."""
    qedges = [QueryEdge(*e) for e in edges]
    return QueryGraph(list(labels), qedges)
