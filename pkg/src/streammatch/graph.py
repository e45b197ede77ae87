"""Dynamic directed multigraph with per-edge ids and id recycling.

Every vertex owns an outgoing and an incoming adjacency list of edge ids.
Deletion swaps the victim with the tail of each list, so removal is O(1)
and the order of the remaining entries is otherwise preserved.  Deleted
ids go into a recycle pool owned by the source vertex and are handed back
out (LIFO) the next time that vertex gains an outgoing edge.

Besides the adjacency lists the graph keeps small per-vertex label
counters (edge labels per direction and distinct neighbour labels per
direction).  The filtering rules that bound how many edges or neighbours
of a label a candidate vertex must have read those counters instead of
rescanning adjacency lists.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Literal

if TYPE_CHECKING:
    from streammatch.coldstore import ColdStore

Direction = Literal["out", "in"]


class GraphError(Exception):
    """Raised on contract violations such as deleting a dead edge."""


@dataclass(slots=True)
class EdgeRecord:
    id: int
    src: int
    dst: int
    label: int
    timestamp: int = 0
    live: bool = True


class DynamicGraph:
    def __init__(self, *, recycle: bool = True) -> None:
        self.recycle = recycle
        self.vertex_labels: list[int] = []
        self.label_freq: Counter[int] = Counter()
        self.out_adj: list[list[int]] = []
        self.in_adj: list[list[int]] = []
        # edges[eid] is None for free slots and for edges evicted to the cold store
        self.edges: list[EdgeRecord | None] = []
        self._out_pos: list[int] = []
        self._in_pos: list[int] = []
        self._seq: list[int] = []
        self.free_ids: dict[int, list[int]] = {}
        self.live_count = 0
        self.peak_live = 0
        self._next_seq = 0
        self._fifo: deque[tuple[int, int]] = deque()

        self.out_label_count: list[Counter[int]] = []
        self.in_label_count: list[Counter[int]] = []
        self._out_nbr: list[dict[int, int]] = []
        self._in_nbr: list[dict[int, int]] = []
        self.out_nbr_label_count: list[Counter[int]] = []
        self.in_nbr_label_count: list[Counter[int]] = []
        self.out_degree: list[int] = []
        self.in_degree: list[int] = []

        self.cold: ColdStore | None = None

    # -- vertices ---------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertex_labels)

    @property
    def num_slots(self) -> int:
        """Allocated edge placeholders, live or recyclable."""
        return len(self.edges)

    def add_vertex(self, label: int = 0) -> int:
        vid = len(self.vertex_labels)
        self.vertex_labels.append(label)
        self.label_freq[label] += 1
        self.out_adj.append([])
        self.in_adj.append([])
        self.out_label_count.append(Counter())
        self.in_label_count.append(Counter())
        self._out_nbr.append({})
        self._in_nbr.append({})
        self.out_nbr_label_count.append(Counter())
        self.in_nbr_label_count.append(Counter())
        self.out_degree.append(0)
        self.in_degree.append(0)
        return vid

    def ensure_vertex(self, vid: int, label: int = 0) -> None:
        while len(self.vertex_labels) <= vid:
            self.add_vertex(label)

    # -- edges ------------------------------------------------------------

    def insert_edge(self, src: int, dst: int, label: int, timestamp: int = 0) -> int:
        if src >= self.num_vertices or dst >= self.num_vertices:
            raise GraphError(f"unknown vertex in edge ({src}, {dst})")
        pool = self.free_ids.get(src) if self.recycle else None
        if pool:
            eid = pool.pop()
            rec = self.edges[eid]
            assert rec is not None and not rec.live
            rec.src, rec.dst, rec.label, rec.timestamp, rec.live = src, dst, label, timestamp, True
        else:
            eid = len(self.edges)
            rec = EdgeRecord(eid, src, dst, label, timestamp)
            self.edges.append(rec)
            self._out_pos.append(-1)
            self._in_pos.append(-1)
            self._seq.append(-1)

        out = self.out_adj[src]
        self._out_pos[eid] = len(out)
        out.append(eid)
        inn = self.in_adj[dst]
        self._in_pos[eid] = len(inn)
        inn.append(eid)

        seq = self._next_seq
        self._next_seq += 1
        self._seq[eid] = seq
        self._fifo.append((seq, eid))

        self._count(rec, +1)
        self.live_count += 1
        self.peak_live = max(self.peak_live, self.live_count)
        return eid

    def delete_edge(self, eid: int) -> EdgeRecord:
        """Remove a live edge and push its id to the source's recycle pool.

        Returns a detached copy of the removed record.
        """
        if eid < 0 or eid >= len(self.edges):
            raise GraphError(f"edge {eid} does not exist")
        rec = self.edges[eid]
        if rec is None:
            if self.cold is not None and self.cold.contains(eid):
                raise GraphError(f"edge {eid} lives in the cold store and cannot be deleted")
            raise GraphError(f"edge {eid} is not live")
        if not rec.live:
            raise GraphError(f"edge {eid} is not live")

        self._swap_remove(self.out_adj[rec.src], self._out_pos, eid)
        self._swap_remove(self.in_adj[rec.dst], self._in_pos, eid)
        self._count(rec, -1)
        rec.live = False
        self._seq[eid] = -1
        self.live_count -= 1
        self.free_ids.setdefault(rec.src, []).append(eid)
        return EdgeRecord(rec.id, rec.src, rec.dst, rec.label, rec.timestamp, False)

    @staticmethod
    def _swap_remove(lst: list[int], pos: list[int], eid: int) -> None:
        i = pos[eid]
        last = lst[-1]
        lst[i] = last
        pos[last] = i
        lst.pop()
        pos[eid] = -1

    def _count(self, rec: EdgeRecord, delta: int) -> None:
        s, d = rec.src, rec.dst
        self.out_label_count[s][rec.label] += delta
        self.in_label_count[d][rec.label] += delta
        self.out_degree[s] += delta
        self.in_degree[d] += delta
        labels = self.vertex_labels

        nbr = self._out_nbr[s]
        m = nbr.get(d, 0) + delta
        if m:
            nbr[d] = m
        else:
            del nbr[d]
        if (delta > 0 and m == 1) or (delta < 0 and m == 0):
            self.out_nbr_label_count[s][labels[d]] += delta

        nbr = self._in_nbr[d]
        m = nbr.get(s, 0) + delta
        if m:
            nbr[s] = m
        else:
            del nbr[s]
        if (delta > 0 and m == 1) or (delta < 0 and m == 0):
            self.in_nbr_label_count[d][labels[s]] += delta

    # -- access -----------------------------------------------------------

    def edge(self, eid: int) -> EdgeRecord:
        rec = self.edges[eid] if 0 <= eid < len(self.edges) else None
        if rec is None:
            if self.cold is not None and self.cold.contains(eid):
                return self.cold.record(eid)
            raise GraphError(f"edge {eid} is not live")
        return rec

    def is_live(self, eid: int) -> bool:
        if 0 <= eid < len(self.edges):
            rec = self.edges[eid]
            if rec is not None:
                return rec.live
            return self.cold is not None and self.cold.contains(eid)
        return False

    def adjacency(self, v: int, direction: Direction) -> list[EdgeRecord]:
        """Live edges incident to ``v``: cold (oldest) first, then hot in storage order."""
        if v < 0 or v >= self.num_vertices:
            return []
        ids = self.out_adj[v] if direction == "out" else self.in_adj[v]
        edges = self.edges
        hot = [edges[i] for i in ids]
        if self.cold is not None:
            cold = self.cold.adjacency(v, direction)
            if cold:
                return cold + hot
        return hot  # type: ignore[return-value]

    def out_edges(self, v: int) -> list[EdgeRecord]:
        return self.adjacency(v, "out")

    def in_edges(self, v: int) -> list[EdgeRecord]:
        return self.adjacency(v, "in")

    def live_edges(self) -> Iterator[EdgeRecord]:
        for v in range(self.num_vertices):
            yield from self.adjacency(v, "out")

    def insertion_seq(self, eid: int) -> int:
        return self._seq[eid]

    @property
    def next_seq(self) -> int:
        return self._next_seq

    def hot_fifo(self) -> deque[tuple[int, int]]:
        """(insertion sequence, edge id) pairs in arrival order; stale pairs are skipped lazily."""
        return self._fifo

    def detach_hot(self, eid: int) -> EdgeRecord:
        """Take a live edge out of the hot adjacency lists without killing it."""
        rec = self.edges[eid]
        assert rec is not None and rec.live
        self._swap_remove(self.out_adj[rec.src], self._out_pos, eid)
        self._swap_remove(self.in_adj[rec.dst], self._in_pos, eid)
        self.edges[eid] = None
        return rec

    # -- diagnostics --------------------------------------------------------

    def pooled_ids(self) -> int:
        return sum(len(p) for p in self.free_ids.values())

    def check_invariants(self) -> None:
        """Assert structural invariants; used by tests."""
        out_total = sum(len(a) for a in self.out_adj)
        in_total = sum(len(a) for a in self.in_adj)
        cold_n = self.cold.size() if self.cold is not None else 0
        assert out_total == in_total == self.live_count - cold_n
        for v, lst in enumerate(self.out_adj):
            for i, eid in enumerate(lst):
                rec = self.edges[eid]
                assert rec is not None and rec.live and rec.src == v
                assert self._out_pos[eid] == i
        for v, lst in enumerate(self.in_adj):
            for i, eid in enumerate(lst):
                rec = self.edges[eid]
                assert rec is not None and rec.live and rec.dst == v
                assert self._in_pos[eid] == i
        pooled = [i for p in self.free_ids.values() for i in p]
        assert len(pooled) == len(set(pooled))
        for eid in pooled:
            rec = self.edges[eid]
            assert rec is not None and not rec.live
