"""Data-graph edge-centric binary index.

One fixed-width row per data edge slot with a bit for every query tree
edge, keyed by the tree edge's child node, plus a ``roots`` bit vector over
data vertices for the root query node.  Rows are byte aligned; every read
or write touches exactly one byte of one row regardless of graph size.
"""

from __future__ import annotations

from typing import Sequence


class DebiError(Exception):
    pass


class DebiTable:
    def __init__(self, node_of_bit: Sequence[int], root: int, num_nodes: int) -> None:
        self.width = len(node_of_bit)
        self.row_bytes = max(1, (self.width + 7) // 8)
        self.root = root
        self._bit_of = [-1] * num_nodes
        for b, u in enumerate(node_of_bit):
            self._bit_of[u] = b
        self._rows = bytearray()
        self._roots = bytearray()
        self.num_slots = 0
        self.num_vertices = 0

    # -- sizing ------------------------------------------------------------

    def ensure_slots(self, n: int) -> None:
        if n > self.num_slots:
            self._rows.extend(bytes((n - self.num_slots) * self.row_bytes))
            self.num_slots = n

    def ensure_vertices(self, n: int) -> None:
        if n > self.num_vertices:
            need = (n + 7) // 8
            if need > len(self._roots):
                self._roots.extend(bytes(need - len(self._roots)))
            self.num_vertices = n

    @property
    def payload_bits(self) -> int:
        """|E_slots| * (|V_Q| - 1) + |V|."""
        return self.num_slots * self.width + self.num_vertices

    @property
    def allocated_bytes(self) -> int:
        return len(self._rows) + len(self._roots)

    # -- bit access by tree position ----------------------------------------

    def bit_of(self, u: int) -> int:
        b = self._bit_of[u]
        if b < 0:
            raise DebiError(f"query node {u} is the root; its matches live in roots")
        return b

    def test(self, eid: int, bit: int) -> bool:
        return bool(self._rows[eid * self.row_bytes + (bit >> 3)] >> (bit & 7) & 1)

    def set(self, eid: int, bit: int) -> None:
        i = eid * self.row_bytes + (bit >> 3)
        self._rows[i] |= 1 << (bit & 7)

    def clear(self, eid: int, bit: int) -> None:
        i = eid * self.row_bytes + (bit >> 3)
        self._rows[i] &= ~(1 << (bit & 7)) & 0xFF

    # -- public row operations by query node ---------------------------------

    def row_write(self, eid: int, u: int, value: bool) -> None:
        if not 0 <= eid < self.num_slots:
            raise DebiError(f"edge slot {eid} is not allocated")
        if value:
            self.set(eid, self.bit_of(u))
        else:
            self.clear(eid, self.bit_of(u))

    def row_read(self, eid: int, u: int) -> bool:
        if not 0 <= eid < self.num_slots:
            raise DebiError(f"edge slot {eid} is not allocated")
        return self.test(eid, self.bit_of(u))

    def row(self, eid: int) -> bytes:
        i = eid * self.row_bytes
        return bytes(self._rows[i : i + self.row_bytes])

    def set_row(self, eid: int, data: bytes) -> None:
        i = eid * self.row_bytes
        self._rows[i : i + self.row_bytes] = data

    def row_bits(self, eid: int) -> int:
        return int.from_bytes(self.row(eid), "little")

    def clear_row(self, eid: int) -> None:
        i = eid * self.row_bytes
        for k in range(i, i + self.row_bytes):
            self._rows[k] = 0

    # -- roots -------------------------------------------------------------

    def root_test(self, v: int) -> bool:
        return bool(self._roots[v >> 3] >> (v & 7) & 1)

    def root_set(self, v: int, value: bool) -> None:
        if value:
            self._roots[v >> 3] |= 1 << (v & 7)
        else:
            self._roots[v >> 3] &= ~(1 << (v & 7)) & 0xFF

    def roots_access(self, v: int, value: bool | None = None) -> bool | None:
        if not 0 <= v < self.num_vertices:
            raise DebiError(f"vertex {v} is not allocated")
        if value is None:
            return self.root_test(v)
        self.root_set(v, value)
        return None

    # -- whole-table operations ---------------------------------------------

    def reset_all(self) -> None:
        self._rows[:] = bytes(len(self._rows))
        self._roots[:] = bytes(len(self._roots))

    def snapshot(self) -> tuple[bytes, bytes]:
        return bytes(self._rows), bytes(self._roots)

    def set_bits(self, live_ids: Sequence[int] | None = None) -> set[tuple[int, int]]:
        """(edge id, query node) pairs currently set; handy for diffs in tests."""
        ids = range(self.num_slots) if live_ids is None else live_ids
        out = set()
        for eid in ids:
            for b in range(self.width):
                if self.test(eid, b):
                    out.add((eid, self._node_of(b)))
        return out

    def root_set_members(self) -> set[int]:
        return {v for v in range(self.num_vertices) if self.root_test(v)}

    def _node_of(self, b: int) -> int:
        return self._bit_of.index(b)
