"""FIFO spill of old edges, with their index rows, to append-only segment files.

Layout (little endian throughout)::

    segment  := magic:4s  row_bytes:u32  block*
    block    := length:u32  vertex:u64  direction:u8  count:u32  record*
    record   := edge_id:u64 src:u64 dst:u64 label:u32 ts:u64 row:row_bytes

Each evicted edge is written twice: once in its source's out-block and
once in its destination's in-block, so either adjacency list comes back
from one chain of block reads.  ``MANIFEST`` lists segments in the order
they were written and is replaced atomically after every flush.

The index rows in the segments are the rows as of eviction.  The live
table keeps the authoritative copy, because later batches may still
clear bits on evicted edges.
"""

from __future__ import annotations

import os
import struct
from collections import OrderedDict, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

from streammatch.graph import Direction, EdgeRecord

if TYPE_CHECKING:
    from streammatch.debi import DebiTable
    from streammatch.graph import DynamicGraph

MAGIC = b"SMCS"
_SEG_HEADER = struct.Struct("<4sI")
_BLOCK_HEADER = struct.Struct("<IQBI")
_RECORD = struct.Struct("<QQQIQ")
_DIRS: dict[str, int] = {"out": 0, "in": 1}


class ColdStoreError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpillConfig:
    in_memory_window: int
    directory: Path
    buffer_capacity: int = 1 << 20

    def __post_init__(self) -> None:
        if self.in_memory_window <= 0:
            raise ValueError("the in-memory window must be positive")
        if self.buffer_capacity <= 0:
            raise ValueError("buffer capacity must be positive")


@dataclass(frozen=True)
class BlockRef:
    segment: int
    offset: int
    length: int


def encode_record(e: EdgeRecord, row: bytes) -> bytes:
    return _RECORD.pack(e.id, e.src, e.dst, e.label, e.timestamp) + row


def decode_record(buf: bytes | memoryview, offset: int, row_bytes: int) -> tuple[EdgeRecord, bytes]:
    eid, src, dst, label, ts = _RECORD.unpack_from(buf, offset)
    start = offset + _RECORD.size
    return EdgeRecord(eid, src, dst, label, ts), bytes(buf[start : start + row_bytes])


class ColdStore:
    def __init__(self, directory: str | Path, row_bytes: int, *, buffer_capacity: int = 1 << 20, cache_keys: int = 4096) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.row_bytes = row_bytes
        self.buffer_capacity = buffer_capacity
        self.record_size = _RECORD.size + row_bytes
        self._segments: list[Path] = []
        self._fds: dict[int, int] = {}
        self._index: dict[tuple[int, int], list[BlockRef]] = defaultdict(list)
        self._pending: dict[tuple[int, int], list[tuple[EdgeRecord, bytes]]] = defaultdict(list)
        self._pending_bytes = 0
        self._src_of: dict[int, int] = {}
        self._cache: OrderedDict[tuple[int, int], list[EdgeRecord]] = OrderedDict()
        self._cache_keys = cache_keys
        self.evicted = 0

    # -- persistence ---------------------------------------------------------

    @classmethod
    def open(cls, directory: str | Path, row_bytes: int, **kw: int) -> ColdStore:
        """Reattach to an existing spill directory, rebuilding the offset index."""
        store = cls(directory, row_bytes, **kw)
        manifest = store.directory / "MANIFEST"
        if not manifest.exists():
            return store
        for name in manifest.read_text().split():
            path = store.directory / name
            if not path.exists():
                raise ColdStoreError(f"segment {name} listed in MANIFEST is missing")
            store._segments.append(path)
            store._scan_segment(len(store._segments) - 1)
        return store

    def _scan_segment(self, seg: int) -> None:
        data = self._segments[seg].read_bytes()
        magic, rb = _SEG_HEADER.unpack_from(data, 0)
        if magic != MAGIC or rb != self.row_bytes:
            raise ColdStoreError(f"{self._segments[seg].name} is not a segment for {self.row_bytes}-byte rows")
        pos = _SEG_HEADER.size
        while pos < len(data):
            length, v, d, count = _BLOCK_HEADER.unpack_from(data, pos)
            self._index[(v, d)].append(BlockRef(seg, pos, length))
            body = pos + _BLOCK_HEADER.size
            for k in range(count):
                rec, _ = decode_record(data, body + k * self.record_size, self.row_bytes)
                if d == 0:
                    self._src_of[rec.id] = rec.src
            pos += length

    def flush(self) -> None:
        if not self._pending:
            return
        seg = len(self._segments)
        path = self.directory / f"segment-{seg:06d}.log"
        out = bytearray(_SEG_HEADER.pack(MAGIC, self.row_bytes))
        refs = []
        for (v, d), items in sorted(self._pending.items()):
            body = b"".join(encode_record(e, row) for e, row in items)
            length = _BLOCK_HEADER.size + len(body)
            refs.append(((v, d), BlockRef(seg, len(out), length)))
            out += _BLOCK_HEADER.pack(length, v, d, len(items))
            out += body
        try:
            with open(path, "wb") as fh:
                fh.write(out)
                fh.flush()
                os.fsync(fh.fileno())
            tmp = self.directory / "MANIFEST.tmp"
            tmp.write_text("\n".join(p.name for p in [*self._segments, path]) + "\n")
            os.replace(tmp, self.directory / "MANIFEST")
        except OSError as exc:
            raise ColdStoreError(f"flushing segment {path}: {exc}") from exc
        self._segments.append(path)
        for key, ref in refs:
            self._index[key].append(ref)
        self._pending.clear()
        self._pending_bytes = 0

    def close(self) -> None:
        self.flush()
        for fd in self._fds.values():
            os.close(fd)
        self._fds.clear()

    # -- eviction ------------------------------------------------------------

    def evict(self, graph: DynamicGraph, debi: DebiTable, boundary: int) -> int:
        """Move every hot edge inserted before sequence ``boundary`` to cold storage."""
        fifo = graph.hot_fifo()
        victims: list[int] = []
        for seq, eid in fifo:
            if seq >= boundary:
                break
            rec = graph.edges[eid]
            if rec is not None and rec.live and graph.insertion_seq(eid) == seq:
                victims.append(eid)
        if not victims:
            while fifo and fifo[0][0] < boundary:
                fifo.popleft()
            return 0
        staged: list[tuple[EdgeRecord, bytes]] = []
        for eid in victims:
            rec = graph.edges[eid]
            assert rec is not None
            staged.append((EdgeRecord(rec.id, rec.src, rec.dst, rec.label, rec.timestamp), debi.row(eid)))
        marks = {k: len(v) for k, v in self._pending.items()}
        for rec, row in staged:
            self._pending[(rec.src, 0)].append((rec, row))
            self._pending[(rec.dst, 1)].append((rec, row))
        try:
            if self._pending_bytes + 2 * self.record_size * len(staged) >= self.buffer_capacity:
                self.flush()
            else:
                self._pending_bytes += 2 * self.record_size * len(staged)
        except ColdStoreError:
            # roll the buffer back so nothing of this eviction is visible
            for key in list(self._pending):
                keep = marks.get(key, 0)
                if keep:
                    del self._pending[key][keep:]
                else:
                    del self._pending[key]
            raise
        for rec, _ in staged:
            graph.detach_hot(rec.id)
            self._src_of[rec.id] = rec.src
            self._cache.pop((rec.src, 0), None)
            self._cache.pop((rec.dst, 1), None)
        while fifo and fifo[0][0] < boundary:
            fifo.popleft()
        self.evicted += len(staged)
        return len(staged)

    # -- reads ---------------------------------------------------------------

    def _fd(self, seg: int) -> int:
        fd = self._fds.get(seg)
        if fd is None:
            try:
                fd = self._fds[seg] = os.open(self._segments[seg], os.O_RDONLY)
            except OSError as exc:
                raise ColdStoreError(f"segment {self._segments[seg]} is unreadable: {exc}") from exc
        return fd

    def fetch_cold(self, v: int, direction: Direction) -> list[tuple[EdgeRecord, bytes]]:
        """Every evicted edge of ``v`` in ``direction`` with its row as of eviction."""
        d = _DIRS[direction]
        out: list[tuple[EdgeRecord, bytes]] = []
        for ref in self._index.get((v, d), ()):
            data = os.pread(self._fd(ref.segment), ref.length, ref.offset)
            if len(data) != ref.length:
                raise ColdStoreError(f"short read in segment {ref.segment}")
            _, bv, bd, count = _BLOCK_HEADER.unpack_from(data, 0)
            if (bv, bd) != (v, d):
                raise ColdStoreError(f"block at {ref.offset} in segment {ref.segment} is corrupt")
            for k in range(count):
                out.append(decode_record(data, _BLOCK_HEADER.size + k * self.record_size, self.row_bytes))
        out.extend((EdgeRecord(e.id, e.src, e.dst, e.label, e.timestamp), row) for e, row in self._pending.get((v, d), ()))
        return out

    def adjacency(self, v: int, direction: Direction) -> list[EdgeRecord]:
        key = (v, _DIRS[direction])
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        if key not in self._index and key not in self._pending:
            return []
        recs = [e for e, _ in self.fetch_cold(v, direction)]
        self._cache[key] = recs
        if len(self._cache) > self._cache_keys:
            self._cache.popitem(last=False)
        return recs

    def contains(self, eid: int) -> bool:
        return eid in self._src_of

    def record(self, eid: int) -> EdgeRecord:
        src = self._src_of[eid]
        for e in self.adjacency(src, "out"):
            if e.id == eid:
                return e
        raise ColdStoreError(f"edge {eid} is indexed but missing from its block")

    def size(self) -> int:
        return len(self._src_of)
