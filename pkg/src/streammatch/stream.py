"""Stream parsing and snapshot generation.

Three stream types are supported.  ``insert_only`` chunks inserts into
batches.  ``insert_delete`` chunks mixed events.  ``sliding_window``
groups events by stride and expires edges that fall out of the window.

A delete line names an edge by (src, dst, label) with both endpoints
negated.  It removes the oldest live edge with that triplet, and the
generator resolves it here.  Each delete therefore carries the sequence
number of the insert it cancels.
"""

from __future__ import annotations

import logging
import re
from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, TextIO

log = logging.getLogger(__name__)


class StreamError(ValueError):
    pass


class StreamType(str, Enum):
    INSERT_ONLY = "insert_only"
    INSERT_DELETE = "insert_delete"
    SLIDING_WINDOW = "sliding_window"


class EventKind(str, Enum):
    INSERT = "insert"
    DELETE = "delete"


@dataclass(frozen=True)
class Span:
    """A window or stride: either a number of events or a time length in timestamp units."""

    value: int
    by_time: bool = False

    def __post_init__(self) -> None:
        if self.value <= 0:
            raise StreamError("window and stride must be positive")


_UNITS = {"s": 1, "m": 60, "h": 3600, "d": 86400}
_SPAN = re.compile(r"^(\d+)\s*([smhd]?)$")


def parse_span(text: str | int) -> Span:
    """``"500"`` is 500 events; ``"10m"`` or ``"24h"`` is a duration in seconds."""
    if isinstance(text, int):
        return Span(text)
    m = _SPAN.match(text.strip().lower())
    if not m:
        raise StreamError(f"cannot parse window/stride {text!r}; use N or N[s|m|h|d]")
    n, unit = int(m.group(1)), m.group(2)
    return Span(n * _UNITS[unit], by_time=True) if unit else Span(n)


@dataclass(frozen=True)
class StreamConfig:
    stream_type: StreamType = StreamType.INSERT_ONLY
    window: Span | None = None
    stride: Span | None = None
    batch_size: int = 1
    initial_load: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise StreamError("batch size must be at least 1")
        if self.initial_load < 0:
            raise StreamError("initial load cannot be negative")
        if self.stream_type == StreamType.SLIDING_WINDOW:
            if self.window is None:
                raise StreamError("a sliding window stream needs a window")
            stride = self.stride or self.window
            if stride.by_time != self.window.by_time:
                raise StreamError("window and stride must both be counts or both be durations")
            if stride.value > self.window.value:
                raise StreamError("stride cannot exceed the window")


@dataclass(frozen=True)
class StreamEvent:
    src: int
    dst: int
    label: int
    timestamp: int
    kind: EventKind = EventKind.INSERT
    seq: int = -1
    # for deletes: sequence number of the insert being cancelled
    target: int = -1

    @property
    def triplet(self) -> tuple[int, int, int]:
        return self.src, self.dst, self.label


@dataclass
class Snapshot:
    epoch: int
    insert_list: list[StreamEvent] = field(default_factory=list)
    delete_list: list[StreamEvent] = field(default_factory=list)
    initial: bool = False

    def is_empty(self) -> bool:
        return not self.insert_list and not self.delete_list


def parse_event(line: str, lineno: int = 0, seq: int = -1) -> StreamEvent | None:
    """One ``src dst label [timestamp]`` line; blank lines and ``#`` comments yield None."""
    body = line.split("#", 1)[0].strip()
    if not body:
        return None
    parts = body.split()
    if len(parts) not in (3, 4):
        raise StreamError(f"line {lineno}: expected 'src dst label [timestamp]', got {line.strip()!r}")
    try:
        src, dst, label = int(parts[0]), int(parts[1]), int(parts[2])
        ts = int(parts[3]) if len(parts) == 4 else seq
    except ValueError:
        raise StreamError(f"line {lineno}: non-integer field in {line.strip()!r}") from None
    # sign is read from the text so that vertex 0 can be deleted as "-0"
    neg_s, neg_d = parts[0].startswith("-"), parts[1].startswith("-")
    if neg_s != neg_d:
        raise StreamError(f"line {lineno}: only one endpoint is negated")
    kind = EventKind.DELETE if neg_s else EventKind.INSERT
    if kind is EventKind.DELETE:
        src, dst = -src, -dst
    return StreamEvent(src, dst, label, ts, kind, seq)


def read_events(source: TextIO | Iterable[str]) -> Iterator[StreamEvent]:
    seq = 0
    for lineno, line in enumerate(source, 1):
        ev = parse_event(line, lineno, seq)
        if ev is not None:
            yield ev
            seq += 1


def load_events(path: str | Path) -> list[StreamEvent]:
    with open(path) as fh:
        return list(read_events(fh))


class SnapshotGenerator:
    """Turns an event sequence into snapshots according to a ``StreamConfig``.

    Deterministic: the same config over the same events yields the same
    snapshots.
    """

    def __init__(self, config: StreamConfig, events: Iterable[StreamEvent]) -> None:
        self.config = config
        self._events = iter(events)
        self._pending: deque[StreamEvent] = deque()
        self._live: dict[tuple[int, int, int], deque[int]] = defaultdict(deque)
        self._live_ts: dict[int, StreamEvent] = {}
        self._expiry: deque[StreamEvent] = deque()  # inserts in timestamp order
        self._epoch = 0
        self._started = False
        self._latest: int | None = None
        self._chunking: deque[StreamEvent] | None = None
        self.unmatched_deletes = 0

    def __iter__(self) -> Iterator[Snapshot]:
        while (snap := self.next_snapshot()) is not None:
            yield snap

    def _pull(self, n: int) -> list[StreamEvent]:
        out = []
        while len(out) < n:
            if self._pending:
                out.append(self._pending.popleft())
                continue
            ev = next(self._events, None)
            if ev is None:
                break
            out.append(ev)
        return out

    def _peek(self) -> StreamEvent | None:
        if not self._pending:
            ev = next(self._events, None)
            if ev is None:
                return None
            self._pending.append(ev)
        return self._pending[0]

    def _resolve(self, events: list[StreamEvent], snap: Snapshot) -> None:
        for ev in events:
            if ev.kind is EventKind.INSERT:
                self._live[ev.triplet].append(ev.seq)
                self._live_ts[ev.seq] = ev
                self._expiry.append(ev)
                snap.insert_list.append(ev)
                self._latest = ev.timestamp if self._latest is None else max(self._latest, ev.timestamp)
            else:
                if self.config.stream_type == StreamType.INSERT_ONLY:
                    raise StreamError(f"delete event {ev.triplet} in an insert-only stream")
                q = self._live.get(ev.triplet)
                if not q:
                    self.unmatched_deletes += 1
                    log.warning("delete of %s matches no live edge; skipped", ev.triplet)
                    continue
                target = q.popleft()
                del self._live_ts[target]
                snap.delete_list.append(
                    StreamEvent(ev.src, ev.dst, ev.label, ev.timestamp, EventKind.DELETE, ev.seq, target)
                )

    def _expire(self, snap: Snapshot) -> None:
        cfg = self.config
        assert cfg.window is not None
        if cfg.window.by_time:
            if self._latest is None:
                return
            bound = self._latest - cfg.window.value
            expired = lambda ev: ev.timestamp <= bound  # noqa: E731
        else:
            keep = cfg.window.value
            live_n = len(self._live_ts)
            expired = lambda ev: live_n > keep  # noqa: E731
        while self._expiry:
            ev = self._expiry[0]
            if ev.seq not in self._live_ts:
                self._expiry.popleft()
                continue
            if not expired(ev):
                break
            self._expiry.popleft()
            del self._live_ts[ev.seq]
            self._live[ev.triplet].remove(ev.seq)
            snap.delete_list.append(
                StreamEvent(ev.src, ev.dst, ev.label, ev.timestamp, EventKind.DELETE, -1, ev.seq)
            )
            if not cfg.window.by_time:
                live_n -= 1

    def _stride_events(self) -> list[StreamEvent]:
        cfg = self.config
        stride = cfg.stride or cfg.window
        assert stride is not None
        if not stride.by_time:
            return self._pull(stride.value)
        first = self._peek()
        if first is None:
            return []
        end = first.timestamp - first.timestamp % stride.value + stride.value
        out = []
        while (ev := self._peek()) is not None and ev.timestamp < end:
            out.append(self._pending.popleft())
        return out

    def next_snapshot(self) -> Snapshot | None:
        cfg = self.config
        if not self._started:
            self._started = True
            if cfg.initial_load:
                snap = Snapshot(self._epoch, initial=True)
                self._resolve(self._pull(cfg.initial_load), snap)
                if snap.delete_list:
                    gone = {d.target for d in snap.delete_list}
                    snap.insert_list = [e for e in snap.insert_list if e.seq not in gone]
                    snap.delete_list = []
                self._epoch += 1
                return snap
        if cfg.stream_type != StreamType.SLIDING_WINDOW:
            events = self._pull(cfg.batch_size)
            if not events:
                return None
            snap = Snapshot(self._epoch)
            self._resolve(events, snap)
            self._epoch += 1
            return snap

        # sliding window: a stride's events, chunked to the batch size
        if self._chunking is None:
            group = self._stride_events()
            if not group:
                return None
            self._chunking = deque(group)
        chunk = [self._chunking.popleft() for _ in range(min(cfg.batch_size, len(self._chunking)))]
        if not self._chunking:
            self._chunking = None
        snap = Snapshot(self._epoch)
        self._resolve(chunk, snap)
        self._expire(snap)
        self._epoch += 1
        return snap


def next_snapshot(gen: SnapshotGenerator) -> Snapshot | None:
    return gen.next_snapshot()
