"""Random query, label and stream instances shared by property and acceptance tests."""

from __future__ import annotations

import random
from dataclasses import dataclass

from streammatch.query import QueryEdge, QueryGraph
from streammatch.stream import EventKind, StreamConfig, StreamEvent, StreamType, parse_span


def random_query(rng: random.Random, n: int, labels: int, *, extra: int = 0, timestamps: bool = False) -> QueryGraph:
    edges = []
    for v in range(1, n):
        u = rng.randrange(v)
        edges.append((u, v) if rng.random() < 0.5 else (v, u))
    for _ in range(extra):
        a, b = rng.sample(range(n), 2)
        edges.append((a, b))
    rng.shuffle(edges)
    qedges = [
        QueryEdge(a, b, None if rng.random() < 0.7 else rng.randrange(2), rng.randrange(4) if timestamps else None)
        for a, b in edges
    ]
    return QueryGraph([rng.randrange(labels) for _ in range(n)], qedges)


def planted_query(
    rng: random.Random,
    events: list[StreamEvent],
    labels: dict[int, int],
    n: int,
    *,
    extra: int,
    timestamps: bool,
    tail: int = 0,
    recent: int = 0,
) -> QueryGraph | None:
    """A query cut out of the stream's own edges, so it has at least one match at some point."""
    # only edges still live at the end of the stream (and inside the last window)
    live: dict[tuple[int, int, int], list[StreamEvent]] = {}
    for ev in events[len(events) - recent :] if recent else events:
        if ev.kind is EventKind.INSERT:
            live.setdefault(ev.triplet, []).append(ev)
        elif live.get(ev.triplet):
            live[ev.triplet].pop(0)
    final = [ev for evs in live.values() for ev in evs if ev.src != ev.dst]
    adj: dict[int, list[tuple[int, int, int]]] = {}
    for ev in final:
        adj.setdefault(ev.src, []).append(ev.triplet)
        adj.setdefault(ev.dst, []).append(ev.triplet)
    late = [ev for ev in final if ev.seq >= tail]
    if not late:
        return None
    # grow from an edge that arrives after the initial load so the match shows up as a delta
    first = rng.choice(late)
    nodes = [first.src, first.dst]
    chosen: list[tuple[int, int, int]] = [first.triplet]
    frontier = adj[first.src] + adj[first.dst]
    while frontier and len(nodes) < n:
        s, d, lab = frontier.pop(rng.randrange(len(frontier)))
        new = d if s in nodes else s
        if new in nodes:
            continue
        nodes.append(new)
        chosen.append((s, d, lab))
        frontier.extend(adj[new])
    if len(nodes) < 3:
        return None
    inside = set(nodes)
    spare = [e for v in nodes for e in adj[v] if e[0] in inside and e[1] in inside and e not in chosen]
    rng.shuffle(spare)
    chosen += spare[:extra]
    rng.shuffle(chosen)
    index = {v: i for i, v in enumerate(nodes)}
    qedges = [
        QueryEdge(index[s], index[d], None if rng.random() < 0.6 else lab, rng.randrange(4) if timestamps else None)
        for s, d, lab in chosen
    ]
    return QueryGraph([labels[v] for v in nodes], qedges)


@dataclass
class Instance:
    query: QueryGraph
    labels: dict[int, int]
    events: list[StreamEvent]
    config: StreamConfig


def random_events(rng: random.Random, n_vertices: int, n_events: int, *, delete_ratio: float) -> list[StreamEvent]:
    live: list[tuple[int, int, int]] = []
    out = []
    for seq in range(n_events):
        if live and rng.random() < delete_ratio:
            s, d, lab = live.pop(rng.randrange(len(live)))
            out.append(StreamEvent(s, d, lab, seq, EventKind.DELETE, seq))
        else:
            e = (rng.randrange(n_vertices), rng.randrange(n_vertices), rng.randrange(2))
            if rng.random() < 0.1 and live:
                e = live[rng.randrange(len(live))]  # parallel edge
            live.append(e)
            out.append(StreamEvent(*e, seq, EventKind.INSERT, seq))
    return out


def random_instance(seed: int, stream_type: StreamType | None = None, *, timestamps: bool = False) -> Instance:
    rng = random.Random(seed)
    n_labels = rng.randint(1, 8)
    # few labels with a large query makes homomorphism counts explode
    qn = rng.randint(3, min(12, 4 + 2 * n_labels))
    n_vertices = rng.randint(10, 200)
    density = rng.uniform(1.0, 3.0) if n_labels > 2 else rng.uniform(0.6, 1.5)
    n_events = min(2000, int(n_vertices * density) + rng.randint(5, 60))
    labels = {v: rng.randrange(n_labels) for v in range(n_vertices)}
    st = stream_type or rng.choice(list(StreamType))
    batch = rng.choice([1, 4, 16, 64])
    ratio = 0.0 if st is StreamType.INSERT_ONLY else rng.uniform(0.05, 0.3)
    events = random_events(rng, n_vertices, n_events, delete_ratio=ratio)
    initial = n_events - rng.randint(min(n_events, 8), min(n_events, 4 * batch + 8))
    extra = rng.choice([0, 0, 1, 2])
    query = None
    window = max(2, n_events // rng.randint(2, 4))
    if rng.random() < 0.85:
        recent = window // 2 if st is StreamType.SLIDING_WINDOW else 0
        query = planted_query(
            rng, events, labels, qn, extra=extra, timestamps=timestamps, tail=initial, recent=recent
        )
    if query is None:
        query = random_query(rng, qn, n_labels, extra=extra, timestamps=timestamps)
    if st is StreamType.SLIDING_WINDOW:
        cfg = StreamConfig(st, parse_span(window), parse_span(max(1, window // rng.randint(1, 4))), batch, initial)
    else:
        cfg = StreamConfig(st, batch_size=batch, initial_load=initial)
    return Instance(query, labels, events, cfg)
