from __future__ import annotations

from streammatch.engine import Engine
from streammatch.query import QueryGraph
from streammatch.stream import Snapshot, StreamEvent


def run_batch(query: QueryGraph, labels: dict[int, int], edges, matcher: str = "iso", **kw):
    """Insert ``edges`` ((src, dst, label[, ts]) tuples) as one batch into an empty engine."""
    eng = Engine(query, matcher, vertex_labels=labels, **kw)
    eng.declare_vertices(sorted(labels))
    evs = [StreamEvent(e[0], e[1], e[2], e[3] if len(e) > 3 else i, seq=i) for i, e in enumerate(edges)]
    out = eng.process(Snapshot(0, evs))
    return eng, out
