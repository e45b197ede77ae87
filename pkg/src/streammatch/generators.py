"""Synthetic streams: power-law, uniform with deletions, and churn."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import accumulate
from pathlib import Path
from typing import Iterable

# (src, dst, label, timestamp, is_delete)
Event = tuple[int, int, int, int, bool]


@dataclass
class GeneratedStream:
    events: list[Event]
    vertex_labels: dict[int, int]

    def lines(self) -> list[str]:
        out = []
        for s, d, lab, ts, dele in self.events:
            out.append(f"-{s} -{d} {lab} {ts}" if dele else f"{s} {d} {lab} {ts}")
        return out

    def write(self, path: str | Path, labels_path: str | Path | None = None) -> None:
        Path(path).write_text("\n".join(self.lines()) + ("\n" if self.events else ""))
        if labels_path is not None:
            write_vertex_labels(labels_path, self.vertex_labels)


def write_vertex_labels(path: str | Path, labels: dict[int, int]) -> None:
    Path(path).write_text("".join(f"{v} {lab}\n" for v, lab in sorted(labels.items())))


def read_vertex_labels(path: str | Path) -> dict[int, int]:
    out: dict[int, int] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        body = line.split("#", 1)[0].split()
        if not body:
            continue
        if len(body) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'vertex label'")
        out[int(body[0])] = int(body[1])
    return out


def _labels(rng: random.Random, n: int, k: int) -> dict[int, int]:
    return {v: rng.randrange(k) for v in range(n)}


def _check(n_vertices: int, n_edges: int, vertex_label_count: int, edge_label_count: int) -> None:
    if n_vertices < 1 or n_edges < 0:
        raise ValueError("need at least one vertex and a non-negative edge count")
    if vertex_label_count < 1 or edge_label_count < 1:
        raise ValueError("label counts must be at least 1")


def powerlaw(
    n_vertices: int,
    n_edges: int,
    *,
    exponent: float = 2.5,
    vertex_labels: int = 4,
    edge_labels: int = 2,
    seed: int = 0,
) -> GeneratedStream:
    """Insert-only stream whose expected degrees follow ``P(k) ~ k^-exponent`` (Chung-Lu weights)."""
    _check(n_vertices, n_edges, vertex_labels, edge_labels)
    if exponent <= 2.0:
        raise ValueError("exponent must exceed 2")
    rng = random.Random(seed)
    beta = 1.0 / (exponent - 1.0)
    weights = [(i + 1) ** -beta for i in range(n_vertices)]
    order = list(range(n_vertices))
    rng.shuffle(order)  # decouple ids from degree rank
    cum = list(accumulate(weights))
    labels = _labels(rng, n_vertices, vertex_labels)
    events: list[Event] = []
    for t in range(n_edges):
        s, d = rng.choices(order, cum_weights=cum, k=2)
        events.append((s, d, rng.randrange(edge_labels), t, False))
    return GeneratedStream(events, labels)


def uniform(
    n_vertices: int,
    n_edges: int,
    *,
    delete_ratio: float = 0.1,
    vertex_labels: int = 4,
    edge_labels: int = 2,
    seed: int = 0,
) -> GeneratedStream:
    """Uniform random endpoints; a ``delete_ratio`` share of events deletes a random live edge."""
    _check(n_vertices, n_edges, vertex_labels, edge_labels)
    if not 0.0 <= delete_ratio < 1.0:
        raise ValueError("delete ratio must be in [0, 1)")
    rng = random.Random(seed)
    labels = _labels(rng, n_vertices, vertex_labels)
    live: list[tuple[int, int, int]] = []
    events: list[Event] = []
    for t in range(n_edges):
        if live and rng.random() < delete_ratio:
            i = rng.randrange(len(live))
            live[i], live[-1] = live[-1], live[i]
            s, d, lab = live.pop()
            events.append((s, d, lab, t, True))
        else:
            s, d, lab = rng.randrange(n_vertices), rng.randrange(n_vertices), rng.randrange(edge_labels)
            live.append((s, d, lab))
            events.append((s, d, lab, t, False))
    return GeneratedStream(events, labels)


def churn(
    n_vertices: int,
    initial_edges: int,
    strides: int,
    per_stride: int,
    *,
    vertex_labels: int = 4,
    edge_labels: int = 2,
    seed: int = 0,
) -> GeneratedStream:
    """Steady-state churn over a fixed vertex set.

    The first ``initial_edges`` events build the graph.  Each following
    stride has ``per_stride`` inserts and then ``per_stride`` deletes of
    random live edges.  The inserts re-wire the previous stride's
    deletions: same source, fresh target.  Live edge count stays flat.
    """
    _check(n_vertices, initial_edges, vertex_labels, edge_labels)
    if strides < 0 or per_stride < 0:
        raise ValueError("strides and per-stride counts must be non-negative")
    rng = random.Random(seed)
    labels = _labels(rng, n_vertices, vertex_labels)
    live: list[tuple[int, int, int]] = []
    events: list[Event] = []
    t = 0
    for _ in range(initial_edges):
        e = (rng.randrange(n_vertices), rng.randrange(n_vertices), rng.randrange(edge_labels))
        live.append(e)
        events.append((*e, t, False))
        t += 1
    carry: list[tuple[int, int, int]] = []
    for _ in range(strides):
        fresh = [(s, rng.randrange(n_vertices), lab) for s, _, lab in carry]
        while len(fresh) < per_stride:
            fresh.append((rng.randrange(n_vertices), rng.randrange(n_vertices), rng.randrange(edge_labels)))
        for e in fresh:
            live.append(e)
            events.append((*e, t, False))
            t += 1
        carry = []
        for _ in range(min(per_stride, len(live))):
            i = rng.randrange(len(live))
            live[i], live[-1] = live[-1], live[i]
            e = live.pop()
            carry.append(e)
            events.append((*e, t, True))
            t += 1
    return GeneratedStream(events, labels)


def degree_exponent(degrees: Iterable[int], k_min: int = 2) -> float:
    """Discrete power-law exponent by maximum likelihood over degrees >= ``k_min``."""
    tail = [k for k in degrees if k >= k_min]
    if not tail:
        raise ValueError("no degrees at or above k_min")
    return 1.0 + len(tail) / sum(math.log(k / (k_min - 0.5)) for k in tail)
