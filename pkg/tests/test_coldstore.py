import os

import pytest
from hypothesis import given, strategies as st

from streammatch.coldstore import ColdStore, ColdStoreError, SpillConfig, decode_record, encode_record
from streammatch.debi import DebiTable
from streammatch.engine import Engine
from streammatch.graph import DynamicGraph, EdgeRecord, GraphError
from streammatch.query import query_from_edges
from streammatch.stream import SnapshotGenerator, StreamConfig, StreamType
from tests.randomized import random_instance


@given(
    st.integers(0, 2**64 - 1),
    st.integers(0, 2**64 - 1),
    st.integers(0, 2**64 - 1),
    st.integers(0, 2**32 - 1),
    st.integers(0, 2**64 - 1),
    st.binary(min_size=3, max_size=3),
)
def test_record_round_trip(eid, src, dst, label, ts, row):
    rec = EdgeRecord(eid, src, dst, label, ts)
    back, row2 = decode_record(encode_record(rec, row), 0, 3)
    assert back == rec and row2 == row


def _graph(n_edges: int = 100):
    g = DynamicGraph()
    g.ensure_vertex(9)
    t = DebiTable([1, 2], 0, 3)
    for i in range(n_edges):
        g.insert_edge(i % 10, (3 * i + 1) % 10, i % 3, i)
    t.ensure_slots(g.num_slots)
    t.ensure_vertices(10)
    for i in range(n_edges):
        t.row_write(i, 1 + i % 2, True)
    return g, t


def test_evict_keeps_everything_reachable(tmp_path):
    g, t = _graph()
    before = {v: sorted(e.id for e in g.adjacency(v, d)) for v in range(10) for d in ("out",)}
    store = ColdStore(tmp_path, t.row_bytes, buffer_capacity=512)
    g.cold = store
    assert store.evict(g, t, 0) == 0
    assert store.evict(g, t, 60) == 60
    assert store.size() == 60 and g.live_count == 100
    g.check_invariants()
    after = {v: sorted(e.id for e in g.adjacency(v, "out")) for v in range(10)}
    assert after == before
    assert sum(len(g.adjacency(v, "in")) for v in range(10)) == 100
    assert g.edge(5).timestamp == 5 and g.is_live(5)
    with pytest.raises(GraphError):
        g.delete_edge(5)


def test_fetch_cold_rows_and_restart(tmp_path):
    g, t = _graph(30)
    store = ColdStore(tmp_path, t.row_bytes, buffer_capacity=256)
    g.cold = store
    store.evict(g, t, 30)
    assert store.fetch_cold(99, "out") == []
    got = store.fetch_cold(0, "out")
    assert [e.id for e, _ in got] == [0, 10, 20]
    assert all(row == t.row(e.id) for e, row in got)
    store.close()
    again = ColdStore.open(tmp_path, t.row_bytes)
    assert again.fetch_cold(0, "out") == got
    assert all(again.fetch_cold(v, d) == store.fetch_cold(v, d) for v in range(10) for d in ("out", "in"))


def test_missing_segment_is_corruption(tmp_path):
    g, t = _graph(10)
    store = ColdStore(tmp_path, t.row_bytes, buffer_capacity=1)
    g.cold = store
    store.evict(g, t, 10)
    store.close()
    os.remove(next(tmp_path.glob("segment-*.log")))
    with pytest.raises(ColdStoreError):
        ColdStore.open(tmp_path, t.row_bytes)


def test_failed_flush_leaves_graph_untouched(tmp_path, monkeypatch):
    g, t = _graph(20)
    store = ColdStore(tmp_path, t.row_bytes, buffer_capacity=1)
    g.cold = store

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(ColdStoreError):
        store.evict(g, t, 10)
    assert store.size() == 0 and all(g.edges[i] is not None for i in range(20))
    assert store.fetch_cold(0, "out") == []
    g.check_invariants()


def test_spill_config_validation(tmp_path):
    with pytest.raises(ValueError):
        SpillConfig(0, tmp_path)


def test_spill_is_transparent(tmp_path):
    inst = random_instance(3, StreamType.INSERT_ONLY)
    logs = []
    for spill in (None, SpillConfig(max(1, len(inst.events) // 4), tmp_path, buffer_capacity=2048)):
        eng = Engine(inst.query, "iso", vertex_labels=inst.labels, spill=spill)
        eng.declare_vertices(sorted(inst.labels))
        cfg = StreamConfig(batch_size=4)
        logs.append([eng.format(e) for e in eng.run(SnapshotGenerator(cfg, inst.events))])
        eng.close()
    assert logs[0] == logs[1]


def test_cold_delete_reports_error(tmp_path):
    from streammatch.engine import EngineError
    from streammatch.stream import read_events

    q = query_from_edges([0, 0], [(0, 1, None)])
    eng = Engine(q, "iso", spill=SpillConfig(1, tmp_path))
    cfg = StreamConfig(StreamType.INSERT_DELETE, batch_size=1)
    with pytest.raises(EngineError):
        eng.run(SnapshotGenerator(cfg, read_events(["0 1 0", "1 2 0", "-0 -1 0"])))
