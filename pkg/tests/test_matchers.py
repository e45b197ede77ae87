import random

import pytest
from hypothesis import given, settings, strategies as st

from streammatch.engine import Engine, EngineError
from streammatch.graph import EdgeRecord
from streammatch.matchers import dual_simulation, get_matcher, iso_edge_matcher
from streammatch.oracle import brute_force
from streammatch.query import QueryEdge, query_from_edges
from streammatch.stream import SnapshotGenerator, StreamType
from streammatch.verify import snapshot_of
from tests.helpers import run_batch
from tests.randomized import random_instance


def test_iso_edge_matcher():
    e = EdgeRecord(0, 0, 1, 3)
    assert iso_edge_matcher(e, 1, 2, QueryEdge(0, 1, 3), 1, 2)
    assert iso_edge_matcher(e, 1, 2, QueryEdge(0, 1, None), 1, 2)
    assert not iso_edge_matcher(e, 1, 2, QueryEdge(0, 1, 4), 1, 2)
    assert not iso_edge_matcher(e, 1, 1, QueryEdge(0, 1, 3), 1, 2)


def test_unknown_matcher():
    with pytest.raises(ValueError):
        get_matcher("strong")


def test_path_query_on_small_fixture():
    # v0 -x-> v1 -y-> v2 and v0 -y-> v2
    q = query_from_edges([0, 0, 0], [(0, 1, 0), (1, 2, 1)])
    _, out = run_batch(q, {0: 0, 1: 0, 2: 0}, [(0, 1, 0), (1, 2, 1), (0, 2, 1)])
    assert [e.edge_map for e in out] == [(0, 1)]


def test_homomorphism_may_fold_the_query():
    square = query_from_edges([0] * 4, [(0, 1, None), (1, 2, None), (2, 3, None), (3, 0, None)])
    edges = [(0, 1, 0), (1, 0, 0)]
    _, iso = run_batch(square, {0: 0, 1: 0}, edges, "iso")
    _, homo = run_batch(square, {0: 0, 1: 0}, edges, "homo")
    assert iso == []
    assert sorted(e.edge_map for e in homo) == [(0, 1, 0, 1), (1, 0, 1, 0)]


def test_homomorphism_reuses_one_edge():
    q = query_from_edges([0, 0, 0], [(0, 1, None), (2, 1, None)])
    _, homo = run_batch(q, {0: 0, 1: 0}, [(0, 1, 0)], "homo")
    assert [e.edge_map for e in homo] == [(0, 0)]


def test_temporal_order_is_enforced():
    q = query_from_edges([0, 0, 0], [(0, 1, None, 1), (1, 2, None, 2)])
    _, out = run_batch(q, {0: 0, 1: 0, 2: 0}, [(0, 1, 0, 50), (1, 2, 0, 10)], "tciso")
    assert out == []
    _, out = run_batch(q, {0: 0, 1: 0, 2: 0}, [(0, 1, 0, 10), (1, 2, 0, 50)], "tciso")
    assert len(out) == 1


def test_equal_query_timestamps_mean_no_constraint():
    q = query_from_edges([0, 0, 0], [(0, 1, None, 7), (1, 2, None, 7)])
    edges = [(0, 1, 0, 50), (1, 2, 0, 10), (2, 0, 0, 30)]
    _, tc = run_batch(q, {0: 0, 1: 0, 2: 0}, edges, "tciso")
    _, iso = run_batch(q, {0: 0, 1: 0, 2: 0}, edges, "iso")
    assert [e.edge_map for e in tc] == [e.edge_map for e in iso]


def test_tciso_needs_timestamps():
    q = query_from_edges([0, 0], [(0, 1, None)])
    with pytest.raises(EngineError):
        Engine(q, "tciso")


def test_dual_simulation_single_edge():
    q = query_from_edges([0, 1], [(0, 1, None)])
    eng, out = run_batch(q, {0: 0, 1: 1, 2: 0, 3: 1, 4: 0}, [(0, 1, 0), (2, 3, 0), (4, 4, 0)], "dualsim")
    assert out == []
    assert eng.relation.sets == [{0, 2}, {1, 3}]
    assert eng.relation.edge_relation(eng.plan, eng.graph) == {0: {0, 1}}


def test_dual_simulation_drops_vertex_without_witness():
    q = query_from_edges([0, 0, 0], [(0, 1, 0), (1, 2, 1)])
    eng, _ = run_batch(q, {0: 0, 1: 0, 2: 0, 3: 0}, [(0, 1, 0), (1, 2, 1), (3, 1, 0)], "dualsim")
    assert eng.relation.sets == [{0, 3}, {1}, {2}]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_dual_simulation_is_order_independent(seed):
    inst = random_instance(seed, StreamType.INSERT_ONLY)
    eng = Engine(inst.query, "dualsim", vertex_labels=inst.labels)
    eng.declare_vertices(sorted(inst.labels))
    eng.run(SnapshotGenerator(inst.config, inst.events))
    rng = random.Random(seed)
    base = eng.relation.sets
    for _ in range(3):
        order = list(range(inst.query.num_edges))
        rng.shuffle(order)
        assert dual_simulation(eng.plan, eng.graph, eng.debi, order=order).sets == base
    assert base == brute_force(snapshot_of(eng), inst.query, "dualsim")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_semantics_lattice(seed):
    inst = random_instance(seed, StreamType.INSERT_ONLY, timestamps=True)
    results = {}
    for m in ("tciso", "iso", "homo", "dualsim"):
        eng = Engine(inst.query, m, vertex_labels=inst.labels)
        eng.declare_vertices(sorted(inst.labels))
        results[m] = {e.edge_map for e in eng.run(SnapshotGenerator(inst.config, inst.events))}
        if m == "dualsim":
            sim = eng.relation.sets
        if m == "iso":
            iso_final = brute_force(snapshot_of(eng), inst.query, "iso")
            edge_of = {e.id: e for e in eng.graph.live_edges()}
    assert results["tciso"] <= results["iso"] <= results["homo"]
    for em in iso_final:
        for qi, eid in enumerate(em):
            qe = inst.query.edges[qi]
            assert edge_of[eid].src in sim[qe.src] and edge_of[eid].dst in sim[qe.dst]
