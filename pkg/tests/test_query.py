import random

import pytest
from hypothesis import given, settings, strategies as st

from streammatch.query import QueryError, build_plan, parse_query, query_from_edges, select_root
from tests.randomized import random_query


def test_parse_with_wildcards_and_timestamps():
    q = parse_query("# c\nv 10 1\nv 20 2\ne 10 20 * 5\ne 20 10 3\n")
    assert q.labels == [1, 2] and q.names == [10, 20]
    assert q.edges[0].label is None and q.edges[0].timestamp == 5
    assert q.edges[1].label == 3 and q.edges[1].timestamp is None
    assert not q.has_timestamps


@pytest.mark.parametrize(
    "text",
    ["v 0 0\n", "v 0 0\nv 1 0\n", "v 0 0\nv 0 1\ne 0 0 *\n", "v 0 0\nv 1 0\ne 0 2 *\n", "v 0 0\nv 1 0\nx\n", "v 0 a\n"],
)
def test_parse_errors(text):
    with pytest.raises(QueryError):
        parse_query(text)


def test_worked_example_plan(worked):
    plan = worked.plan
    q = worked.query
    as_pairs = lambda idx: [(q.edges[i].src, q.edges[i].dst) for i in idx]  # noqa: E731
    assert as_pairs(plan.tree_edges) == [(0, 1), (2, 0), (0, 5), (1, 3), (1, 4), (2, 6)]
    assert as_pairs(plan.non_tree_edges) == [(2, 5)]
    assert plan.children[0] == [1, 2, 5]
    assert plan.diameter == 4  # u3-u1-u0-u2-u6


def test_worked_example_orders(worked):
    plan = worked.plan
    # (u0,u1) first in the canonical order: its own edge, then the rest in BFS order
    assert plan.matching_order(1).tree_sequence == (1, 2, 3, 0, 4, 5)
    # a deep start climbs to the root before anything else
    assert plan.matching_order(0).tree_sequence[:2] == (0, 1)
    # the non-tree start binds the parents of both endpoints next
    assert plan.matching_order(6).sequence[:3] == (6, 3, 2)
    assert plan.mask_for(1).blocked == frozenset()
    assert plan.mask_for(6).blocked == frozenset(range(6))


def test_root_prefers_rare_well_connected_labels():
    q = query_from_edges([0, 1, 2], [(0, 1, None), (1, 2, None)])
    assert select_root(q, {0: 100, 1: 100, 2: 1}) == 2
    assert select_root(q, {0: 10, 1: 10, 2: 10}) == 1  # degree breaks the tie
    assert select_root(q, None) == 0


def test_requirements_count_labels_and_neighbours():
    q = query_from_edges([0, 1, 1], [(0, 1, 4), (0, 2, 4), (2, 0, None)])
    r = build_plan(q).requirements[0]
    assert r.out_edges == ((4, 2),) and r.out_total == 2
    assert r.out_nbrs == ((1, 2),) and r.in_nbrs == ((1, 1),)
    assert r.capped().out_edges == ((4, 1),)


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 12), st.integers(0, 4))
def test_orders_are_connected_permutations(seed, n, extra):
    q = random_query(random.Random(seed), n, 3, extra=extra if n > 2 else 0)
    plan = build_plan(q)
    assert sorted(plan.canonical_order) == list(range(q.num_edges))
    assert len(plan.tree_edges) == n - 1
    assert sorted(plan.node_of_bit) == sorted(set(range(n)) - {plan.root})
    for start in range(q.num_edges):
        order = plan.matching_order(start)
        assert order.sequence[0] == start
        assert sorted(order.sequence) == list(range(q.num_edges))
        bound = {q.edges[start].src, q.edges[start].dst}
        for qi in order.sequence[1:]:
            e = q.edges[qi]
            assert e.src in bound or e.dst in bound
            bound |= {e.src, e.dst}
