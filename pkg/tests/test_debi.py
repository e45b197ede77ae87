import pytest
from hypothesis import given, strategies as st

from streammatch.debi import DebiError, DebiTable


def table(nodes: int = 7) -> DebiTable:
    # node 0 is the root; bits for nodes 1..n-1
    return DebiTable(list(range(1, nodes)), 0, nodes)


def test_payload_formula():
    t = table(7)
    t.ensure_slots(13)
    t.ensure_vertices(10)
    assert t.payload_bits == 13 * 6 + 10 == 88


@pytest.mark.parametrize("nodes", [2, 8, 9, 17])
def test_rows_are_byte_aligned(nodes):
    t = table(nodes)
    t.ensure_slots(5)
    assert t.row_bytes == -(-(nodes - 1) // 8)
    assert len(t._rows) == 5 * t.row_bytes


def test_row_write_read_and_clear():
    t = table()
    t.ensure_slots(12)
    t.row_write(11, 1, True)
    assert t.row_read(11, 1)
    assert not t.row_read(11, 2)
    assert t.set_bits() == {(11, 1)}
    t.clear_row(11)
    assert not t.row_read(11, 1)


def test_root_bit_lives_in_roots():
    t = table()
    t.ensure_slots(1)
    t.ensure_vertices(3)
    with pytest.raises(DebiError):
        t.row_write(0, 0, True)
    t.roots_access(2, True)
    assert t.roots_access(2) is True
    assert t.root_set_members() == {2}
    with pytest.raises(DebiError):
        t.roots_access(3)


def test_unallocated_slot_is_error():
    t = table()
    with pytest.raises(DebiError):
        t.row_read(0, 1)


def test_reset_all():
    t = table()
    t.ensure_slots(4)
    t.ensure_vertices(4)
    t.row_write(3, 6, True)
    t.root_set(1, True)
    t.reset_all()
    assert not t.set_bits() and not t.root_set_members()


@given(st.integers(2, 20), st.lists(st.tuples(st.integers(0, 49), st.integers(1, 19), st.booleans()), max_size=80))
def test_bits_are_independent(nodes, writes):
    t = table(nodes)
    t.ensure_slots(50)
    model = set()
    for eid, u, val in writes:
        u = 1 + (u - 1) % (nodes - 1)
        t.row_write(eid, u, val)
        (model.add if val else model.discard)((eid, u))
    assert t.set_bits() == model
