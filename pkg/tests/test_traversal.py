"""Combinator semantics on small hand-built graphs."""
import pytest

from epg.errors import PredicateError, UnknownLabel
from epg.graph import PropertyGraph
from epg.traversal import compose, filter_, in_, out_, repeat, repeat_exclusive, tcon


def call_triangle():
    """Sender calls one contract, which calls another, which calls back."""
    g = PropertyGraph()
    eoa = g.add_vertex("contract", address="0x" + "ab" * 20)
    bar = g.add_vertex("contract", address="0x" + "ba" * 20)
    foo = g.add_vertex("contract", address="0x" + "f0" * 20)
    g.add_edge(eoa, bar, "CT:CALL")
    g.add_edge(bar, foo, "CT:CALL")
    g.add_edge(foo, bar, "CT:CALL")
    return g, eoa, bar, foo


def test_filter_identity_and_empty():
    g, eoa, bar, foo = call_triangle()
    everything = frozenset({eoa, bar, foo})
    assert filter_(g, lambda v: True)(everything) == everything
    assert filter_(g, lambda v: False)(everything) == frozenset()


def test_filter_by_address():
    g, eoa, bar, foo = call_triangle()
    t = filter_(g, lambda v: v.props["address"] == "0x" + "f0" * 20)
    assert t(frozenset({eoa, bar, foo})) == frozenset({foo})


def test_filter_wraps_predicate_failures():
    g, eoa, *_ = call_triangle()
    t = filter_(g, lambda v: v.props["missing"])
    with pytest.raises(PredicateError):
        t(frozenset({eoa}))


def test_out_and_in_one_hop():
    g, eoa, bar, foo = call_triangle()
    assert out_(g, {"CT:CALL"})(frozenset({eoa})) == frozenset({bar})
    assert in_(g, {"CT:CALL"})(frozenset({bar})) == frozenset({eoa, foo})
    assert out_(g, {"CT:CALL"})(frozenset()) == frozenset()


def test_unknown_label_rejected_eagerly():
    g, *_ = call_triangle()
    with pytest.raises(UnknownLabel):
        out_(g, {"CT:CALL", "NOPE"})
    with pytest.raises(UnknownLabel):
        in_(g, {"NOPE"})


def test_repeat_reaches_everything_from_sender():
    g, eoa, bar, foo = call_triangle()
    t = repeat(out_(g, {"CT:CALL"}))
    assert t(frozenset({eoa})) == frozenset({eoa, bar, foo})


def test_repeat_is_idempotent_and_monotone():
    g, eoa, bar, foo = call_triangle()
    t = repeat(out_(g, {"CT:CALL"}))
    once = t(frozenset({eoa}))
    assert frozenset({eoa}) <= once
    assert t(once) == once


def test_repeat_on_fixpoint_is_identity():
    g, eoa, bar, foo = call_triangle()
    cycle = frozenset({bar, foo})
    assert repeat(out_(g, {"CT:CALL"}))(cycle) == cycle
    assert repeat_exclusive(out_(g, {"CT:CALL"}))(cycle) == frozenset()


def test_repeat_terminates_on_cycles():
    g = PropertyGraph()
    v = [g.add_vertex("block", pc=i) for i in range(3)]
    for i in range(3):
        g.add_edge(v[i], v[(i + 1) % 3], "JUMP")
    t = repeat(out_(g, {"JUMP"}))
    assert t(frozenset({v[0]})) == frozenset(v)
    assert repeat_exclusive(out_(g, {"JUMP"}))(frozenset({v[0]})) == frozenset(v[1:])


def test_tcon_follows_every_call_label():
    g, eoa, bar, foo = call_triangle()
    extra = g.add_vertex("contract", address="0x" + "cc" * 20)
    g.add_edge(foo, extra, "CT:DELEGATECALL")
    assert tcon(g)(frozenset({eoa})) == frozenset({eoa, bar, foo, extra})


def test_compose_applies_right_to_left():
    g, eoa, bar, foo = call_triangle()
    hop = out_(g, {"CT:CALL"})
    keep_foo = filter_(g, lambda v: v.vid == foo)
    # First hop from EOA, then hop again, then keep only Foo.
    t = compose(keep_foo, hop, hop)
    assert t(frozenset({eoa})) == frozenset({foo})
    assert compose(filter_(g, lambda v: True), hop)(frozenset({eoa})) == hop(
        frozenset({eoa})
    )
    assert compose(hop, hop)(frozenset()) == frozenset()


def test_out_in_duality():
    g, eoa, bar, foo = call_triangle()
    vertices = (eoa, bar, foo)
    for u in vertices:
        for v in vertices:
            forward = u in out_(g, {"CT:CALL"})(frozenset({v}))
            backward = v in in_(g, {"CT:CALL"})(frozenset({u}))
            assert forward == backward
