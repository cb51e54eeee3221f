"""Composable set-to-set traversals over a frozen property graph.

Every combinator returns a pure function from a vertex set to a vertex
set, so pipelines can be chained and re-run freely. Recursion is
realized as monotone accumulation to a fixed point, which terminates on
any finite graph, cycles included.
"""
from __future__ import annotations

from typing import Callable, Iterable

from .errors import PredicateError
from .graph import PropertyGraph

VertexSet = frozenset
Traversal = Callable[[VertexSet], VertexSet]


def filter_(graph: PropertyGraph, pred) -> Traversal:
    """Keeps the vertices whose Vertex record satisfies pred."""

    def traverse(vset: VertexSet) -> VertexSet:
        result = set()
        for vid in vset:
            try:
                keep = pred(graph.vertex(vid))
            except Exception as exc:
                raise PredicateError(
                    f"predicate failed on vertex {vid}: {exc!r}"
                ) from exc
            if keep:
                result.add(vid)
        return frozenset(result)

    return traverse


def out_(graph: PropertyGraph, labels: Iterable[str]) -> Traversal:
    """Heads of matching edges whose tail is in the input set."""
    wanted = graph.check_labels(labels)

    def traverse(vset: VertexSet) -> VertexSet:
        result = set()
        for vid in vset:
            for edge in graph.out_edges(vid, wanted):
                result.add(edge.dst)
        return frozenset(result)

    return traverse


def in_(graph: PropertyGraph, labels: Iterable[str]) -> Traversal:
    """Tails of matching edges whose head is in the input set."""
    wanted = graph.check_labels(labels)

    def traverse(vset: VertexSet) -> VertexSet:
        result = set()
        for vid in vset:
            for edge in graph.in_edges(vid, wanted):
                result.add(edge.src)
        return frozenset(result)

    return traverse


def repeat(t: Traversal) -> Traversal:
    """Least superset of the input closed under t."""

    def traverse(vset: VertexSet) -> VertexSet:
        acc = frozenset(vset)
        while True:
            grown = acc | t(acc)
            if grown == acc:
                return acc
            acc = grown

    return traverse


def repeat_exclusive(t: Traversal) -> Traversal:
    """repeat(t) minus the input set itself."""
    closed = repeat(t)

    def traverse(vset: VertexSet) -> VertexSet:
        vset = frozenset(vset)
        return closed(vset) - vset

    return traverse


def tcon(graph: PropertyGraph) -> Traversal:
    """Transitive closure along call edges (all descendant calls)."""
    ct_labels = {label for label in graph.labels if label.startswith("CT:")}
    return repeat(out_(graph, ct_labels))


def compose(*traversals: Traversal) -> Traversal:
    """Right-to-left chaining: compose(t1, t2)(V) = t1(t2(V))."""

    def traverse(vset: VertexSet) -> VertexSet:
        for t in reversed(traversals):
            vset = t(vset)
        return vset

    return traverse
