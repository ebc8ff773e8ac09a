"""Directed acyclic graphs and the graphical side of covariate adjustment.

The central object is :class:`Dag`, an immutable simple directed graph over
string-labelled nodes that is validated to be acyclic at construction. On
top of it this module provides the primitives needed to reason about
total-effect estimation: reachability, d-separation, causal and forbidden
nodes relative to a treatment/outcome pair, and the adjustment criterion.

d-separation is decided by a linear-time reachability sweep over
(node, travel direction) states rather than by path enumeration; the two
are equivalent, and the test suite checks the sweep against a brute-force
path enumerator on small graphs.

All operations are pure functions over immutable graphs and are safe to
call concurrently.
"""

from __future__ import annotations

import heapq
from collections import deque
from collections.abc import Iterable

from .errors import (
    CycleDetected,
    DuplicateEdge,
    DuplicateNode,
    OverlappingSets,
    ParseError,
    UnknownNode,
    XYInZ,
)

Edge = tuple[str, str]


def _as_labels(value: str | Iterable[str]) -> frozenset[str]:
    # strings are a single node, not an iterable of characters
    if isinstance(value, str):
        return frozenset((value,))
    return frozenset(value)


class Dag:
    """Immutable simple directed acyclic graph over named nodes."""

    __slots__ = ("_nodes", "_node_set", "_parents", "_children", "_topo")

    def __init__(self, nodes: Iterable[str], edges: Iterable[Edge] = ()):
        node_list = [str(v) for v in nodes]
        if len(set(node_list)) != len(node_list):
            raise DuplicateNode("node labels must be unique")
        self._nodes = tuple(node_list)
        self._node_set = frozenset(node_list)
        parents: dict[str, set[str]] = {v: set() for v in node_list}
        children: dict[str, set[str]] = {v: set() for v in node_list}
        seen: set[Edge] = set()
        for a, b in edges:
            if a not in self._node_set or b not in self._node_set:
                raise UnknownNode(f"edge ({a}, {b}) references an undeclared node")
            if a == b:
                raise CycleDetected(f"self-loop at {a}")
            if (a, b) in seen:
                raise DuplicateEdge(f"edge ({a}, {b}) given twice")
            seen.add((a, b))
            children[a].add(b)
            parents[b].add(a)
        self._parents = {v: frozenset(ps) for v, ps in parents.items()}
        self._children = {v: frozenset(cs) for v, cs in children.items()}
        self._topo = self._topological_order()

    def _topological_order(self) -> tuple[str, ...]:
        # Kahn's algorithm with a heap so the order is canonical.
        indeg = {v: len(self._parents[v]) for v in self._nodes}
        ready = [v for v in self._nodes if indeg[v] == 0]
        heapq.heapify(ready)
        order: list[str] = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) != len(self._nodes):
            raise CycleDetected("edge set admits no topological order")
        return tuple(order)

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._nodes

    @property
    def edges(self) -> frozenset[Edge]:
        return frozenset(
            (p, c) for c in self._nodes for p in self._parents[c]
        )

    @property
    def topological_order(self) -> tuple[str, ...]:
        return self._topo

    def has_node(self, v: str) -> bool:
        return v in self._node_set

    def parents_of(self, v: str) -> frozenset[str]:
        self._require(v)
        return self._parents[v]

    def children_of(self, v: str) -> frozenset[str]:
        self._require(v)
        return self._children[v]

    def _require(self, v: str) -> None:
        if v not in self._node_set:
            raise UnknownNode(f"unknown node {v!r}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self._node_set == other._node_set and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self._node_set, self.edges))

    def __repr__(self) -> str:
        return f"Dag({len(self._nodes)} nodes, {sum(len(p) for p in self._parents.values())} edges)"


def build_dag(nodes: Iterable[str], edges: Iterable[Edge] = ()) -> Dag:
    """Validate and build a :class:`Dag`; the topological order is cached."""
    return Dag(nodes, edges)


def _check_known(g: Dag, labels: Iterable[str]) -> None:
    for v in labels:
        g._require(v)


def _closure(g: Dag, start: frozenset[str], step) -> frozenset[str]:
    out = set(start)
    queue = deque(start)
    while queue:
        v = queue.popleft()
        for w in step(v):
            if w not in out:
                out.add(w)
                queue.append(w)
    return frozenset(out)


def descendants(g: Dag, s: str | Iterable[str]) -> frozenset[str]:
    """Reflexive-transitive closure along directed edges; contains ``s``."""
    s = _as_labels(s)
    _check_known(g, s)
    return _closure(g, s, g.children_of)


def ancestors(g: Dag, s: str | Iterable[str]) -> frozenset[str]:
    """Reflexive-transitive closure against directed edges; contains ``s``."""
    s = _as_labels(s)
    _check_known(g, s)
    return _closure(g, s, g.parents_of)


def parents(g: Dag, s: str | Iterable[str]) -> frozenset[str]:
    """Union of the immediate parents of the given nodes."""
    s = _as_labels(s)
    _check_known(g, s)
    out: set[str] = set()
    for v in s:
        out |= g.parents_of(v)
    return frozenset(out)


def children(g: Dag, s: str | Iterable[str]) -> frozenset[str]:
    """Union of the immediate children of the given nodes."""
    s = _as_labels(s)
    _check_known(g, s)
    out: set[str] = set()
    for v in s:
        out |= g.children_of(v)
    return frozenset(out)


def d_separated(
    g: Dag,
    a: str | Iterable[str],
    b: str | Iterable[str],
    z: str | Iterable[str] = (),
) -> bool:
    """Decide whether ``a`` and ``b`` are d-separated given ``z``.

    A path is blocked when it carries a non-collider in ``z`` or a collider
    with no descendant in ``z``; the sets are d-separated when every path
    between them is blocked. Implemented as a reachability sweep over
    (node, direction) states, which visits each edge at most twice.
    """
    a = _as_labels(a)
    b = _as_labels(b)
    z = _as_labels(z)
    _check_known(g, a | b | z)
    if a & b or a & z or b & z:
        raise OverlappingSets("a, b and z must be pairwise disjoint")

    # colliders open exactly when they have a descendant in z
    opened = ancestors(g, z) if z else frozenset()

    # direction "up": the trail arrived from a child (or from the virtual
    # start); direction "down": it arrived from a parent.
    stack: list[tuple[str, str]] = [(s, "up") for s in sorted(a)]
    visited: set[tuple[str, str]] = set()
    while stack:
        state = stack.pop()
        if state in visited:
            continue
        visited.add(state)
        v, direction = state
        if v in b:
            return False
        if direction == "up" and v not in z:
            for p in g.parents_of(v):
                stack.append((p, "up"))
            for c in g.children_of(v):
                stack.append((c, "down"))
        elif direction == "down":
            if v not in z:
                for c in g.children_of(v):
                    stack.append((c, "down"))
            if v in opened:
                for p in g.parents_of(v):
                    stack.append((p, "up"))
    return True


def causal_nodes(g: Dag, x: str, y: str) -> frozenset[str]:
    """Nodes on directed paths from ``x`` to ``y``, excluding ``x``.

    Empty whenever ``y`` is not a descendant of ``x``.
    """
    _check_known(g, (x, y))
    de_x = descendants(g, x)
    if y not in de_x:
        return frozenset()
    an_y = ancestors(g, y)
    return (de_x & an_y) - {x}


def forbidden_nodes(g: Dag, x: str, y: str) -> frozenset[str]:
    """Descendants of the causal nodes plus the treatment itself.

    These nodes may never be adjusted for.
    """
    cn = causal_nodes(g, x, y)
    if not cn:
        return frozenset((x,))
    return descendants(g, cn) | {x}


def non_forbidden_nodes(g: Dag, x: str, y: str) -> frozenset[str]:
    """Complement of :func:`forbidden_nodes` within the graph's nodes."""
    return frozenset(g.nodes) - forbidden_nodes(g, x, y)


def proper_backdoor_graph(g: Dag, x: str, y: str) -> Dag:
    """Copy of ``g`` with the first edge of every directed x-to-y path removed."""
    cn = causal_nodes(g, x, y)
    removed = {(x, c) for c in g.children_of(x) if c in cn}
    if not removed:
        return g
    return Dag(g.nodes, g.edges - removed)


def is_valid_adjustment_set(
    g: Dag, x: str, y: str, z: str | Iterable[str]
) -> bool:
    """Adjustment criterion for ``z`` relative to ``(x, y)``.

    ``z`` must avoid the forbidden nodes and block every non-causal path
    between ``x`` and ``y``; the second condition is decided as
    d-separation in the proper back-door graph.
    """
    z = _as_labels(z)
    _check_known(g, z | {x, y})
    if x in z or y in z:
        raise XYInZ("z must not contain the treatment or the outcome")
    if z & forbidden_nodes(g, x, y):
        return False
    return d_separated(proper_backdoor_graph(g, x, y), x, y, z)


# ---------------------------------------------------------------------------
# text format: one edge per line "A -> B", isolated nodes as "node C",
# comment lines start with "#"
# ---------------------------------------------------------------------------


def parse_graph(text: str) -> Dag:
    """Parse the edge-list text format into a :class:`Dag`."""
    nodes: list[str] = []
    seen: set[str] = set()
    edges: list[Edge] = []

    def note(v: str) -> None:
        if v not in seen:
            seen.add(v)
            nodes.append(v)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) == 2 and tokens[0] == "node":
            note(tokens[1])
        elif len(tokens) == 3 and tokens[1] == "->":
            note(tokens[0])
            note(tokens[2])
            edges.append((tokens[0], tokens[2]))
        else:
            raise ParseError(f"line {lineno}: cannot parse {raw!r}")
    try:
        return Dag(sorted(nodes), edges)
    except (CycleDetected, DuplicateEdge, DuplicateNode, UnknownNode) as exc:
        raise ParseError(str(exc)) from exc


def format_graph(g: Dag) -> str:
    """Canonical text form; ``parse_graph`` round-trips it exactly."""
    lines: list[str] = []
    connected = {v for e in g.edges for v in e}
    for v in sorted(set(g.nodes) - connected):
        lines.append(f"node {v}")
    for a, b in sorted(g.edges):
        lines.append(f"{a} -> {b}")
    return "\n".join(lines) + ("\n" if lines else "")
