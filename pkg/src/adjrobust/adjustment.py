"""Collections of valid adjustment sets for the two testing strategies.

Two strategies are supported. ``all`` enumerates every valid adjustment
set up to a caller-supplied cap. ``minplus`` enumerates the minimal valid
adjustment sets with a separator-based algorithm, prunes them so each kept
set retains a node unique to it while the union of kept sets is preserved,
and appends the full non-forbidden set.

Minimal valid adjustment sets are exactly the inclusion-minimal
x-y vertex separators, avoiding forbidden nodes, of the moralized
ancestor-restricted proper back-door graph. The enumerator below walks
that separator lattice by branching on whether a pivot vertex belongs to
the separator, so sets are emitted one by one without materializing the
full subset lattice.
"""

from __future__ import annotations

import json
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum

from .errors import CapExceeded, EmptyInput, NotDescendant, ParseError
from .graph import (
    Dag,
    ancestors,
    d_separated,
    descendants,
    forbidden_nodes,
    non_forbidden_nodes,
    proper_backdoor_graph,
)

# subset enumeration beyond this many candidate nodes is refused outright
MAX_ENUMERATION_UNIVERSE = 20
DEFAULT_CAP = 10_000


class Strategy(str, Enum):
    ALL = "all"
    MIN_PLUS = "minplus"
    USER = "user"


def _canonical_key(s: frozenset[str]) -> tuple[int, tuple[str, ...]]:
    return (len(s), tuple(sorted(s)))


def _normalize_sets(sets: Iterable[Iterable[str]]) -> tuple[frozenset[str], ...]:
    unique = {frozenset(s) for s in sets}
    return tuple(sorted(unique, key=_canonical_key))


@dataclass(frozen=True)
class AdjustmentCollection:
    """Ordered, duplicate-free collection of adjustment sets for one pair.

    Sets are kept in a canonical order (by size, then lexicographically) so
    every downstream quantity is reproducible.
    """

    sets: tuple[frozenset[str], ...]
    strategy: Strategy
    x: str
    y: str

    def __post_init__(self):
        canon = _normalize_sets(self.sets)
        if canon != tuple(self.sets):
            object.__setattr__(self, "sets", canon)
        for s in self.sets:
            if self.x in s or self.y in s:
                raise ParseError(
                    f"set {sorted(s)} contains the treatment or outcome"
                )

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def to_json_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "sets": [sorted(s) for s in self.sets],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, payload: dict, x: str, y: str) -> "AdjustmentCollection":
        try:
            strategy = Strategy(payload.get("strategy", "user"))
            sets = [frozenset(map(str, s)) for s in payload["sets"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed adjustment collection: {exc}") from exc
        return cls(tuple(sets), strategy, x, y)


def as_set_list(
    zc: AdjustmentCollection | Sequence[Iterable[str]],
) -> list[frozenset[str]]:
    """Accept a collection or a raw sequence of sets (order preserved)."""
    if isinstance(zc, AdjustmentCollection):
        return list(zc.sets)
    return [frozenset(s) for s in zc]


def iter_valid_sets(g: Dag, x: str, y: str):
    """Yield valid adjustment sets for ``(x, y)`` one at a time.

    Subsets of the non-forbidden candidates are visited in a fixed
    depth-first order; use this when only the first few sets are needed.
    """
    candidates = sorted(non_forbidden_nodes(g, x, y) - {x, y})
    if len(candidates) > MAX_ENUMERATION_UNIVERSE:
        raise CapExceeded(
            f"{len(candidates)} candidate nodes, refusing subset enumeration"
        )
    # candidates avoid forbidden nodes, so only the blocking condition is left
    pbd = proper_backdoor_graph(g, x, y)

    def walk(i: int, current: tuple[str, ...]):
        if i == len(candidates):
            s = frozenset(current)
            if d_separated(pbd, x, y, s):
                yield s
            return
        yield from walk(i + 1, current)
        yield from walk(i + 1, current + (candidates[i],))

    yield from walk(0, ())


def enumerate_all_valid(
    g: Dag, x: str, y: str, cap: int = DEFAULT_CAP
) -> AdjustmentCollection:
    """All valid adjustment sets relative to ``(x, y)``.

    Raises :class:`CapExceeded` as soon as more than ``cap`` sets are found,
    so callers can fall back to the ``minplus`` strategy.
    """
    found: list[frozenset[str]] = []
    for s in iter_valid_sets(g, x, y):
        found.append(s)
        if len(found) > cap:
            raise CapExceeded(f"more than {cap} valid adjustment sets")
    return AdjustmentCollection(tuple(found), Strategy.ALL, x, y)


# ---------------------------------------------------------------------------
# minimal valid adjustment sets via minimal vertex separators
# ---------------------------------------------------------------------------


def _moral_adjacency(g: Dag, keep: frozenset[str]) -> dict[str, set[str]]:
    """Undirected moral graph of the induced subgraph on ``keep``.

    ``keep`` must be ancestrally closed in ``g`` so that every parent of a
    kept node is kept as well.
    """
    adj: dict[str, set[str]] = {v: set() for v in keep}
    for v in keep:
        ps = [p for p in g.parents_of(v) if p in keep]
        for p in ps:
            adj[v].add(p)
            adj[p].add(v)
        # marry parents that share the child v
        for i, p in enumerate(ps):
            for q in ps[i + 1 :]:
                adj[p].add(q)
                adj[q].add(p)
    return adj


def _component(adj: dict[str, set[str]], start: str, removed: frozenset[str]) -> set[str]:
    comp = {start}
    queue = deque((start,))
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in removed and w not in comp:
                comp.add(w)
                queue.append(w)
    return comp


def _is_separator(adj, x: str, y: str, s: frozenset[str]) -> bool:
    return y not in _component(adj, x, s)


def _pinned(adj: dict[str, set[str]], pins: frozenset[str], x: str, y: str):
    """Copy of ``adj`` with every pin joined to both x and y.

    Any x-y separator of the pinned graph must contain every pin, which
    forces the pins into the separators found downstream.
    """
    out = {v: set(nb) for v, nb in adj.items()}
    for p in pins:
        out[p] |= {x, y}
        out[x].add(p)
        out[y].add(p)
    return out


def _minimalize(adj, x: str, y: str, s: frozenset[str]) -> frozenset[str]:
    """Shrink a separator to a minimal one via two neighbourhood sweeps."""
    comp_x = _component(adj, x, s)
    s1 = frozenset(v for v in s if adj[v] & comp_x)
    comp_y = _component(adj, y, s1)
    return frozenset(v for v in s1 if adj[v] & comp_y)


def _minimal_separators(
    adj: dict[str, set[str]],
    x: str,
    y: str,
    pinned: frozenset[str],
    allowed: frozenset[str],
):
    """Yield every inclusion-minimal x-y separator S, pinned <= S <= allowed.

    Branches on a pivot node of a constrained-minimal witness separator:
    one branch forces the pivot into the separator, the other removes it
    from the allowed pool, so each minimal separator is produced exactly
    once. A leaf is emitted only after an explicit minimality check, which
    keeps forced pins from smuggling in non-minimal sets.
    """
    work = _pinned(adj, pinned, x, y) if pinned else adj
    if not _is_separator(work, x, y, allowed):
        return
    witness = _minimalize(work, x, y, allowed)
    if witness == pinned:
        if _minimalize(adj, x, y, pinned) == pinned:
            yield pinned
        return
    pivot = min(witness - pinned)
    yield from _minimal_separators(adj, x, y, pinned | {pivot}, allowed)
    yield from _minimal_separators(adj, x, y, pinned, allowed - {pivot})


def enumerate_minimal_valid(g: Dag, x: str, y: str) -> AdjustmentCollection:
    """Exactly the minimal valid adjustment sets relative to ``(x, y)``.

    Works on the moralized ancestor-restricted proper back-door graph,
    where minimal valid adjustment sets and minimal forbidden-free vertex
    separators coincide.
    """
    if y not in descendants(g, x):
        raise NotDescendant(f"{y} is not a descendant of {x}")
    pbd = proper_backdoor_graph(g, x, y)
    anc = ancestors(pbd, (x, y))
    adj = _moral_adjacency(pbd, anc)
    allowed = frozenset(anc - forbidden_nodes(g, x, y) - {x, y})
    sets = tuple(_minimal_separators(adj, x, y, frozenset(), allowed))
    return AdjustmentCollection(sets, Strategy.USER, x, y)


def prune_distinct(minimal: AdjustmentCollection) -> AdjustmentCollection:
    """Sub-collection where every member keeps a node unique to it.

    Greedy cover: repeatedly keep the set contributing the most uncovered
    nodes (ties broken by the canonical order) until the union of the input
    is covered, then drop any set whose nodes are all covered by the other
    kept sets. The result covers the same node union as the input and every
    kept set retains a unique node; both conditions are re-verified before
    returning.
    """
    if not minimal.sets:
        raise EmptyInput("nothing to prune")
    universe = frozenset().union(*minimal.sets)
    remaining = list(minimal.sets)
    kept: list[frozenset[str]] = []
    covered: set[str] = set()
    while covered != universe:
        best = None
        best_gain = -1
        for s in remaining:
            gain = len(s - covered)
            if gain > best_gain:
                best, best_gain = s, gain
        assert best is not None and best_gain > 0
        kept.append(best)
        covered |= best
        remaining.remove(best)

    changed = True
    while changed:
        changed = False
        for s in list(kept):
            others = set().union(*(t for t in kept if t is not s)) if len(kept) > 1 else set()
            if s <= others:
                kept.remove(s)
                changed = True
                break

    union_kept = set().union(*kept)
    assert union_kept == universe
    for s in kept:
        others = set().union(*(t for t in kept if t is not s)) if len(kept) > 1 else set()
        assert s - others, "pruned set lost its unique node"
    return AdjustmentCollection(tuple(kept), minimal.strategy, minimal.x, minimal.y)


def min_plus_collection(g: Dag, x: str, y: str) -> AdjustmentCollection:
    """Pruned minimal valid adjustment sets plus the non-forbidden set."""
    if y not in descendants(g, x):
        raise NotDescendant(f"{y} is not a descendant of {x}")
    pruned = prune_distinct(enumerate_minimal_valid(g, x, y))
    big = frozenset(non_forbidden_nodes(g, x, y) - {x, y})
    sets = pruned.sets + (big,)
    return AdjustmentCollection(sets, Strategy.MIN_PLUS, x, y)


def x_connected_remainder(g: Dag, x: str, y: str, zc: AdjustmentCollection) -> bool:
    """Heuristic full-rank check for a min-plus collection.

    True when the non-forbidden nodes left out of the smaller sets are
    still d-connected to the treatment marginally. When it fails, the
    asymptotic covariance of the stacked estimators may be singular even
    though each set is valid.
    """
    big = frozenset(non_forbidden_nodes(g, x, y) - {x, y})
    small = [s for s in zc.sets if s != big]
    leftover = big - (frozenset().union(*small) if small else frozenset())
    if not leftover:
        return False
    return not d_separated(g, x, leftover)
