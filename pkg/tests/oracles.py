"""Brute-force reference implementations.

Everything here re-derives graph and regression facts from first
principles (path enumeration, textbook formulas, numeric integration) and
deliberately shares no code with the production algorithms it checks.
"""

import math

import numpy as np
from scipy.integrate import quad

from adjrobust import Dag
from adjrobust.sem import SemModel


def _descendants(g: Dag, v: str) -> set[str]:
    out = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for c in g.children_of(u):
            if c not in out:
                out.add(c)
                stack.append(c)
    return out


def iter_paths(g: Dag, start: str, end: str):
    """All simple paths between start and end over the skeleton."""
    neighbors = {
        v: sorted(g.parents_of(v) | g.children_of(v)) for v in g.nodes
    }

    def walk(path):
        v = path[-1]
        if v == end:
            yield list(path)
            return
        for w in neighbors[v]:
            if w not in path:
                path.append(w)
                yield from walk(path)
                path.pop()

    yield from walk([start])


def path_blocked(g: Dag, path: list[str], z: set[str]) -> bool:
    """Two-condition blocking test applied literally to one path."""
    edges = g.edges
    for i in range(1, len(path) - 1):
        into_left = (path[i - 1], path[i]) in edges
        into_right = (path[i + 1], path[i]) in edges
        if into_left and into_right:  # collider
            if not (_descendants(g, path[i]) & z):
                return True
        else:
            if path[i] in z:
                return True
    return False


def d_separated_bruteforce(g: Dag, a, b, z) -> bool:
    a = {a} if isinstance(a, str) else set(a)
    b = {b} if isinstance(b, str) else set(b)
    z = {z} if isinstance(z, str) else set(z)
    for x in a:
        for y in b:
            for path in iter_paths(g, x, y):
                if not path_blocked(g, path, z):
                    return False
    return True


def iter_directed_paths(g: Dag, x: str, y: str):
    def walk(path):
        v = path[-1]
        if v == y:
            yield list(path)
            return
        for c in sorted(g.children_of(v)):
            if c not in path:
                path.append(c)
                yield from walk(path)
                path.pop()

    yield from walk([x])


def forbidden_bruteforce(g: Dag, x: str, y: str) -> set[str]:
    causal = set()
    for path in iter_directed_paths(g, x, y):
        causal.update(path[1:])
    forb = {x}
    for v in causal:
        forb |= _descendants(g, v)
    return forb


def valid_adjustment_bruteforce(g: Dag, x: str, y: str, z) -> bool:
    """Adjustment criterion checked by classifying every path."""
    z = set(z)
    if z & forbidden_bruteforce(g, x, y):
        return False
    directed = {tuple(p) for p in iter_directed_paths(g, x, y)}
    for path in iter_paths(g, x, y):
        if tuple(path) in directed:
            continue
        if not path_blocked(g, path, z):
            return False
    return True


def all_valid_sets_bruteforce(g: Dag, x: str, y: str) -> set[frozenset]:
    # paths and node roles are classified once, subsets only test blocking
    forb = forbidden_bruteforce(g, x, y)
    directed = {tuple(p) for p in iter_directed_paths(g, x, y)}
    edges = g.edges
    desc = {v: frozenset(_descendants(g, v)) for v in g.nodes}
    classified = []
    for p in iter_paths(g, x, y):
        if tuple(p) in directed:
            continue
        row = []
        for i in range(1, len(p) - 1):
            collider = (p[i - 1], p[i]) in edges and (p[i + 1], p[i]) in edges
            row.append((p[i], collider))
        classified.append(row)

    def blocked(row, z):
        for node, collider in row:
            if collider:
                if not (desc[node] & z):
                    return True
            elif node in z:
                return True
        return False

    candidates = sorted(set(g.nodes) - {x, y})
    found = set()
    for mask in range(2 ** len(candidates)):
        z = frozenset(
            candidates[i] for i in range(len(candidates)) if mask >> i & 1
        )
        if z & forb:
            continue
        if all(blocked(row, z) for row in classified):
            found.add(z)
    return found


def minimal_elements(sets) -> set[frozenset]:
    sets = set(sets)
    return {
        s for s in sets if not any(t < s for t in sets)
    }


def wright_total_effect(m: SemModel, x: str, y: str) -> float:
    """Sum of edge-coefficient products over directed x-to-y paths."""
    total = 0.0
    for path in iter_directed_paths(m.graph, x, y):
        prod = 1.0
        for a, b in zip(path, path[1:]):
            prod *= m.coefficients[(a, b)]
        total += prod
    return total


def partial_correlation(sigma: np.ndarray, i: int, j: int, ks: list[int]) -> float:
    sel = [i, j]
    block = sigma[np.ix_(sel, sel)]
    if ks:
        cross = sigma[np.ix_(sel, ks)]
        block = block - cross @ np.linalg.solve(sigma[np.ix_(ks, ks)], cross.T)
    return float(block[0, 1] / math.sqrt(block[0, 0] * block[1, 1]))


def chi2_sf_numeric(t: float, df: int) -> float:
    """Upper chi-square tail by numeric integration of the density."""

    def density(u):
        return (
            u ** (df / 2.0 - 1.0)
            * math.exp(-u / 2.0)
            / (2 ** (df / 2.0) * math.gamma(df / 2.0))
        )

    mass, _ = quad(density, 0.0, t, limit=200)
    return 1.0 - mass
