"""Population-level linear SEM machinery and random model generation.

A :class:`SemModel` couples a DAG with edge coefficients and error
variances and acts as the exact ground truth: implied covariance, total
effects, population regression coefficients and, for Gaussian errors, the
exact asymptotic covariance of stacked adjusted estimators. Sampling,
random graph/model generation and graph perturbation live here too, all
seeded explicitly so replications are reproducible.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .adjustment import AdjustmentCollection, as_set_list, iter_valid_sets
from .errors import (
    NoEligiblePair,
    ParseError,
    SingularSystem,
    UnknownNode,
    UnsupportedFamily,
)
from .graph import Dag, descendants

_PIVOT_RTOL = 1e-12
_PAIR_RETRIES = 100


class ErrorFamily(str, Enum):
    NORMAL = "normal"
    UNIFORM = "uniform"
    STUDENT_T5 = "t5"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class SemModel:
    """Linear structural equation model compatible with ``graph``.

    ``coefficients`` maps each edge (parent, child) to its weight and must
    cover the edge set exactly; ``error_variances`` holds the variance of
    each node's error term. Treat instances as immutable.
    """

    graph: Dag
    coefficients: dict[tuple[str, str], float]
    error_variances: dict[str, float]
    error_family: ErrorFamily = ErrorFamily.NORMAL

    def __post_init__(self):
        edges = self.graph.edges
        keys = set(self.coefficients)
        if keys != edges:
            raise ParseError("coefficient keys must equal the graph's edge set")
        if set(self.error_variances) != set(self.graph.nodes):
            raise ParseError("every node needs an error variance")
        for v, var in self.error_variances.items():
            if not var > 0:
                raise ParseError(f"error variance of {v} must be positive")


@dataclass(frozen=True)
class Dataset:
    """Numeric matrix with named columns, one row per observation."""

    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2 or vals.shape[1] != len(self.columns):
            raise ParseError("values must be n x p with one column per label")
        if len(set(self.columns)) != len(self.columns):
            raise ParseError("column labels must be unique")
        if not np.all(np.isfinite(vals)):
            raise ParseError("dataset contains missing or non-finite values")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column(self, label: str) -> np.ndarray:
        try:
            j = self.columns.index(label)
        except ValueError:
            raise UnknownNode(f"no column {label!r}") from None
        return self.values[:, j]


def _spd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve with a relative pivot floor."""
    try:
        c, low = cho_factor(a, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    piv = np.diag(c) ** 2
    if piv.min() < _PIVOT_RTOL * piv.max():
        raise SingularSystem("pivot below relative threshold")
    return cho_solve((c, low), b, check_finite=False)


def _coefficient_matrix(m: SemModel) -> np.ndarray:
    nodes = m.graph.nodes
    idx = {v: i for i, v in enumerate(nodes)}
    b = np.zeros((len(nodes), len(nodes)))
    for (p, c), a in m.coefficients.items():
        b[idx[c], idx[p]] = a
    return b


def population_covariance(m: SemModel) -> np.ndarray:
    """Implied covariance matrix, ordered like ``m.graph.nodes``."""
    p = len(m.graph.nodes)
    a = np.eye(p) - _coefficient_matrix(m)
    d = np.array([m.error_variances[v] for v in m.graph.nodes])
    try:
        f = np.linalg.solve(a, np.eye(p))
    except np.linalg.LinAlgError as exc:  # unreachable for a DAG, defensive
        raise SingularSystem(str(exc)) from exc
    return (f * d) @ f.T


def total_effect(m: SemModel, x: str, y: str) -> float:
    """Total effect of ``x`` on ``y``: sum of coefficient products over directed paths."""
    nodes = m.graph.nodes
    idx = {v: i for i, v in enumerate(nodes)}
    for v in (x, y):
        if v not in idx:
            raise UnknownNode(f"unknown node {v!r}")
    a = np.eye(len(nodes)) - _coefficient_matrix(m)
    e_x = np.zeros(len(nodes))
    e_x[idx[x]] = 1.0
    effects = np.linalg.solve(a, e_x)
    return float(effects[idx[y]])


def population_beta(m: SemModel, y: str, x: str, z: Iterable[str] = ()) -> float:
    """Coefficient of ``x`` when regressing ``y`` on ``(x, z)`` in population."""
    z = sorted(frozenset(z) if not isinstance(z, str) else {z})
    sigma = population_covariance(m)
    idx = {v: i for i, v in enumerate(m.graph.nodes)}
    for v in [x, y, *z]:
        if v not in idx:
            raise UnknownNode(f"unknown node {v!r}")
    w = [idx[x]] + [idx[v] for v in z]
    sww = sigma[np.ix_(w, w)]
    swy = sigma[np.ix_(w, [idx[y]])]
    beta = _spd_solve(sww, swy)
    return float(beta[0, 0])


def _residual_vector(sigma: np.ndarray, target: int, on: list[int]) -> np.ndarray:
    """Coefficient vector c with c'V = population residual of target given on."""
    c = np.zeros(sigma.shape[0])
    c[target] = 1.0
    if on:
        s_oo = sigma[np.ix_(on, on)]
        s_ot = sigma[np.ix_(on, [target])]
        beta = _spd_solve(s_oo, s_ot)[:, 0]
        c[on] -= beta
    return c


def population_sigma_gaussian(
    m: SemModel,
    x: str,
    y: str,
    zc: AdjustmentCollection | Sequence[Iterable[str]],
) -> np.ndarray:
    """Exact asymptotic covariance of the stacked adjusted estimators.

    Entry (i, j) is E(d_xi d_yi d_xj d_yj) / (E d_xi^2 E d_xj^2) where d_xi
    is the population residual of x on Z_i and d_yi of y on (x, Z_i). The
    fourth-order expectations expand exactly under Gaussian errors, so the
    model's error family must be normal.
    """
    if m.error_family is not ErrorFamily.NORMAL:
        raise UnsupportedFamily(
            "exact fourth moments implemented for normal errors only"
        )
    sets = as_set_list(zc)
    sigma = population_covariance(m)
    idx = {v: i for i, v in enumerate(m.graph.nodes)}
    for v in {x, y}.union(*sets) if sets else {x, y}:
        if v not in idx:
            raise UnknownNode(f"unknown node {v!r}")
    cx, cy = [], []
    for s in sets:
        zi = [idx[v] for v in sorted(s)]
        cx.append(_residual_vector(sigma, idx[x], zi))
        cy.append(_residual_vector(sigma, idx[y], [idx[x]] + zi))
    c = np.column_stack(cx + cy)
    mom = c.T @ sigma @ c  # pairwise second moments of the 2k residuals
    k = len(sets)
    xx = mom[:k, :k]
    yy = mom[k:, k:]
    xy = mom[:k, k:]
    out = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            # Gaussian fourth-moment identity for E(d_xi d_yi d_xj d_yj)
            fourth = (
                xy[i, i] * xy[j, j]
                + xx[i, j] * yy[i, j]
                + xy[i, j] * xy[j, i]
            )
            out[i, j] = fourth / (xx[i, i] * xx[j, j])
    return 0.5 * (out + out.T)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _draw_errors(
    rng: np.random.Generator, family: ErrorFamily, variance: float, n: int
) -> np.ndarray:
    if family is ErrorFamily.NORMAL:
        return rng.normal(0.0, math.sqrt(variance), n)
    if family is ErrorFamily.UNIFORM:
        half_width = math.sqrt(3.0 * variance)
        return rng.uniform(-half_width, half_width, n)
    if family is ErrorFamily.STUDENT_T5:
        return rng.standard_t(5, n) * math.sqrt(0.6 * variance)
    if family is ErrorFamily.LOGISTIC:
        scale = math.sqrt(3.0 * variance) / math.pi
        return rng.logistic(0.0, scale, n)
    raise UnsupportedFamily(str(family))


def sample_data(m: SemModel, n: int, seed: int) -> Dataset:
    """Draw ``n`` i.i.d. observations by propagating errors through the DAG."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    nodes = m.graph.nodes
    idx = {v: i for i, v in enumerate(nodes)}
    values = np.empty((n, len(nodes)))
    for v in m.graph.topological_order:
        col = _draw_errors(rng, m.error_family, m.error_variances[v], n)
        for p in m.graph.parents_of(v):
            col = col + m.coefficients[(p, v)] * values[:, idx[p]]
        values[:, idx[v]] = col
    return Dataset(nodes, values)


def derive_seed(*path: int) -> int:
    """Stable child seed for a tuple of integer indices."""
    ss = np.random.SeedSequence(list(path))
    return int(ss.generate_state(1)[0])


def random_dag(p: int, expected_neighborhood: int, seed: int) -> Dag:
    """Random DAG on ``p`` nodes with expected total degree ``expected_neighborhood``.

    A uniformly random node order is fixed and every forward pair is
    included independently with probability d/(p-1).
    """
    if p < 2:
        raise ValueError("need at least two nodes")
    rng = np.random.default_rng(seed)
    labels = [f"V{i + 1}" for i in range(p)]
    order = [labels[i] for i in rng.permutation(p)]
    prob = min(1.0, expected_neighborhood / (p - 1))
    edges = []
    for i in range(p):
        for j in range(i + 1, p):
            if rng.random() < prob:
                edges.append((order[i], order[j]))
    return Dag(labels, edges)


def random_sem(g: Dag, seed: int) -> SemModel:
    """Random SEM on ``g``: coefficients in +-[0.1, 2], one error family for all nodes."""
    rng = np.random.default_rng(seed)
    coefficients = {}
    for edge in sorted(g.edges):
        magnitude = rng.uniform(0.1, 2.0)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        coefficients[edge] = sign * magnitude
    family = list(ErrorFamily)[rng.integers(len(ErrorFamily))]
    variances = {}
    for v in sorted(g.nodes):
        if family is ErrorFamily.NORMAL:
            variances[v] = float(rng.uniform(0.5, 1.5))
        elif family is ErrorFamily.UNIFORM:
            half_width = rng.uniform(1.2, 2.1)
            variances[v] = float(half_width**2 / 3.0)
        elif family is ErrorFamily.STUDENT_T5:
            variances[v] = float(rng.uniform(0.5, 1.5))
        else:
            scale = rng.uniform(0.4, 0.7)
            variances[v] = float(scale**2 * math.pi**2 / 3.0)
    return SemModel(g, coefficients, variances, family)


def sample_xy_pair(g: Dag, seed: int) -> tuple[str, str]:
    """Treatment/outcome pair usable for the over-identification test.

    The treatment is drawn with weight equal to its number of proper
    descendants, the outcome uniformly among them; pairs with fewer than
    two valid adjustment sets are rejected and redrawn.
    """
    rng = np.random.default_rng(seed)
    nodes = sorted(g.nodes)
    weights = np.array(
        [len(descendants(g, v)) - 1 for v in nodes], dtype=float
    )
    if weights.sum() <= 0:
        raise NoEligiblePair("no node has a proper descendant")
    weights /= weights.sum()
    for _ in range(_PAIR_RETRIES):
        x = str(rng.choice(nodes, p=weights))
        targets = sorted(descendants(g, x) - {x})
        y = str(rng.choice(targets))
        count = 0
        for _s in iter_valid_sets(g, x, y):
            count += 1
            if count >= 2:
                return x, y
    raise NoEligiblePair(f"no pair with two adjustment sets in {_PAIR_RETRIES} tries")


def perturb_graph(g: Dag, n_ops: int, seed: int) -> Dag:
    """Apply ``n_ops`` random edits (delete, add forward, reverse) keeping acyclicity."""
    rng = np.random.default_rng(seed)
    nodes = tuple(g.nodes)
    edges = set(g.edges)

    def acyclic_with(candidate: set[tuple[str, str]]) -> bool:
        try:
            Dag(nodes, candidate)
            return True
        except Exception:
            return False

    for _ in range(n_ops):
        deletions = sorted(edges)
        additions = sorted(
            (u, v)
            for u in nodes
            for v in nodes
            if u != v
            and (u, v) not in edges
            and (v, u) not in edges
            and acyclic_with(edges | {(u, v)})
        )
        reversals = sorted(
            (u, v)
            for (u, v) in edges
            if acyclic_with((edges - {(u, v)}) | {(v, u)})
        )
        moves = []
        if deletions:
            moves.append("delete")
        if additions:
            moves.append("add")
        if reversals:
            moves.append("reverse")
        if not moves:
            break
        op = moves[rng.integers(len(moves))]
        if op == "delete":
            u, v = deletions[rng.integers(len(deletions))]
            edges.remove((u, v))
        elif op == "add":
            u, v = additions[rng.integers(len(additions))]
            edges.add((u, v))
        else:
            u, v = reversals[rng.integers(len(reversals))]
            edges.remove((u, v))
            edges.add((v, u))
    return Dag(nodes, edges)


# ---------------------------------------------------------------------------
# text formats
# ---------------------------------------------------------------------------


def format_sem(m: SemModel) -> str:
    """Canonical text form: node lines with var/dist, then edge lines with weights."""
    lines = []
    for v in sorted(m.graph.nodes):
        lines.append(
            f"node {v} : var={m.error_variances[v]!r} dist={m.error_family.value}"
        )
    for (p, c) in sorted(m.graph.edges):
        lines.append(f"{p} -> {c} : {m.coefficients[(p, c)]!r}")
    return "\n".join(lines) + "\n"


def parse_sem(text: str) -> SemModel:
    """Parse the SEM text format written by :func:`format_sem`."""
    variances: dict[str, float] = {}
    dists: set[str] = set()
    edges: dict[tuple[str, str], float] = {}
    nodes: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            if line.startswith("node "):
                head, _, spec = line[5:].partition(":")
                label = head.strip()
                if not label:
                    raise ValueError("missing node label")
                var = None
                dist = None
                for token in spec.split():
                    key, _, value = token.partition("=")
                    if key == "var":
                        var = float(value)
                    elif key == "dist":
                        dist = value
                    else:
                        raise ValueError(f"unknown attribute {key!r}")
                if var is None:
                    raise ValueError(f"node {label} missing var=")
                if label in variances:
                    raise ValueError(f"node {label} declared twice")
                variances[label] = var
                nodes.append(label)
                if dist is not None:
                    dists.add(dist)
            else:
                head, _, weight = line.partition(":")
                a, arrow, b = head.split()
                if arrow != "->":
                    raise ValueError("expected '->'")
                edges[(a, b)] = float(weight)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    if len(dists) > 1:
        raise ParseError(f"conflicting error families {sorted(dists)}")
    try:
        family = ErrorFamily(dists.pop()) if dists else ErrorFamily.NORMAL
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    try:
        graph = Dag(sorted(nodes), edges.keys())
    except Exception as exc:
        raise ParseError(str(exc)) from exc
    return SemModel(graph, edges, variances, family)


def save_dataset(ds: Dataset, path: str) -> None:
    with open(path, "w", newline="") as fh:
        _write_dataset(ds, fh)


def _write_dataset(ds: Dataset, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(ds.columns)
    for row in ds.values:
        writer.writerow([repr(float(v)) for v in row])


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    _write_dataset(ds, buf)
    return buf.getvalue()


def load_dataset(path: str) -> Dataset:
    with open(path, newline="") as fh:
        return _read_dataset(fh)


def dataset_from_csv(text: str) -> Dataset:
    return _read_dataset(io.StringIO(text))


def _read_dataset(fh) -> Dataset:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty dataset file") from None
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} fields")
        try:
            rows.append([float(v) for v in row])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    if not rows:
        raise ParseError("dataset has a header but no rows")
    return Dataset(tuple(header), np.array(rows))
