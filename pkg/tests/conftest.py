import hypothesis.strategies as st
from hypothesis import settings

from adjrobust import Dag

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


@st.composite
def small_dags(draw, max_nodes: int = 8) -> Dag:
    """Random DAG whose label order is already topological."""
    n = draw(st.integers(min_value=2, max_value=max_nodes))
    labels = [f"N{i}" for i in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if draw(st.booleans()):
                edges.append((labels[i], labels[j]))
    return Dag(labels, edges)


@st.composite
def dags_with_disjoint_sets(draw, max_nodes: int = 7):
    """A DAG plus disjoint node sets (a, b, z) for separation checks."""
    g = draw(small_dags(max_nodes=max_nodes))
    nodes = list(g.nodes)
    x = draw(st.sampled_from(nodes))
    y = draw(st.sampled_from([v for v in nodes if v != x]))
    rest = [v for v in nodes if v not in (x, y)]
    z = draw(st.sets(st.sampled_from(rest)) if rest else st.just(set()))
    return g, x, y, frozenset(z)
