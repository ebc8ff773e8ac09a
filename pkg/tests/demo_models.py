"""Ten-node running example shared across the test suite.

``demo_graph`` is the data-generating graph. The variants drop, reverse or
rewire edges so the robustness check has known mistakes to find:

* ``demo_graph_missing_edge``  loses the B2 -> B1 confounder link
* ``demo_graph_reversed_edge`` points it the other way (B1 -> B2)
* ``demo_graph_rewired``       hangs A1/B1 off the treatment instead

``demo_sem`` sets every edge coefficient and error variance to one with
normal errors; for that model the total effect of X on Y is exactly 1.
"""

import numpy as np

from adjrobust import Dag, ErrorFamily, SemModel

NODES = ("A1", "A2", "B1", "B2", "D", "F", "R", "V", "X", "Y")

DEMO_EDGES = (
    ("X", "Y"),
    ("X", "D"),
    ("Y", "F"),
    ("A1", "X"),
    ("A1", "A2"),
    ("A2", "Y"),
    ("B1", "X"),
    ("B2", "Y"),
    ("B2", "B1"),
    ("V", "X"),
    ("R", "Y"),
)


def demo_graph() -> Dag:
    return Dag(NODES, DEMO_EDGES)


def demo_graph_missing_edge() -> Dag:
    return Dag(NODES, tuple(e for e in DEMO_EDGES if e != ("B2", "B1")))


def demo_graph_reversed_edge() -> Dag:
    edges = tuple(e for e in DEMO_EDGES if e != ("B2", "B1")) + (("B1", "B2"),)
    return Dag(NODES, edges)


def demo_graph_rewired() -> Dag:
    edges = (
        ("X", "Y"),
        ("X", "D"),
        ("X", "A1"),
        ("X", "B1"),
        ("Y", "F"),
        ("A1", "A2"),
        ("A2", "Y"),
        ("B2", "Y"),
        ("B1", "B2"),
        ("V", "X"),
        ("V", "Y"),
        ("R", "Y"),
    )
    return Dag(NODES, edges)


def demo_sem() -> SemModel:
    g = demo_graph()
    return SemModel(
        g,
        {e: 1.0 for e in g.edges},
        {v: 1.0 for v in NODES},
        ErrorFamily.NORMAL,
    )


# Collection of four nested adjustment sets whose stacked estimators have a
# degenerate joint asymptotic covariance under demo_sem.
NESTED_COLLECTION = (
    frozenset({"A1", "B1"}),
    frozenset({"A1", "A2", "B1"}),
    frozenset({"A1", "B1", "B2"}),
    frozenset({"A1", "A2", "B1", "B2"}),
)

# Exact asymptotic covariance of the stacked estimators for
# NESTED_COLLECTION under demo_sem; rank 3.
NESTED_SIGMA = np.array(
    [
        [1.75, 1.25, 1.5, 1.0],
        [1.25, 1.25, 1.0, 1.0],
        [1.5, 1.0, 1.5, 1.0],
        [1.0, 1.0, 1.0, 1.0],
    ]
)

# Three sets that are valid in demo_graph_missing_edge; under demo_sem all
# three estimate 1.25 while the total effect is 1.
BIASED_AGREEING_SETS = (
    frozenset({"A1"}),
    frozenset({"A1", "A2"}),
    frozenset({"A1", "A2", "R"}),
)
