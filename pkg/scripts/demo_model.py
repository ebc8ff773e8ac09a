"""Shared ten-node example model for the experiment scripts."""

from adjrobust import Dag, ErrorFamily, SemModel

NODES = ("A1", "A2", "B1", "B2", "D", "F", "R", "V", "X", "Y")

EDGES = (
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


def true_graph() -> Dag:
    return Dag(NODES, EDGES)


def wrong_graph() -> Dag:
    """True graph with the B2 -> B1 confounder link dropped."""
    return Dag(NODES, tuple(e for e in EDGES if e != ("B2", "B1")))


def true_model() -> SemModel:
    g = true_graph()
    return SemModel(
        g,
        {e: 1.0 for e in g.edges},
        {v: 1.0 for v in NODES},
        ErrorFamily.NORMAL,
    )
