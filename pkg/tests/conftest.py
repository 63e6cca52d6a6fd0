import numpy as np
import pytest

from trendcast.core import Graph, Trend


def toy_actions() -> list[tuple[str, float]]:
    # Three users over five yearly intervals. Hand-counted totals:
    # intensity [1, 5, 4, 2, 0], coverage [1, 2, 3, 2, 0], duration 4 at theta 0.
    return [
        ("v1", 2007.0),
        ("v1", 2008.0),
        ("v1", 2008.0),
        ("v1", 2008.0),
        ("v2", 2008.0),
        ("v2", 2008.0),
        ("v1", 2009.0),
        ("v1", 2009.0),
        ("v2", 2009.0),
        ("v3", 2009.0),
        ("v1", 2010.0),
        ("v3", 2010.0),
    ]


@pytest.fixture
def toy_graph() -> Graph:
    return Graph.from_edges([(0, 1), (1, 2)], 3, labels=["v1", "v2", "v3"])


@pytest.fixture
def toy_trend(toy_graph) -> Trend:
    nodes = [toy_graph.index_of(lab) for lab, _ in toy_actions()]
    times = [t for _, t in toy_actions()]
    return Trend(np.asarray(nodes), np.asarray(times))
