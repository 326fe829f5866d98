import numpy as np
import pytest

from hkgame.dynamics import GameConfig, two_cluster_opinions
from hkgame.graph import SocialGraph, zachary_karate_club

ACCEPTANCE_LINES = []


def random_connected_graph(rng, n, p_extra=0.3):
    """Random spanning tree plus independent extra edges."""
    edges = set()
    order = rng.permutation(n)
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(k)])
        edges.add((min(a, b), max(a, b)))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p_extra:
                edges.add((i, j))
    return SocialGraph(n, frozenset(edges))


def cycle_graph(n):
    return SocialGraph(n, frozenset((i, (i + 1) % n) for i in range(n)))


@pytest.fixture
def k2():
    return SocialGraph.from_edges([(0, 1)])


@pytest.fixture
def p3():
    return SocialGraph.from_edges([(0, 1), (1, 2)])


@pytest.fixture(scope="session")
def zachary():
    return zachary_karate_club()


@pytest.fixture
def k2_config(k2):
    return GameConfig(k2, 1.0, 1.0, 1.0, [1.0, -1.0])


@pytest.fixture(scope="session")
def zachary_config(zachary):
    return GameConfig(zachary, 10.0, 1.0, 1.0, two_cluster_opinions(zachary.n, 0))


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
