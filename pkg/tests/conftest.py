import itertools

import numpy as np
import pytest

from motifgl.graph import Graph


def fig1_graph() -> Graph:
    """Eight nodes: a triangle {0, 1, 2} sharing node 2 with the hexagon 2-3-4-5-6-7.

    Five nodes see an open wedge (root with two non-adjacent neighbors), the two
    free triangle corners see a triangle, and node 2 sees neither.
    """
    edges = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 2)]
    return Graph.from_edges(8, edges)


def wedge() -> Graph:
    return Graph.from_edges(3, [(0, 1), (0, 2)])


def triangle() -> Graph:
    return Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])


def rooted_isomorphic(A: np.ndarray, B: np.ndarray) -> bool:
    """Brute force over permutations that keep node 0 fixed."""
    A = np.asarray(A) != 0
    B = np.asarray(B) != 0
    if A.shape != B.shape:
        return False
    n = A.shape[0]
    for perm in itertools.permutations(range(1, n)):
        p = (0,) + perm
        if np.array_equal(A[np.ix_(p, p)], B):
            return True
    return False


@pytest.fixture
def fig1():
    return fig1_graph()


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
