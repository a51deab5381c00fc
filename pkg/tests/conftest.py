import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.graphs import UndirGraph  # noqa: E402
from src.instances import gen_path_family, gen_random_tree_instance  # noqa: E402
from src.reductions import CaInstance  # noqa: E402


@pytest.fixture
def single_node():
    """One Steiner node (id 0) carrying terminals 1 and 2."""
    return gen_random_tree_instance(1)


@pytest.fixture
def path_family_3():
    return gen_path_family(3)


@pytest.fixture
def triangle_instance():
    """Terminals 0, 1, 2; Steiner 3 serves {0, 1}, Steiner 4 serves {1, 2}, and 3-4 is an edge."""
    graph = UndirGraph(range(5), [(0, 3), (1, 3), (1, 4), (2, 4), (3, 4)])
    return CaInstance(graph, [0, 1, 2], [3, 4])


def star_instance(leaves):
    """Non-final center 0, final Steiner leaves 1..leaves, two terminals on each leaf."""
    edges = [(0, s) for s in range(1, leaves + 1)]
    terminals = []
    for s in range(1, leaves + 1):
        for _ in range(2):
            r = leaves + 1 + len(terminals)
            terminals.append(r)
            edges.append((s, r))
    graph = UndirGraph(range(leaves + 1 + len(terminals)), edges)
    return CaInstance(graph, terminals, range(leaves + 1))


@pytest.fixture
def star():
    return star_instance
