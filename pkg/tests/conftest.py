import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qaoaplus.graphs import Graph  # noqa: E402

TRIANGLE = Graph(3, ((0, 1), (0, 2), (1, 2)))
SQUARE = Graph(4, ((0, 1), (0, 3), (1, 2), (2, 3)))
K2 = Graph(2, ((0, 1),))
PETERSEN = Graph.from_edges(
    10,
    [(i, (i + 1) % 5) for i in range(5)]
    + [(i, i + 5) for i in range(5)]
    + [(5 + i, 5 + (i + 2) % 5) for i in range(5)],
)


def random_graph(rng, n, p=0.5):
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    if not edges:
        edges = [(0, 1)]
    return Graph.from_edges(n, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_acceptance_key = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one status line per acceptance criterion for the summary."""
    return request.config.stash.setdefault(_acceptance_key, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_acceptance_key, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
