import sys
from pathlib import Path

import pytest

import polyrest as pr

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def two_node():
    return pr.build_bus_matrices(pr.parse_network(pr.bundled_network("two_node")))


@pytest.fixture(scope="session")
def three_node():
    return pr.build_bus_matrices(pr.parse_network(pr.bundled_network("three_node")))
