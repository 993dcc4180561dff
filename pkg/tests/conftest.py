import pytest

from fiidtree.graph_spectrum import build_quadrature


@pytest.fixture(scope="session")
def rule3():
    return build_quadrature(3, 4096)
