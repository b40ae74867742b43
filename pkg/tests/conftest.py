import numpy as np
import pytest

from delay_consensus.graph import laplacian, example_graph, random_connected_graph, spectrum


@pytest.fixture(scope="session")
def example():
    g = example_graph()
    return g, spectrum(laplacian(g))


@pytest.fixture(scope="session")
def random_graphs():
    rng = np.random.default_rng(2024)
    out = []
    for n in (3, 4, 6, 8, 10, 12, 15, 20):
        g = random_connected_graph(n, p=0.35, rng=rng, weighted=bool(n % 2))
        out.append((g, spectrum(laplacian(g))))
    return out
