import os
from pathlib import Path

# keep the (expensive, n=9) enumeration cache inside the repo so repeated
# test runs reuse it; respect an externally provided location
os.environ.setdefault(
    "ERGMKIT_CACHE_DIR", str(Path(__file__).resolve().parent.parent / ".ergm_cache")
)

import numpy as np
import pytest

from ergmkit import Edges, ModelSpec, Network, Triangles
from ergmkit.exact import build_table
from ergmkit.network import dyad_arrays, dyad_count


@pytest.fixture(scope="session")
def edges_triangles() -> ModelSpec:
    return ModelSpec([Edges(), Triangles()])


@pytest.fixture(scope="session")
def table7(edges_triangles):
    return build_table(edges_triangles, 7)


@pytest.fixture(scope="session")
def table9(edges_triangles):
    # ~11 minutes on 2 cores the first time, then served from the cache
    return build_table(edges_triangles, 9)


def network_from_code(n: int, code: int) -> Network:
    """Decode a dyad bitmask (linear dyad order) into a network."""
    rows, cols = dyad_arrays(n)
    net = Network(n)
    for d in range(dyad_count(n)):
        if (code >> d) & 1:
            net.add_edge(int(rows[d]), int(cols[d]))
    return net


def random_network(n: int, rng: np.random.Generator, p: float = 0.5) -> Network:
    code = 0
    for d in range(dyad_count(n)):
        if rng.random() < p:
            code |= 1 << d
    return network_from_code(n, code)
