"""
Shared fixtures: small named graphs and sample-state builders.

Node letters of the Table-style path a-b-c-d map to ids 1-4.
"""

import networkx as nx
import pytest

from gsh.models.graph import Edge, EdgeStream, Mode
from gsh.models.schemas import SamplerConfig
from gsh.services.sampler import ProbClass, SampledEdge, SampleState

A, B, C, D = 1, 2, 3, 4
AB, BC, CD = Edge(A, B), Edge(B, C), Edge(C, D)


def make_state(held, p=0.5, q=0.5, triangle_closure=True, mode=Mode.UNDIRECTED) -> SampleState:
    """SampleState holding (edge, class) pairs in the given order."""
    config = SamplerConfig(p=p, q=q, triangle_closure=triangle_closure and mode is Mode.UNDIRECTED)
    state = SampleState(config=config, mode=mode)
    for i, (pair, cls) in enumerate(held, start=1):
        state.add(SampledEdge(edge=Edge.of(*pair, mode), prob=ProbClass(cls), arrival_index=i))
    return state


def full_state(stream: EdgeStream) -> SampleState:
    """Every edge held with probability 1, as p = q = 1 would give."""
    return make_state([(e.nodes, ProbClass.P) for e in stream], p=1.0, q=1.0, mode=stream.mode)


def er_stream(n: int, mean_degree: float, seed: int) -> EdgeStream:
    m = round(n * mean_degree / 2)
    g = nx.gnm_random_graph(n, m, seed=seed)
    return EdgeStream.from_pairs(sorted(g.edges()))


@pytest.fixture
def k3() -> EdgeStream:
    return EdgeStream.from_pairs([(1, 2), (2, 3), (1, 3)])


@pytest.fixture
def path3() -> EdgeStream:
    """Path a-b-c-d in order (a,b), (b,c), (c,d)."""
    return EdgeStream(edges=(AB, BC, CD))


@pytest.fixture
def cycle4() -> EdgeStream:
    return EdgeStream.from_pairs([(1, 2), (2, 3), (3, 4), (1, 4)])


@pytest.fixture
def diamond() -> EdgeStream:
    """Two triangles sharing edge (2, 3)."""
    return EdgeStream.from_pairs([(1, 2), (1, 3), (2, 3), (2, 4), (3, 4)])


@pytest.fixture
def small_graphs(k3, path3, cycle4, diamond) -> list[EdgeStream]:
    k4 = EdgeStream.from_pairs([(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)])
    return [k3, path3, cycle4, diamond, k4]


@pytest.fixture(scope="session")
def er_graph() -> EdgeStream:
    """Erdos-Renyi graph with 200 nodes and mean degree 10."""
    return er_stream(200, 10, seed=7)


@pytest.fixture
def edge_file(tmp_path):
    """Write lines to a file and return its path."""
    def write(lines, name="graph.txt"):
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return str(path)
    return write
