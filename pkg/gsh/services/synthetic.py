"""Synthetic test graphs as edge streams."""

import networkx as nx

from gsh.core.errors import ConfigError
from gsh.models.graph import EdgeStream


def erdos_renyi_stream(n: int, mean_degree: float, seed: int = 0) -> EdgeStream:
    """
    G(n, m) random graph with m = round(n * mean_degree / 2), as a stream
    in sorted edge order.
    """
    if n < 2:
        raise ConfigError("n must be at least 2")
    m = round(n * mean_degree / 2)
    if not 0 < m <= n * (n - 1) // 2:
        raise ConfigError(f"mean degree {mean_degree} impossible on {n} nodes")
    g = nx.gnm_random_graph(n, m, seed=seed)
    return EdgeStream.from_pairs(sorted(g.edges()))


def write_edge_list(stream: EdgeStream, path: str) -> None:
    """Write a stream as a whitespace-separated edge list."""
    with open(path, 'w') as f:
        f.write(f"# {len(stream)} edges\n")
        for e in stream:
            f.write(f"{e.a} {e.b}\n")
