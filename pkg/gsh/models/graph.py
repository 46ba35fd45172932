"""
Graph stream value types.

- NodeId: opaque integer vertex identifier
- Edge: canonical undirected pair or ordered directed pair
- EdgeStream: immutable arrival-ordered edge sequence
"""

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional

NodeId = int


class Mode(str, Enum):
    """Adjacency semantics of a stream."""
    UNDIRECTED = "undirected"
    DIRECTED = "directed"


@dataclass(frozen=True, order=True, slots=True)
class Edge:
    """
    A stream unit.

    Undirected edges are kept with a <= b; build them with Edge.of()
    to get that canonical form.
    """
    a: NodeId
    b: NodeId

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"self-loop on node {self.a}")

    @classmethod
    def of(cls, a: NodeId, b: NodeId, mode: Mode = Mode.UNDIRECTED) -> "Edge":
        if mode is Mode.UNDIRECTED and b < a:
            a, b = b, a
        return cls(a, b)

    def canonical(self, mode: Mode = Mode.UNDIRECTED) -> "Edge":
        return Edge.of(self.a, self.b, mode)

    @property
    def nodes(self) -> tuple[NodeId, NodeId]:
        return (self.a, self.b)


def adjacent(k: Edge, k2: Edge, mode: Mode = Mode.UNDIRECTED) -> bool:
    """
    Adjacency predicate used for key matching.

    Undirected: the edges share at least one endpoint (an edge is adjacent
    to itself). Directed: the head of one edge is the tail of the other.
    """
    if mode is Mode.UNDIRECTED:
        return k.a == k2.a or k.a == k2.b or k.b == k2.a or k.b == k2.b
    return k.b == k2.a or k.a == k2.b


@dataclass(frozen=True)
class EdgeStream:
    """
    Arrival-ordered, duplicate-free edge sequence.

    Arrival index i (1-based) is the position in `edges`.
    """
    edges: tuple[Edge, ...]
    mode: Mode = Mode.UNDIRECTED
    order_seed: Optional[int] = None
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self) -> Iterator[Edge]:
        return iter(self.edges)

    def __getitem__(self, i: int) -> Edge:
        return self.edges[i]

    @property
    def directed(self) -> bool:
        return self.mode is Mode.DIRECTED

    def nodes(self) -> set[NodeId]:
        """All non-isolated nodes."""
        out: set[NodeId] = set()
        for e in self.edges:
            out.add(e.a)
            out.add(e.b)
        return out

    @classmethod
    def from_pairs(
        cls,
        pairs,
        mode: Mode = Mode.UNDIRECTED,
    ) -> "EdgeStream":
        """Build a stream from trusted (a, b) pairs, keeping their order."""
        edges = tuple(Edge.of(a, b, mode) for a, b in pairs)
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edges in stream")
        return cls(edges=edges, mode=mode)
