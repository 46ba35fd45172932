"""
Graph Sample and Hold: single-pass edge-stream sampling.

An arriving edge that shares a node with a held edge is selected with
probability q, any other edge with probability p. With triangle closure
(gSH_T) an edge that would close a triangle in the held sample is
selected with probability 1. Rejected edges are discarded permanently.

Only the 2-bit probability class is stored per held edge; the numeric
probability is resolved through the SamplerConfig at estimation time.
"""

import logging
import time
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Protocol

import numpy as np

from gsh.core.errors import ConfigError, EmptyStreamError
from gsh.models.graph import Edge, EdgeStream, Mode, NodeId
from gsh.models.schemas import SamplerConfig

logger = logging.getLogger(__name__)

DRAW_CHUNK = 4096


class ProbClass(IntEnum):
    """Selection rule in force when an edge was held (00, 01, 10)."""
    P = 0
    Q = 1
    ONE = 2


def numeric(cls: ProbClass, config: SamplerConfig) -> float:
    """Resolve a probability class to its selection probability."""
    if cls is ProbClass.P:
        return config.p
    if cls is ProbClass.Q:
        return config.q
    return 1.0


@dataclass(frozen=True, slots=True)
class SampledEdge:
    """A held edge with its class and 1-based arrival index."""
    edge: Edge
    prob: ProbClass
    arrival_index: int


@dataclass
class SampleState:
    """
    The sampler's entire memory: held edges, a node index and the
    number of edges offered so far.

    node_index maps every endpoint of a held edge to the indices (into
    `held`) of its held edges, in arrival order. Size is O(|held|).
    """
    config: SamplerConfig
    mode: Mode = Mode.UNDIRECTED
    held: list[SampledEdge] = field(default_factory=list)
    node_index: dict[NodeId, list[int]] = field(default_factory=dict)
    arrivals: int = 0
    _neighbors: dict[NodeId, dict[NodeId, int]] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.held)

    def add(self, sampled: SampledEdge) -> None:
        idx = len(self.held)
        self.held.append(sampled)
        a, b = sampled.edge.a, sampled.edge.b
        self.node_index.setdefault(a, []).append(idx)
        self.node_index.setdefault(b, []).append(idx)
        self._neighbors.setdefault(a, {})[b] = idx
        self._neighbors.setdefault(b, {})[a] = idx

    def neighbors(self, x: NodeId) -> dict[NodeId, int]:
        """Held neighbours of x mapped to the index of the joining edge."""
        return self._neighbors.get(x, {})

    def degree(self, x: NodeId) -> int:
        return len(self.node_index.get(x, ()))

    def probability(self, idx: int) -> float:
        return numeric(self.held[idx].prob, self.config)

    def inv_probs(self) -> np.ndarray:
        """1 / selection probability of every held edge, in held order."""
        lookup = np.array([1.0 / self.config.p, 1.0 / self.config.q, 1.0])
        codes = np.fromiter((s.prob for s in self.held), dtype=np.int64, count=len(self.held))
        return lookup[codes]

    def edges(self) -> list[Edge]:
        return [s.edge for s in self.held]

    def copy(self) -> "SampleState":
        clone = SampleState(
            config=self.config, mode=self.mode, held=list(self.held), arrivals=self.arrivals
        )
        clone.node_index = {x: list(v) for x, v in self.node_index.items()}
        clone._neighbors = {x: dict(v) for x, v in self._neighbors.items()}
        return clone


class UniformSource(Protocol):
    def random(self) -> float: ...


class ChunkedUniforms:
    """One uniform per call, drawn from a numpy Generator in blocks."""

    def __init__(self, seed: int, chunk: int = DRAW_CHUNK):
        self._rng = np.random.default_rng(seed)
        self._chunk = chunk
        self._buf = np.empty(0)
        self._pos = 0

    def random(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._rng.random(self._chunk)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)


class GraphSampleHold:
    """gSH(p,q) and, with triangle_closure, gSH_T(p,q)."""

    def __init__(self, config: SamplerConfig, mode: Mode = Mode.UNDIRECTED):
        if mode is Mode.DIRECTED and config.triangle_closure:
            raise ConfigError("triangle closure is only defined for undirected streams")
        self.config = config
        self.mode = mode

    def new_state(self) -> SampleState:
        return SampleState(config=self.config, mode=self.mode)

    def _closes_triangle(self, state: SampleState, k: Edge) -> bool:
        na = state.neighbors(k.a)
        nb = state.neighbors(k.b)
        if len(nb) < len(na):
            na, nb = nb, na
        return any(w in nb for w in na)

    def _matches(self, state: SampleState, k: Edge) -> bool:
        if self.mode is Mode.UNDIRECTED:
            return k.a in state.node_index or k.b in state.node_index
        # head of k is the tail of a held edge, or tail of k is a held head
        for idx in state.node_index.get(k.b, ()):
            if state.held[idx].edge.a == k.b:
                return True
        for idx in state.node_index.get(k.a, ()):
            if state.held[idx].edge.b == k.a:
                return True
        return False

    def classify(self, state: SampleState, k: Edge) -> ProbClass:
        """Probability class for an arriving edge: triangle, then adjacency, then fresh."""
        if self.config.triangle_closure and self._closes_triangle(state, k):
            return ProbClass.ONE
        if self._matches(state, k):
            return ProbClass.Q
        return ProbClass.P

    def step(
        self,
        state: SampleState,
        k: Edge,
        rng: UniformSource,
        arrival_index: Optional[int] = None,
    ) -> tuple[bool, ProbClass]:
        """
        Offer one edge to the sampler.

        Exactly one uniform is consumed, whatever the class.

        Returns:
            (selected, class)
        """
        cls = self.classify(state, k)
        state.arrivals = arrival_index if arrival_index is not None else state.arrivals + 1
        u = rng.random()
        selected = u < numeric(cls, self.config)
        if selected:
            state.add(SampledEdge(edge=k, prob=cls, arrival_index=state.arrivals))
        return selected, cls

    def run(self, stream: EdgeStream) -> SampleState:
        """Fold step over the stream once, in order."""
        start = time.perf_counter()
        state = self.new_state()
        draws = ChunkedUniforms(self.config.seed)
        for i, k in enumerate(stream, start=1):
            self.step(state, k, draws, arrival_index=i)

        if len(stream):
            logger.debug(
                f"Held {len(state)}/{len(stream)} edges "
                f"(p={self.config.p}, q={self.config.q}) in {time.perf_counter() - start:.3f}s"
            )
        return state


def run(stream: EdgeStream, config: SamplerConfig) -> SampleState:
    """Sample a stream with gSH / gSH_T in a single pass."""
    return GraphSampleHold(config, stream.mode).run(stream)


def sampling_fraction(state: SampleState, stream: EdgeStream) -> float:
    """|held| / |stream|."""
    if len(stream) == 0:
        raise EmptyStreamError("sampling fraction of an empty stream")
    return len(state) / len(stream)
