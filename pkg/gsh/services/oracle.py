"""
Ground truth for tests and experiments.

- exact_count: exact edge, triangle and wedge counts of a full graph
- enumerate_outcomes: every select/reject branch of the sampler on a tiny
  stream, with its exact probability
- expected_value / tree_variance / tree_covariance: moments of any
  statistic over an outcome tree
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from gsh.core.config import settings
from gsh.core.errors import StreamTooLargeError
from gsh.models.graph import EdgeStream, Mode, NodeId
from gsh.models.schemas import ExactStats, OutcomeModel, OutcomeTreeResponse, SamplerConfig
from gsh.services.sampler import (
    GraphSampleHold,
    ProbClass,
    SampledEdge,
    SampleState,
    numeric,
)

logger = logging.getLogger(__name__)


# ============ Exact counting ============

def _undirected_adjacency(stream: EdgeStream) -> dict[NodeId, set[NodeId]]:
    adj: dict[NodeId, set[NodeId]] = {}
    for e in stream:
        adj.setdefault(e.a, set()).add(e.b)
        adj.setdefault(e.b, set()).add(e.a)
    return adj


def count_triangles(adj: dict[NodeId, set[NodeId]]) -> int:
    """Neighbour intersection over degree-ordered edges; each triangle once."""
    def rank(x):
        return (len(adj[x]), x)

    forward = {x: {y for y in nbrs if rank(y) > rank(x)} for x, nbrs in adj.items()}
    total = 0
    for u, out_u in forward.items():
        for v in out_u:
            total += len(out_u & forward[v])
    return total


def exact_count(stream: EdgeStream) -> ExactStats:
    """
    Exact statistics of the full graph in the stream.

    Triangles and wedges are counted on the underlying undirected simple
    graph; for directed streams density is N_K / (n (n - 1)).
    """
    start = time.perf_counter()
    adj = _undirected_adjacency(stream)
    n = len(adj)
    n_k = len(stream)
    n_lambda = sum(len(nbrs) * (len(nbrs) - 1) // 2 for nbrs in adj.values())
    n_t = count_triangles(adj)

    pairs = n * (n - 1)
    if stream.mode is Mode.DIRECTED:
        density = n_k / pairs if pairs else 0.0
    else:
        density = 2 * n_k / pairs if pairs else 0.0

    elapsed = time.perf_counter() - start
    logger.info(f"Exact count: n={n} N_K={n_k} N_T={n_t} N_Lambda={n_lambda} in {elapsed:.3f}s")
    return ExactStats(
        n=n,
        n_k=n_k,
        n_t=n_t,
        n_lambda=n_lambda,
        alpha=3 * n_t / n_lambda if n_lambda else None,
        density=density,
        directed=stream.directed,
        count_seconds=elapsed,
    )


# ============ Outcome trees ============

@dataclass(frozen=True)
class Outcome:
    """
    One complete sampling outcome.

    `selected` and `classes` are indexed by stream position; classes hold
    the rule in force at each arrival, selected or not.
    """
    selected: tuple[bool, ...]
    probability: float
    classes: tuple[ProbClass, ...]
    state: SampleState = field(compare=False, repr=False)

    @property
    def mask(self) -> int:
        return sum(1 << i for i, s in enumerate(self.selected) if s)

    @property
    def held_classes(self) -> tuple[ProbClass, ...]:
        return tuple(c for c, s in zip(self.classes, self.selected) if s)

    @property
    def weights(self) -> tuple[float, ...]:
        """Selection estimator per stream position: 1/p if held, else 0."""
        cfg = self.state.config
        return tuple(
            1.0 / numeric(c, cfg) if s else 0.0
            for c, s in zip(self.classes, self.selected)
        )


@dataclass(frozen=True)
class OutcomeTree:
    stream: EdgeStream
    config: SamplerConfig
    outcomes: tuple[Outcome, ...]

    @property
    def total_probability(self) -> float:
        return math.fsum(o.probability for o in self.outcomes)

    def __len__(self) -> int:
        return len(self.outcomes)

    def __iter__(self):
        return iter(self.outcomes)


def enumerate_outcomes(
    stream: EdgeStream,
    config: SamplerConfig,
    max_edges: Optional[int] = None,
) -> OutcomeTree:
    """
    Depth-first enumeration of every select/reject branch.

    Zero-probability branches (rejecting a probability-1 edge) are pruned.

    Raises:
        StreamTooLargeError: more than max_edges edges
    """
    limit = max_edges if max_edges is not None else settings.max_outcome_edges
    if len(stream) > limit:
        raise StreamTooLargeError(
            f"outcome tree of {len(stream)} edges exceeds the {limit}-edge limit"
        )

    sampler = GraphSampleHold(config, stream.mode)
    outcomes: list[Outcome] = []

    def branch(i: int, state: SampleState, prob: float, selected: tuple, classes: tuple):
        if i == len(stream):
            outcomes.append(Outcome(selected, prob, classes, state))
            return
        k = stream[i]
        cls = sampler.classify(state, k)
        r = numeric(cls, config)

        state.arrivals = i + 1
        taken = state.copy()
        taken.add(SampledEdge(edge=k, prob=cls, arrival_index=i + 1))
        branch(i + 1, taken, prob * r, selected + (True,), classes + (cls,))
        if r < 1.0:
            branch(i + 1, state, prob * (1.0 - r), selected + (False,), classes + (cls,))

    branch(0, sampler.new_state(), 1.0, (), ())
    return OutcomeTree(stream=stream, config=config, outcomes=tuple(outcomes))


def tree_response(tree: OutcomeTree) -> OutcomeTreeResponse:
    """Serializable view of an outcome tree."""
    return OutcomeTreeResponse(
        edges=[e.nodes for e in tree.stream],
        outcomes=[
            OutcomeModel(
                selected=list(o.selected),
                probability=o.probability,
                classes=[c.name for c in o.classes],
                weights=list(o.weights),
            )
            for o in tree
        ],
        total_probability=tree.total_probability,
    )


StatisticFn = Callable[[Outcome], float]


def expected_value(tree: OutcomeTree, statistic_fn: StatisticFn) -> float:
    """Sum over outcomes of Pr(outcome) * statistic_fn(outcome)."""
    return math.fsum(o.probability * statistic_fn(o) for o in tree)


def tree_covariance(tree: OutcomeTree, f: StatisticFn, g: StatisticFn) -> float:
    """Exact covariance of two statistics over the outcome distribution."""
    values = [(o.probability, f(o), g(o)) for o in tree]
    mf = math.fsum(p * x for p, x, _ in values)
    mg = math.fsum(p * y for p, _, y in values)
    return math.fsum(p * (x - mf) * (y - mg) for p, x, y in values)


def tree_variance(tree: OutcomeTree, statistic_fn: StatisticFn) -> float:
    """Exact variance of a statistic over the outcome distribution."""
    return tree_covariance(tree, statistic_fn, statistic_fn)


def edge_weight_statistic(position: int) -> StatisticFn:
    """Selection estimator of the edge at a stream position (0-based)."""
    return lambda o: o.weights[position]


def degree_statistic(node: NodeId) -> StatisticFn:
    """Estimated degree of a node: sum of weights of its incident held edges."""
    def fn(o: Outcome) -> float:
        return math.fsum(
            w for e, w in zip(o.state.held, _held_weights(o)) if node in e.edge.nodes
        )
    return fn


def _held_weights(o: Outcome) -> list[float]:
    return [1.0 / numeric(s.prob, o.state.config) for s in o.state.held]
