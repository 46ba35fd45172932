"""
Horvitz-Thompson estimation over a held sample.

Implements:
- Enumeration of sampled edges, wedges (paths of length 2) and triangles
- Subgraph sums: sum of f(J)/P(J) over sampled instances J
- Node-count estimate from per-node selection estimators
- Plug-in global clustering coefficient 3*N_T/N_Lambda

A family is stored as arrays: `members` holds, per instance, the indices
of its edges in the held sample (ascending, i.e. arrival order) and
`inv_prob` holds 1/P(J).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from gsh.core.errors import ConfigError, UndefinedEstimateError
from gsh.models.graph import Mode
from gsh.services.sampler import SampledEdge, SampleState

logger = logging.getLogger(__name__)


class SubgraphKind(str, Enum):
    EDGE = "edge"
    WEDGE = "wedge"
    TRIANGLE = "triangle"


@dataclass(frozen=True)
class SubgraphInstance:
    """A sampled subgraph J: its held edges in arrival order and 1/P(J)."""
    kind: SubgraphKind
    indices: tuple[int, ...]
    edges: tuple[SampledEdge, ...]
    inv_prob: float


WeightFn = Callable[[SubgraphInstance], float]


@dataclass
class SubgraphFamily:
    """All sampled instances of one kind in a held graph."""
    kind: SubgraphKind
    state: SampleState
    members: np.ndarray
    inv_prob: np.ndarray
    weights: np.ndarray
    weight_fn: Optional[WeightFn] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.inv_prob)

    @cached_property
    def instances(self) -> list[SubgraphInstance]:
        held = self.state.held
        return [
            SubgraphInstance(
                kind=self.kind,
                indices=tuple(int(i) for i in row),
                edges=tuple(held[i] for i in row),
                inv_prob=float(w),
            )
            for row, w in zip(self.members, self.inv_prob)
        ]

    def __iter__(self):
        return iter(self.instances)

    @property
    def edge_inv_prob(self) -> np.ndarray:
        return self.state.inv_probs()


def _wedge_members(state: SampleState) -> np.ndarray:
    """C(deg, 2) pairs per node from its arrival-sorted edge list."""
    blocks = []
    for incident in state.node_index.values():
        d = len(incident)
        if d < 2:
            continue
        arr = np.asarray(incident, dtype=np.int64)
        i, j = np.triu_indices(d, k=1)
        blocks.append(np.column_stack((arr[i], arr[j])))
    if not blocks:
        return np.empty((0, 2), dtype=np.int64)
    return np.vstack(blocks)


def _triangle_members(state: SampleState) -> np.ndarray:
    """
    Degree-ordered neighbour intersection.

    Each edge is oriented from its lower-ranked endpoint, rank being
    (degree, id); a triangle is then reported once, from its lowest node.
    """
    def rank(x):
        return (state.degree(x), x)

    forward: dict[int, dict[int, int]] = {}
    for x in state.node_index:
        rx = rank(x)
        forward[x] = {y: idx for y, idx in state.neighbors(x).items() if rank(y) > rx}

    rows = []
    for u, out_u in forward.items():
        for v, uv in out_u.items():
            out_v = forward[v]
            small, big = (out_u, out_v) if len(out_u) <= len(out_v) else (out_v, out_u)
            for w in small:
                if w in big:
                    rows.append(sorted((uv, out_u[w], out_v[w])))
    if not rows:
        return np.empty((0, 3), dtype=np.int64)
    return np.asarray(rows, dtype=np.int64)


def enumerate_family(
    state: SampleState,
    kind: SubgraphKind,
    weight_fn: Optional[WeightFn] = None,
) -> SubgraphFamily:
    """
    All sampled subgraphs of one kind, each exactly once.

    Raises:
        ConfigError: wedge/triangle enumeration on a directed sample
    """
    kind = SubgraphKind(kind)
    if kind is SubgraphKind.EDGE:
        members = np.arange(len(state), dtype=np.int64).reshape(-1, 1)
    elif state.mode is Mode.DIRECTED:
        raise ConfigError(f"{kind.value} enumeration needs an undirected sample")
    elif kind is SubgraphKind.WEDGE:
        members = _wedge_members(state)
    else:
        members = _triangle_members(state)

    edge_inv = state.inv_probs()
    if len(members):
        inv_prob = np.prod(edge_inv[members], axis=1)
    else:
        inv_prob = np.empty(0)

    family = SubgraphFamily(
        kind=kind,
        state=state,
        members=members,
        inv_prob=inv_prob,
        weights=np.ones(len(inv_prob)),
        weight_fn=weight_fn,
    )
    if weight_fn is not None:
        family.weights = np.array([weight_fn(j) for j in family.instances], dtype=float)
    return family


def subgraph_sum(family: SubgraphFamily) -> float:
    """Unbiased estimate of f(Q): sum over sampled J of f(J)/P(J)."""
    return math.fsum(family.weights * family.inv_prob)


def node_estimate(state: SampleState) -> float:
    """
    Estimated number of non-isolated nodes.

    Each node x touched by the sample contributes
    1 - prod over its held edges k of (1 - 1/p_k).
    """
    inv = state.inv_probs()
    total = []
    for incident in state.node_index.values():
        prod = 1.0
        for idx in incident:
            prod *= 1.0 - inv[idx]
        total.append(1.0 - prod)
    return math.fsum(total)


def clustering_estimate(nt_hat: float, nl_hat: float) -> float:
    """
    Plug-in global clustering coefficient 3*N_T/N_Lambda.

    A consistent-style ratio of unbiased estimates; not itself unbiased.

    Raises:
        UndefinedEstimateError: nl_hat is zero
    """
    if nl_hat == 0:
        raise UndefinedEstimateError("no sampled wedges: clustering coefficient undefined")
    return 3.0 * nt_hat / nl_hat
