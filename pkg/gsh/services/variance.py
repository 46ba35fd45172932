"""
Variance and covariance estimation for subgraph-sum estimators.

For sampled subgraphs J, J' sharing edges, the covariance term is
(1/P(J u J')) * (1/P(J n J') - 1); the variance of a subgraph sum is
the sum of these over ordered pairs, diagonal included.

Pairs are found by grouping instances on their shared edge: the
computation for one held edge is independent of every other edge, so
the grouping sums are partitioned across worker threads and reduced in
partition order.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional

import numpy as np

from gsh.core.errors import NegativeVarianceError, UndefinedEstimateError
from gsh.models.schemas import DEFAULT_STATISTICS, EstimateReport, Statistic
from gsh.services.estimators import (
    SubgraphFamily,
    SubgraphInstance,
    SubgraphKind,
    clustering_estimate,
    enumerate_family,
    node_estimate,
    subgraph_sum,
)
from gsh.services.sampler import SampledEdge, SampleState

logger = logging.getLogger(__name__)

Z_95 = 1.96


@dataclass(frozen=True)
class PairOverlap:
    """Two intersecting sampled subgraphs and 1/P of their union."""
    j1: SubgraphInstance
    j2: SubgraphInstance
    shared: tuple[SampledEdge, ...]
    union_inv_prob: float
    shared_inv_prob: float

    @property
    def term(self) -> float:
        return self.union_inv_prob * (self.shared_inv_prob - 1.0)


class DeltaMethodVariance(NamedTuple):
    variance: float
    clamped: bool


# ============ Per-edge grouping ============

def _partial_sums(
    members: np.ndarray,
    scale: np.ndarray,
    edge_inv: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Per held edge e: sum and sum of squares of a(J, e) = f(J)/P(J minus e)
    over the instances J containing e.
    """
    h = len(edge_inv)
    if len(members) == 0:
        return np.zeros(h), np.zeros(h)
    a = scale[:, None] / edge_inv[members]
    flat = members.ravel()
    s = np.bincount(flat, weights=a.ravel(), minlength=h)
    sq = np.bincount(flat, weights=(a * a).ravel(), minlength=h)
    return s, sq


def edge_grouped_sums(
    family: SubgraphFamily,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Grouping sums for a family, optionally split over row partitions."""
    edge_inv = family.state.inv_probs()
    scale = family.weights * family.inv_prob
    if threads <= 1 or len(family) < 2 * threads:
        return _partial_sums(family.members, scale, edge_inv)

    parts = np.array_split(np.arange(len(family)), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        partials = list(pool.map(
            lambda rows: _partial_sums(family.members[rows], scale[rows], edge_inv),
            parts,
        ))
    s = np.zeros(len(edge_inv))
    sq = np.zeros(len(edge_inv))
    for ps, psq in partials:
        s += ps
        sq += psq
    return s, sq


def _edge_factor(edge_inv: np.ndarray) -> np.ndarray:
    """(1/P(e)) * (1/P(e) - 1) per held edge."""
    return edge_inv * (edge_inv - 1.0)


# ============ Estimators ============

def var_single(family: SubgraphFamily) -> float:
    """
    Diagonal term: sum of f(J)^2 (1/P(J)) (1/P(J) - 1).

    For edges this is the whole variance estimate since distinct edges
    never overlap.
    """
    inv = family.inv_prob
    w = family.weights
    return math.fsum(w * w * inv * (inv - 1.0))


def var_family(family: SubgraphFamily, threads: int = 1) -> float:
    """
    Unbiased variance estimate of the subgraph sum of a family.

    Distinct wedges, and distinct triangles, share at most one edge, so
    every off-diagonal pair is found exactly once per ordering in the
    group of its shared edge.
    """
    diagonal = var_single(family)
    if family.kind is SubgraphKind.EDGE or len(family) < 2:
        return diagonal
    s, sq = edge_grouped_sums(family, threads)
    c = _edge_factor(family.state.inv_probs())
    return diagonal + math.fsum(c * (s * s - sq))


def cov_triangle_wedge(
    tri: SubgraphFamily,
    wedge: SubgraphFamily,
    threads: int = 1,
) -> float:
    """
    Unbiased estimate of Cov(N_T, N_Lambda).

    A wedge meets a triangle in one edge, or lies inside it and shares
    two. The grouped product over shared edges counts each one-edge pair
    once; each internal wedge shows up in the groups of both its edges
    and is replaced by its exact two-edge term.
    """
    if len(tri) == 0 or len(wedge) == 0:
        return 0.0

    edge_inv = tri.state.inv_probs()
    c = _edge_factor(edge_inv)
    s_t, _ = edge_grouped_sums(tri, threads)
    s_l, _ = edge_grouped_sums(wedge, threads)
    total = [math.fsum(c * s_t * s_l)]

    # Internal wedges: locate each triangle's three edge pairs among the wedges
    h = len(edge_inv)
    keys = wedge.members[:, 0] * h + wedge.members[:, 1]
    order = np.argsort(keys)
    sorted_keys = keys[order]
    t_scale = tri.weights * tri.inv_prob
    l_scale = wedge.weights * wedge.inv_prob

    for (x, y) in ((0, 1), (0, 2), (1, 2)):
        e1 = tri.members[:, x]
        e2 = tri.members[:, y]
        pos = np.searchsorted(sorted_keys, e1 * h + e2)
        pos = np.minimum(pos, len(sorted_keys) - 1)
        found = sorted_keys[pos] == e1 * h + e2
        if not found.any():
            continue
        rows = order[pos[found]]
        ts = t_scale[found]
        ls = l_scale[rows]
        e1, e2 = e1[found], e2[found]
        # Remove what the grouped product attributed to each shared edge
        wrong = (ts / edge_inv[e1]) * (ls / edge_inv[e1]) * c[e1]
        wrong += (ts / edge_inv[e2]) * (ls / edge_inv[e2]) * c[e2]
        right = tri.weights[found] * wedge.weights[rows] * tri.inv_prob[found] * (
            wedge.inv_prob[rows] - 1.0
        )
        total.append(math.fsum(right - wrong))

    return math.fsum(total)


# ============ Reference all-pairs scans ============

def iter_overlaps(
    first: Iterable[SubgraphInstance],
    second: Iterable[SubgraphInstance],
    edge_inv: np.ndarray,
    include_identical: bool = False,
) -> Iterator[PairOverlap]:
    """Every ordered pair (J, J') with J n J' non-empty."""
    second = list(second)
    for j1 in first:
        s1 = set(j1.indices)
        for j2 in second:
            if not include_identical and j1.kind is j2.kind and j1.indices == j2.indices:
                continue
            shared_idx = s1.intersection(j2.indices)
            if not shared_idx:
                continue
            shared_inv = math.prod(float(edge_inv[i]) for i in shared_idx)
            yield PairOverlap(
                j1=j1,
                j2=j2,
                shared=tuple(e for i, e in zip(j1.indices, j1.edges) if i in shared_idx),
                union_inv_prob=j1.inv_prob * j2.inv_prob / shared_inv,
                shared_inv_prob=shared_inv,
            )


def var_family_naive(family: SubgraphFamily) -> float:
    """All-pairs O(n^2) variance scan; reference for var_family."""
    weight = {j.indices: w for j, w in zip(family.instances, family.weights)}
    overlaps = iter_overlaps(
        family.instances, family.instances, family.state.inv_probs(), include_identical=True
    )
    return math.fsum(weight[o.j1.indices] * weight[o.j2.indices] * o.term for o in overlaps)


def cov_triangle_wedge_naive(tri: SubgraphFamily, wedge: SubgraphFamily) -> float:
    """All-pairs covariance scan; reference for cov_triangle_wedge."""
    t_weight = {j.indices: w for j, w in zip(tri.instances, tri.weights)}
    l_weight = {j.indices: w for j, w in zip(wedge.instances, wedge.weights)}
    overlaps = iter_overlaps(tri.instances, wedge.instances, tri.state.inv_probs())
    return math.fsum(t_weight[o.j1.indices] * l_weight[o.j2.indices] * o.term for o in overlaps)


# ============ Clustering coefficient and intervals ============

def var_clustering(
    nt: float,
    nl: float,
    var_t: float,
    var_l: float,
    cov_tl: float,
) -> DeltaMethodVariance:
    """
    Delta-method variance of alpha = 3 N_T / N_Lambda.

    The ratio expansion is scaled by 9 for the factor 3. Being an
    approximation it can come out negative; it is then clamped to 0.

    Raises:
        UndefinedEstimateError: nl is zero
    """
    if nl == 0:
        raise UndefinedEstimateError("delta-method variance needs a non-zero wedge estimate")
    raw = 9.0 * (
        var_t / nl ** 2
        + nt ** 2 * var_l / nl ** 4
        - 2.0 * nt * cov_tl / nl ** 3
    )
    if raw < 0:
        logger.warning(f"Delta-method variance {raw:.3e} < 0, clamped to 0")
        return DeltaMethodVariance(0.0, True)
    return DeltaMethodVariance(raw, False)


def confidence_interval(estimate: float, variance: float) -> tuple[float, float]:
    """
    95% normal bounds estimate -/+ 1.96 sqrt(variance), not truncated at 0.

    Raises:
        NegativeVarianceError: variance < 0
    """
    if variance < 0:
        raise NegativeVarianceError(f"variance {variance} is negative")
    half = Z_95 * math.sqrt(variance)
    return estimate - half, estimate + half


def _report(statistic: Statistic, estimate: float, variance: float, flags=None) -> EstimateReport:
    lb, ub = confidence_interval(estimate, variance)
    return EstimateReport(
        statistic=statistic,
        estimate=estimate,
        variance=variance,
        lb=lb,
        ub=ub,
        flags=list(flags or []),
    )


def estimate_all(
    state: SampleState,
    statistics: Optional[Iterable[Statistic]] = None,
    threads: int = 1,
    timings: Optional[dict[str, float]] = None,
) -> dict[Statistic, EstimateReport]:
    """
    Point estimates, variances and bounds for the requested statistics.

    Families are enumerated once and shared between statistics. Phase
    durations are added to `timings` when given.
    """
    wanted = list(statistics or DEFAULT_STATISTICS)
    timings = timings if timings is not None else {}
    reports: dict[Statistic, EstimateReport] = {}

    need_t = Statistic.N_T in wanted or Statistic.ALPHA in wanted
    need_l = Statistic.N_LAMBDA in wanted or Statistic.ALPHA in wanted

    start = time.perf_counter()
    edges = enumerate_family(state, SubgraphKind.EDGE)
    tri = enumerate_family(state, SubgraphKind.TRIANGLE) if need_t else None
    wedge = enumerate_family(state, SubgraphKind.WEDGE) if need_l else None
    nt = subgraph_sum(tri) if tri is not None else None
    nl = subgraph_sum(wedge) if wedge is not None else None
    timings['estimate'] = timings.get('estimate', 0.0) + time.perf_counter() - start

    start = time.perf_counter()
    var_t = var_family(tri, threads) if tri is not None else None
    var_l = var_family(wedge, threads) if wedge is not None else None

    if Statistic.N_K in wanted:
        reports[Statistic.N_K] = _report(Statistic.N_K, subgraph_sum(edges), var_single(edges))
    if Statistic.N_T in wanted:
        reports[Statistic.N_T] = _report(Statistic.N_T, nt, var_t)
    if Statistic.N_LAMBDA in wanted:
        reports[Statistic.N_LAMBDA] = _report(Statistic.N_LAMBDA, nl, var_l)
    if Statistic.ALPHA in wanted:
        if nl == 0:
            reports[Statistic.ALPHA] = EstimateReport(statistic=Statistic.ALPHA, flags=['undefined'])
        else:
            cov_tl = cov_triangle_wedge(tri, wedge, threads)
            delta = var_clustering(nt, nl, var_t, var_l, cov_tl)
            reports[Statistic.ALPHA] = _report(
                Statistic.ALPHA,
                clustering_estimate(nt, nl),
                delta.variance,
                ['variance-clamped'] if delta.clamped else [],
            )
    if Statistic.N_V in wanted:
        reports[Statistic.N_V] = EstimateReport(
            statistic=Statistic.N_V,
            estimate=node_estimate(state),
            flags=['no-variance-estimator'],
        )
    timings['variance'] = timings.get('variance', 0.0) + time.perf_counter() - start

    # Keep request order
    return {s: reports[s] for s in wanted}
