"""
Tests for variance / covariance estimators, the delta method and intervals.
"""

import math
import time

import numpy as np
import pytest

from conftest import er_stream, full_state, make_state
from gsh.core.errors import NegativeVarianceError, UndefinedEstimateError
from gsh.models.schemas import SamplerConfig, Statistic
from gsh.services.estimators import SubgraphKind, enumerate_family
from gsh.services.ingest import permute
from gsh.services.sampler import ProbClass, run
from gsh.services.variance import (
    confidence_interval,
    cov_triangle_wedge,
    cov_triangle_wedge_naive,
    estimate_all,
    iter_overlaps,
    var_clustering,
    var_family,
    var_family_naive,
    var_single,
)

P = ProbClass.P
K3_ALL_P = [((1, 2), P), ((2, 3), P), ((1, 3), P)]


def families(state):
    return (
        enumerate_family(state, SubgraphKind.EDGE),
        enumerate_family(state, SubgraphKind.WEDGE),
        enumerate_family(state, SubgraphKind.TRIANGLE),
    )


# ============ var_single / var_family ============

def test_var_single_one_edge():
    state = make_state([((1, 2), P)], p=0.5)
    assert var_single(enumerate_family(state, SubgraphKind.EDGE)) == pytest.approx(2.0)


def test_variance_vanishes_at_full_probability(diamond):
    edges, wedges, tri = families(full_state(diamond))
    assert var_single(edges) == 0.0
    assert var_family(wedges) == 0.0
    assert var_family(tri) == 0.0
    assert cov_triangle_wedge(tri, wedges) == 0.0


def test_single_triangle_of_class_one_has_no_variance():
    state = make_state([((1, 2), P), ((2, 3), P), ((1, 3), ProbClass.ONE)], p=1.0, q=1.0)
    _, _, tri = families(state)
    assert var_family(tri) == 0.0


def test_two_triangles_sharing_an_edge():
    # diamond, all class P at p=0.5: every edge has 1/p = 2
    held = [((1, 2), P), ((1, 3), P), ((2, 3), P), ((2, 4), P), ((3, 4), P)]
    _, _, tri = families(make_state(held, p=0.5))
    diagonal = 2 * 8 * (8 - 1)
    # 1/P(union) = 2^5, 1/P(shared) - 1 = 1, counted for both orderings
    off_diagonal = 2 * 32 * (2 - 1)
    assert var_single(tri) == pytest.approx(diagonal)
    assert var_family(tri) == pytest.approx(diagonal + off_diagonal)


def test_wedge_variance_on_k3():
    _, wedges, _ = families(make_state(K3_ALL_P, p=0.5))
    # 3 wedges, each pair shares one edge: 6 ordered pairs of 8 * (2 - 1)
    assert var_family(wedges) == pytest.approx(3 * 4 * 3 + 6 * 8)


# ============ cov_triangle_wedge ============

def test_cov_k3_all_p():
    _, wedges, tri = families(make_state(K3_ALL_P, p=0.5))
    assert cov_triangle_wedge(tri, wedges) == pytest.approx(72.0)
    assert cov_triangle_wedge_naive(tri, wedges) == pytest.approx(72.0)


def test_cov_without_triangles_is_zero(path3):
    _, wedges, tri = families(full_state(path3))
    assert cov_triangle_wedge(tri, wedges) == 0.0


def test_overlap_terms_are_non_negative():
    state = run(permute(er_stream(40, 8, seed=2), 3), SamplerConfig(p=0.4, q=0.6, seed=8))
    _, wedges, tri = families(state)
    inv = state.inv_probs()
    for first, second in ((tri, tri), (wedges, wedges), (tri, wedges)):
        for overlap in iter_overlaps(first, second, inv):
            assert overlap.shared
            assert overlap.term >= 0.0
            assert overlap.union_inv_prob == pytest.approx(
                overlap.j1.inv_prob * overlap.j2.inv_prob / overlap.shared_inv_prob
            )


@pytest.mark.parametrize("seed", range(5))
def test_grouped_pairing_matches_naive_scan(seed):
    stream = permute(er_stream(30, 7, seed=seed), seed)
    state = run(stream, SamplerConfig(p=0.5, q=0.7, seed=seed))
    edges, wedges, tri = families(state)

    assert var_family(edges) == pytest.approx(var_family_naive(edges), rel=1e-9)
    assert var_family(wedges) == pytest.approx(var_family_naive(wedges), rel=1e-9)
    assert var_family(tri) == pytest.approx(var_family_naive(tri), rel=1e-9)
    assert cov_triangle_wedge(tri, wedges) == pytest.approx(cov_triangle_wedge_naive(tri, wedges), rel=1e-9)
    assert var_family(wedges) >= var_single(wedges) >= 0.0


def test_threads_match_sequential():
    state = run(permute(er_stream(300, 20, seed=5), 1), SamplerConfig(p=0.4, q=0.5, seed=2))
    _, wedges, tri = families(state)
    assert len(tri) > 16
    for threads in (2, 4, 7):
        assert var_family(wedges, threads) == pytest.approx(var_family(wedges), rel=1e-9)
        assert var_family(tri, threads) == pytest.approx(var_family(tri), rel=1e-9)
        assert cov_triangle_wedge(tri, wedges, threads) == pytest.approx(
            cov_triangle_wedge(tri, wedges), rel=1e-9
        )


# ============ Delta method and intervals ============

def test_var_clustering_examples():
    assert var_clustering(1.0, 3.0, 0.0, 0.0, 0.0).variance == 0.0
    delta = var_clustering(1.0, 3.0, 0.5, 0.0, 0.0)
    assert delta.variance == pytest.approx(0.5)
    assert not delta.clamped


def test_var_clustering_clamps_negative():
    delta = var_clustering(1.0, 3.0, 0.0, 0.0, 5.0)
    assert delta.variance == 0.0
    assert delta.clamped


def test_var_clustering_undefined():
    with pytest.raises(UndefinedEstimateError):
        var_clustering(1.0, 0.0, 1.0, 1.0, 0.0)


@pytest.mark.parametrize("estimate, variance, expected", [
    (100.0, 0.0, (100.0, 100.0)),
    (0.0, 1.0, (-1.96, 1.96)),
    (249_600.0, (12_800 / 1.96) ** 2, (236_800.0, 262_400.0)),
])
def test_confidence_interval(estimate, variance, expected):
    assert confidence_interval(estimate, variance) == pytest.approx(expected)


def test_confidence_interval_negative_variance():
    with pytest.raises(NegativeVarianceError):
        confidence_interval(1.0, -1e-3)


# ============ estimate_all ============

def test_estimate_all_on_full_k3(k3):
    reports = estimate_all(full_state(k3), list(Statistic))
    assert list(reports) == list(Statistic)
    assert reports[Statistic.N_T].estimate == 1.0
    assert reports[Statistic.N_T].variance == 0.0
    assert reports[Statistic.N_LAMBDA].estimate == 3.0
    assert reports[Statistic.ALPHA].estimate == 1.0
    assert reports[Statistic.ALPHA].lb == reports[Statistic.ALPHA].ub == 1.0
    assert reports[Statistic.N_V].estimate == 3.0
    assert reports[Statistic.N_V].variance is None
    assert reports[Statistic.N_V].flags == ['no-variance-estimator']


def test_estimate_all_bounds_and_timings():
    state = make_state(K3_ALL_P, p=0.5)
    timings = {}
    reports = estimate_all(state, [Statistic.N_T, Statistic.N_K], timings=timings)
    assert list(reports) == [Statistic.N_T, Statistic.N_K]
    nt = reports[Statistic.N_T]
    assert nt.estimate == pytest.approx(8.0)
    assert nt.variance == pytest.approx(8.0 * 7.0)
    assert nt.lb == pytest.approx(8.0 - 1.96 * math.sqrt(56.0))
    assert nt.ub == pytest.approx(8.0 + 1.96 * math.sqrt(56.0))
    assert set(timings) == {'estimate', 'variance'}


def test_estimate_all_flags_undefined_clustering():
    state = make_state([((1, 2), P), ((3, 4), P)])
    alpha = estimate_all(state, [Statistic.ALPHA])[Statistic.ALPHA]
    assert alpha.estimate is None
    assert alpha.flags == ['undefined']


def test_estimate_all_threads_agree():
    state = run(permute(er_stream(120, 12, seed=9), 4), SamplerConfig(p=0.5, q=0.5, seed=3))
    one = estimate_all(state)
    many = estimate_all(state, threads=3)
    for statistic, report in one.items():
        assert np.isclose(many[statistic].variance, report.variance, rtol=1e-9, atol=0.0)


@pytest.mark.slow
def test_estimate_all_on_40k_edge_sample():
    state = run(permute(er_stream(5000, 16, seed=1), 2), SamplerConfig(p=0.9, q=0.9, seed=5))
    assert 30_000 <= len(state) <= 40_000
    start = time.perf_counter()
    estimate_all(state)
    assert time.perf_counter() - start < 5.0
