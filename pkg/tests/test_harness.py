"""
Tests for the experiment runner: runs, aggregation and output.
"""

import csv
import io
import json
import math
import re

import numpy as np
import pytest

from conftest import er_stream
from gsh.core.errors import ConfigError, SinkError
from gsh.models.schemas import (
    EstimateReport,
    ExactStats,
    ExperimentConfig,
    RunResult,
    SamplerConfig,
    Statistic,
)
from gsh.services.harness import (
    AGGREGATE_FIELDS,
    RUN_FIELDS,
    aggregate,
    derive_seed,
    emit,
    load_runs,
    run_experiment,
    sampler_config,
    single_run,
    write_output,
)
from gsh.services.oracle import exact_count


def experiment(**kwargs) -> ExperimentConfig:
    fields = dict(input="in-memory", p_grid=[0.5], q_grid=[0.5], runs=3, base_seed=1)
    fields.update(kwargs)
    return ExperimentConfig(**fields)


def without_timings(results):
    return [r.model_dump(exclude={'wall_time'}) for r in results]


# ============ single_run / run_experiment ============

def test_single_run_full_probability_on_k3(k3):
    result = single_run(k3, SamplerConfig(p=1.0, q=1.0), order_seed=0)
    assert result.sample_size == 3
    assert result.triangle_closure and not result.directed
    assert result.sampling_fraction == 1.0
    nt = result.reports[Statistic.N_T]
    assert (nt.estimate, nt.variance, nt.lb, nt.ub) == (1.0, 0.0, 1.0, 1.0)
    assert set(result.wall_time) == {'permute', 'sample', 'estimate', 'variance'}


def test_single_run_keeps_file_order_without_seed(path3):
    result = single_run(path3, SamplerConfig(p=1.0, q=1.0))
    assert result.order_seed is None
    assert result.reports[Statistic.N_LAMBDA].estimate == 2.0


def test_derive_seed_is_stable_and_cell_specific():
    assert derive_seed(0, 1, 2, 3, 'order') == derive_seed(0, 1, 2, 3, 'order')
    seeds = {derive_seed(0, pi, qi, r, tag) for pi in range(3) for qi in range(3) for r in range(5)
             for tag in ('order', 'sample')}
    assert len(seeds) == 90
    assert all(0 <= s < 2 ** 63 for s in seeds)


def test_sampler_config_reports_config_error():
    with pytest.raises(ConfigError):
        sampler_config(p=0.0, q=0.5)


def test_run_experiment_order_and_seeds(diamond):
    cfg = experiment(p_grid=[0.3, 0.6], q_grid=[0.5])
    results = run_experiment(cfg, diamond)
    assert [(r.p, r.q) for r in results] == [(0.3, 0.5)] * 3 + [(0.6, 0.5)] * 3
    assert len({r.order_seed for r in results}) == 6
    assert len({r.seed for r in results}) == 6
    assert list(results[0].reports) == cfg.statistics


def test_run_experiment_threads_do_not_change_results(er_graph):
    cfg = experiment(runs=4, q_grid=[0.4, 0.8])
    sequential = run_experiment(cfg, er_graph)
    parallel = run_experiment(cfg.model_copy(update={'threads': 3}), er_graph)
    assert without_timings(parallel) == without_timings(sequential)


def test_run_experiment_loads_input(edge_file):
    path = edge_file(["1 2", "2 3", "1 3", "3 4"])
    results = run_experiment(experiment(input=path, runs=2))
    assert all(r.stream_size == 4 for r in results)


@pytest.mark.parametrize("overrides", [
    {'runs': 0},
    {'p_grid': []},
    {'q_grid': [1.2]},
    {'directed': True},
    {'directed': True, 'triangle_closure': False},
])
def test_experiment_config_validation(overrides):
    with pytest.raises(ValueError):
        experiment(**overrides)


def test_experiment_config_directed_edge_statistics():
    cfg = experiment(directed=True, triangle_closure=False, statistics=[Statistic.N_K, Statistic.N_V, Statistic.N_K])
    assert cfg.statistics == [Statistic.N_K, Statistic.N_V]


# ============ aggregate ============

def test_aggregate_full_coverage(k3):
    results = run_experiment(experiment(p_grid=[1.0], q_grid=[1.0], runs=2), k3)
    (cell,) = aggregate(results, exact_count(k3))
    assert cell.runs == 2
    assert cell.mean_sampling_fraction == 1.0
    for statistic, agg in cell.stats.items():
        assert agg.coverage == 1.0
        assert agg.rel_err == 0.0
        assert agg.runs == 2


def test_aggregate_skips_undefined_estimates():
    def result(alpha):
        report = (EstimateReport(statistic=Statistic.ALPHA, estimate=alpha, variance=0.0, lb=alpha, ub=alpha)
                  if alpha is not None else EstimateReport(statistic=Statistic.ALPHA, flags=['undefined']))
        return RunResult(p=0.5, q=0.5, seed=0, sample_size=1, stream_size=2, sampling_fraction=0.5,
                         reports={Statistic.ALPHA: report})

    exact = ExactStats(n=3, n_k=2, n_t=0, n_lambda=1, alpha=0.0, density=2 / 3)
    (cell,) = aggregate([result(None), result(0.0), result(0.6)], exact)
    agg = cell.stats[Statistic.ALPHA]
    assert agg.runs == 2
    assert agg.undefined_runs == 1
    assert agg.mean == pytest.approx(0.3)
    assert agg.coverage == 0.5
    # zero truth: relative error undefined
    assert agg.rel_err is None


# ============ emit / output ============

def test_emit_csv_single_run(k3):
    result = single_run(k3, SamplerConfig(p=1.0, q=1.0), order_seed=0)
    lines = emit([result], 'csv').decode().splitlines()
    assert len(lines) == 2
    header = lines[0].split(',')
    assert header[:len(RUN_FIELDS)] == list(RUN_FIELDS)
    assert {'N_T', 'N_T_var', 'N_T_lb', 'N_T_ub'} <= set(header)
    assert not any(h.startswith('time_') for h in header)


def test_emit_csv_aggregate_schema(k3):
    results = run_experiment(experiment(runs=2), k3)
    aggregates = aggregate(results, exact_count(k3))
    rows = list(csv.DictReader(io.StringIO(emit(results, 'csv', aggregates=aggregates).decode())))
    assert tuple(rows[0].keys()) == AGGREGATE_FIELDS
    assert {'p', 'q', 'stat', 'mean', 'rel_err', 'coverage', 'frac'} <= set(AGGREGATE_FIELDS)
    assert [r['stat'] for r in rows] == ['N_K', 'N_T', 'N_Lambda', 'alpha']


def test_emit_json_round_trip(diamond):
    results = run_experiment(experiment(runs=2), diamond)
    data = emit(results, 'json', include_timings=True)
    assert [r.model_dump() for r in load_runs(data)] == [r.model_dump() for r in results]


def test_emit_json_document(diamond):
    cfg = experiment(runs=2)
    results = run_experiment(cfg, diamond)
    exact = exact_count(diamond)
    doc = json.loads(emit(results, 'json', config=cfg, exact=exact, aggregates=aggregate(results, exact)))
    assert doc['tool'] == 'gsh'
    assert doc['config']['base_seed'] == 1
    assert doc['exact']['n_t'] == 2
    assert 'count_seconds' not in doc['exact']
    assert 'wall_time' not in doc['runs'][0]
    assert len(doc['aggregates']) == 1


def test_emit_is_deterministic(diamond):
    cfg = experiment(runs=3)

    def document():
        data = emit(run_experiment(cfg, diamond), 'json', config=cfg).decode()
        return re.sub(r'"generated_at": "[^"]*"', '', data)

    assert document() == document()


def test_emit_rejects_empty_and_unknown_format(k3):
    with pytest.raises(ConfigError):
        emit([], 'json')
    result = single_run(k3, SamplerConfig(p=1.0, q=1.0))
    with pytest.raises(ConfigError):
        emit([result], 'xml')


def test_write_output(tmp_path):
    path = tmp_path / "out.json"
    write_output(b"{}\n", str(path))
    assert path.read_bytes() == b"{}\n"


def test_write_output_unwritable(tmp_path):
    with pytest.raises(SinkError):
        write_output(b"{}", str(tmp_path / "missing" / "out.json"))


# ============ Statistical acceptance ============

def acceptance_runs(stream, p, q):
    cfg = ExperimentConfig(
        input="er-500", p_grid=[p], q_grid=[q], runs=200, base_seed=2024,
        statistics=[Statistic.N_K, Statistic.N_T, Statistic.N_LAMBDA, Statistic.ALPHA],
    )
    return run_experiment(cfg, stream)


@pytest.fixture(scope="module")
def er_500():
    return er_stream(500, 20, seed=11)


@pytest.fixture(scope="module")
def er_runs_sparse(er_500):
    return acceptance_runs(er_500, 0.05, 0.05)


@pytest.fixture(scope="module")
def er_runs_dense(er_500):
    return acceptance_runs(er_500, 0.3, 0.3)


@pytest.mark.slow
def test_monte_carlo_means_and_variance(er_500, er_runs_sparse):
    exact = exact_count(er_500)
    for statistic in (Statistic.N_K, Statistic.N_T, Statistic.N_LAMBDA):
        estimates = np.array([r.reports[statistic].estimate for r in er_runs_sparse])
        standard_error = estimates.std(ddof=1) / math.sqrt(len(estimates))
        assert abs(estimates.mean() - exact.actual(statistic)) <= 4 * standard_error

    nk = np.array([r.reports[Statistic.N_K].estimate for r in er_runs_sparse])
    estimated = np.mean([r.reports[Statistic.N_K].variance for r in er_runs_sparse])
    assert abs(nk.var(ddof=1) - estimated) <= 0.25 * estimated


@pytest.mark.slow
def test_edge_and_wedge_coverage(er_500, er_runs_sparse):
    (cell,) = aggregate(er_runs_sparse, exact_count(er_500))
    for statistic in (Statistic.N_K, Statistic.N_LAMBDA):
        assert 0.88 <= cell.stats[statistic].coverage <= 0.99


@pytest.mark.slow
def test_coverage_with_enough_sampled_triangles(er_500, er_runs_dense):
    # at p = q = 0.05 only a handful of triangles are held and the normal
    # interval for N_T undercovers
    (cell,) = aggregate(er_runs_dense, exact_count(er_500))
    for statistic in (Statistic.N_K, Statistic.N_T, Statistic.N_LAMBDA):
        assert 0.88 <= cell.stats[statistic].coverage <= 0.99
    assert 0.85 <= cell.stats[Statistic.ALPHA].coverage <= 0.99


@pytest.mark.slow
def test_sampling_fraction_bands(er_500):
    low = run_experiment(
        ExperimentConfig(input="er-500", p_grid=[0.005], q_grid=[0.01], runs=20, statistics=[Statistic.N_K]),
        er_500,
    )
    assert np.mean([r.sampling_fraction for r in low]) <= 0.03

    full = single_run(er_500, SamplerConfig(p=1.0, q=1.0), order_seed=3, statistics=[Statistic.N_K])
    assert full.sampling_fraction == 1.0


@pytest.mark.slow
def test_sampling_fraction_grows_with_q(er_graph):
    q_grid = [0.05, 0.1, 0.2, 0.4, 0.8]
    cfg = ExperimentConfig(input="er-200", p_grid=[0.05], q_grid=q_grid, runs=100, statistics=[Statistic.N_K])
    cells = aggregate(run_experiment(cfg, er_graph), exact_count(er_graph))
    fractions = [c.mean_sampling_fraction for c in cells]
    violations = sum(b < a for a, b in zip(fractions, fractions[1:]))
    assert violations <= 1
