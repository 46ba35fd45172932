"""
Experiment runner.

Implements the repeated-runs methodology:
- Independent runs per (p, q) grid cell, each with a fresh permutation
- Relative error of mean estimates against exact statistics
- Coverage: fraction of runs whose 95% interval contains the truth
- JSON / CSV output
"""

import csv
import hashlib
import io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Iterable, Optional, Sequence

from pydantic import ValidationError

from gsh import __version__
from gsh.core.errors import ConfigError, SinkError
from gsh.models.graph import EdgeStream, Mode
from gsh.models.schemas import (
    AggregateResult,
    ExactStats,
    ExperimentConfig,
    RunResult,
    SamplerConfig,
    Statistic,
    StatisticAggregate,
)
from gsh.services.ingest import load_edge_list, permute
from gsh.services.sampler import GraphSampleHold, sampling_fraction
from gsh.services.variance import estimate_all

logger = logging.getLogger(__name__)

RUN_FIELDS = (
    'p', 'q', 'triangle_closure', 'directed', 'seed', 'order_seed',
    'sample_size', 'stream_size', 'sampling_fraction',
)
AGGREGATE_FIELDS = ('p', 'q', 'stat', 'mean', 'actual', 'rel_err', 'coverage', 'frac', 'runs')


def derive_seed(base_seed: int, *parts) -> int:
    """Reproducible 63-bit seed from a base seed and a cell/run path."""
    text = ":".join(str(x) for x in (base_seed, *parts))
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], 'big') >> 1


def sampler_config(**kwargs) -> SamplerConfig:
    """Build a SamplerConfig, reporting validation failures as ConfigError."""
    try:
        return SamplerConfig(**kwargs)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def single_run(
    stream: EdgeStream,
    config: SamplerConfig,
    order_seed: Optional[int] = None,
    statistics: Optional[Sequence[Statistic]] = None,
    threads: int = 1,
) -> RunResult:
    """
    One run: optional permutation, one sampling pass, all estimates.

    Flow:
    1. Permute the stream with order_seed (skipped when None)
    2. Sample with gSH / gSH_T
    3. Enumerate families, estimate, compute variances and bounds
    """
    timings: dict[str, float] = {}

    start = time.perf_counter()
    ordered = permute(stream, order_seed) if order_seed is not None else stream
    timings['permute'] = time.perf_counter() - start

    start = time.perf_counter()
    state = GraphSampleHold(config, ordered.mode).run(ordered)
    timings['sample'] = time.perf_counter() - start

    reports = estimate_all(state, statistics, threads, timings)
    return RunResult(
        p=config.p,
        q=config.q,
        triangle_closure=config.triangle_closure,
        directed=ordered.directed,
        seed=config.seed,
        order_seed=order_seed,
        sample_size=len(state),
        stream_size=len(ordered),
        sampling_fraction=sampling_fraction(state, ordered),
        reports=reports,
        wall_time=timings,
    )


def run_experiment(cfg: ExperimentConfig, stream: Optional[EdgeStream] = None) -> list[RunResult]:
    """
    Every run of every grid cell, in (p, q, run) order.

    Runs are independent: each gets its own permutation and sampling
    seeds derived from (base_seed, p-index, q-index, run-index).
    """
    if stream is None:
        mode = Mode.DIRECTED if cfg.directed else Mode.UNDIRECTED
        stream = load_edge_list(cfg.input, mode)

    tasks = []
    for pi, p in enumerate(cfg.p_grid):
        for qi, q in enumerate(cfg.q_grid):
            for r in range(cfg.runs):
                config = sampler_config(
                    p=p,
                    q=q,
                    triangle_closure=cfg.triangle_closure,
                    seed=derive_seed(cfg.base_seed, pi, qi, r, 'sample'),
                )
                tasks.append((config, derive_seed(cfg.base_seed, pi, qi, r, 'order')))

    logger.info(
        f"Running {len(tasks)} runs ({len(cfg.p_grid)}x{len(cfg.q_grid)} cells, "
        f"{cfg.runs} each) on {len(stream)} edges with {cfg.threads} thread(s)"
    )

    def execute(task):
        config, order_seed = task
        return single_run(stream, config, order_seed, cfg.statistics)

    start = time.perf_counter()
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(execute, tasks))
    else:
        results = [execute(t) for t in tasks]
    logger.info(f"Experiment finished in {time.perf_counter() - start:.2f}s")
    return results


def _mean(values: list[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def aggregate(results: Iterable[RunResult], exact: ExactStats) -> list[AggregateResult]:
    """
    Per grid cell: mean estimate, relative error, coverage and mean
    sampling fraction, folded in run order.

    Runs with an undefined estimate are left out of the mean and coverage
    of that statistic and counted in `undefined_runs`.
    """
    cells: dict[tuple[float, float], list[RunResult]] = {}
    for r in results:
        cells.setdefault((r.p, r.q), []).append(r)

    out = []
    for (p, q), runs in cells.items():
        stats: dict[Statistic, StatisticAggregate] = {}
        for statistic in runs[0].reports:
            actual = exact.actual(statistic)
            estimates = []
            covered = []
            undefined = 0
            for r in runs:
                report = r.reports[statistic]
                if report.estimate is None:
                    undefined += 1
                    continue
                estimates.append(report.estimate)
                if report.lb is not None and actual is not None:
                    covered.append(report.lb <= actual <= report.ub)

            mean = _mean(estimates)
            rel_err = None
            if mean is not None and actual:
                rel_err = abs(mean - actual) / actual
            stats[statistic] = StatisticAggregate(
                mean=mean,
                actual=actual,
                rel_err=rel_err,
                coverage=_mean([float(c) for c in covered]),
                runs=len(estimates),
                undefined_runs=undefined,
            )
        out.append(AggregateResult(
            p=p,
            q=q,
            runs=len(runs),
            mean_sampling_fraction=_mean([r.sampling_fraction for r in runs]),
            mean_sample_size=_mean([float(r.sample_size) for r in runs]),
            stats=stats,
        ))
    return out


# ============ Output ============

def _run_row(r: RunResult, include_timings: bool) -> dict:
    row = {f: getattr(r, f) for f in RUN_FIELDS}
    for statistic, report in r.reports.items():
        name = statistic.value
        row[name] = report.estimate
        row[f"{name}_var"] = report.variance
        row[f"{name}_lb"] = report.lb
        row[f"{name}_ub"] = report.ub
    if include_timings:
        for phase, seconds in r.wall_time.items():
            row[f"time_{phase}"] = seconds
    return row


def _csv(rows: list[dict], fieldnames: Optional[Sequence[str]] = None) -> bytes:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames or rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ('' if v is None else v) for k, v in row.items()})
    return buf.getvalue().encode()


def emit(
    results: Sequence[RunResult],
    output_format: str = 'json',
    config: Optional[ExperimentConfig] = None,
    exact: Optional[ExactStats] = None,
    aggregates: Optional[Sequence[AggregateResult]] = None,
    include_timings: bool = False,
) -> bytes:
    """
    Serialize results.

    CSV: one row per aggregate (p, q, stat) when aggregates are given,
    else one row per run. JSON: a document with tool version, config,
    exact stats, runs and aggregates. Wall-clock timings are left out
    unless requested so identical configs give identical bytes apart from
    `generated_at`.
    """
    if not results:
        raise ConfigError("no results to emit")

    if output_format == 'csv':
        if aggregates:
            rows = [
                {
                    'p': a.p, 'q': a.q, 'stat': s.value, 'mean': agg.mean,
                    'actual': agg.actual, 'rel_err': agg.rel_err, 'coverage': agg.coverage,
                    'frac': a.mean_sampling_fraction, 'runs': agg.runs,
                }
                for a in aggregates
                for s, agg in a.stats.items()
            ]
            return _csv(rows, AGGREGATE_FIELDS)
        return _csv([_run_row(r, include_timings) for r in results])

    if output_format != 'json':
        raise ConfigError(f"unknown output format {output_format!r}")

    exclude = None if include_timings else {'wall_time'}
    doc = {
        'tool': 'gsh',
        'version': __version__,
        'generated_at': datetime.now(timezone.utc).isoformat(),
        'config': config.model_dump(mode='json') if config else None,
        'exact': exact.model_dump(mode='json', exclude={'count_seconds'}) if exact else None,
        'runs': [r.model_dump(mode='json', exclude=exclude) for r in results],
        'aggregates': [a.model_dump(mode='json') for a in aggregates] if aggregates else None,
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()


def load_runs(data: bytes) -> list[RunResult]:
    """Parse the runs of a JSON document produced by emit()."""
    doc = json.loads(data)
    return [RunResult.model_validate(r) for r in doc['runs']]


def write_output(data: bytes, path: Optional[str] = None) -> None:
    """
    Write to a file, or to stdout when path is None.

    Raises:
        SinkError: the destination is not writable
    """
    try:
        if path is None:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
        else:
            with open(path, 'wb') as f:
                f.write(data)
    except OSError as e:
        raise SinkError(f"cannot write results to {path or 'stdout'}: {e}") from e
