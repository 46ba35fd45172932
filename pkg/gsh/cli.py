"""
Graph Sample and Hold command line.

Usage:
    gsh sample --input graph.txt --p 0.005 --q 0.008
    gsh exact --input graph.txt
    gsh experiment --input graph.txt --p 0.005,0.008 --q 0.005,0.008 --runs 100 --format csv
    gsh enumerate --input path3.txt --p 0.5 --q 1
    gsh generate --n 500 --mean-degree 20 --seed 1 --out er.txt
    gsh serve --port 8000

Exit codes: 0 success, 1 configuration error, 2 I/O error.
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from gsh import __version__
from gsh.core.config import configure_logging, settings
from gsh.core.errors import (
    ConfigError,
    EdgeListParseError,
    EmptyGraphError,
    GSHError,
    SinkError,
)
from gsh.db.cache import exact_cache
from gsh.models.graph import Mode
from gsh.models.schemas import (
    DEFAULT_STATISTICS,
    DIRECTED_STATISTICS,
    ExperimentConfig,
    Statistic,
)
from gsh.services.harness import (
    aggregate,
    derive_seed,
    emit,
    run_experiment,
    sampler_config,
    single_run,
    write_output,
)
from gsh.services.ingest import load_edge_list
from gsh.services.oracle import enumerate_outcomes, tree_response
from gsh.services.synthetic import erdos_renyi_stream, write_edge_list

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2

IO_ERRORS = (SinkError, EdgeListParseError, EmptyGraphError, OSError)


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors reported as configuration errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# ============ Argument types ============

def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ('true', '1', 'yes', 'on'):
        return True
    if value in ('false', '0', 'no', 'off'):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(',') if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _stat_list(text: str) -> list[Statistic]:
    by_name = {s.value.lower(): s for s in Statistic}
    out = []
    for name in text.split(','):
        name = name.strip()
        if not name:
            continue
        if name.lower() not in by_name:
            choices = ', '.join(s.value for s in Statistic)
            raise argparse.ArgumentTypeError(f"unknown statistic {name!r} (choose from {choices})")
        out.append(by_name[name.lower()])
    if not out:
        raise argparse.ArgumentTypeError("empty statistics list")
    return out


def _mode(args) -> Mode:
    return Mode.DIRECTED if args.directed else Mode.UNDIRECTED


def _triangle_closure(args) -> bool:
    """Defaults to on, except for directed streams where it is undefined."""
    if args.triangle_closure is None:
        return not args.directed
    return args.triangle_closure


def _statistics(args) -> list[Statistic]:
    if args.stats:
        return args.stats
    return list(DIRECTED_STATISTICS if args.directed else DEFAULT_STATISTICS)


def _single(values: list[float], flag: str) -> float:
    if len(values) != 1:
        raise ConfigError(f"{flag} takes a single value for this command")
    return values[0]


# ============ Commands ============

def cmd_sample(args) -> int:
    stream = load_edge_list(args.input, _mode(args))
    config = sampler_config(
        p=_single(args.p, '--p'),
        q=_single(args.q, '--q'),
        triangle_closure=_triangle_closure(args),
        seed=derive_seed(args.seed, 'sample'),
    )
    result = single_run(
        stream,
        config,
        order_seed=None if args.no_permute else derive_seed(args.seed, 'order'),
        statistics=_statistics(args),
        threads=args.threads,
    )
    write_output(emit([result], args.format, include_timings=args.timings), args.out)
    return EXIT_OK


def cmd_exact(args) -> int:
    stream = load_edge_list(args.input, _mode(args))
    exact_cache.connect()
    try:
        stats = exact_cache.get_or_compute(stream, args.input, use_cache=not args.no_cache)
    finally:
        exact_cache.disconnect()
    write_output((stats.model_dump_json(indent=2) + "\n").encode(), args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig(
        input=args.input,
        directed=args.directed,
        p_grid=args.p,
        q_grid=args.q,
        triangle_closure=_triangle_closure(args),
        runs=args.runs,
        base_seed=args.seed,
        output_format=args.format,
        statistics=_statistics(args),
        threads=args.threads,
    )
    stream = load_edge_list(cfg.input, _mode(args))

    exact_cache.connect()
    try:
        exact = exact_cache.get_or_compute(stream, cfg.input, use_cache=not args.no_cache)
    finally:
        exact_cache.disconnect()

    if Statistic.N_V in cfg.statistics:
        logger.info("N_V has no variance estimator: no interval or coverage is reported for it")

    results = run_experiment(cfg, stream)
    aggregates = aggregate(results, exact)
    for a in aggregates:
        summary = ", ".join(
            f"{s.value} rel_err={agg.rel_err if agg.rel_err is not None else 'n/a'}"
            for s, agg in a.stats.items()
        )
        logger.info(f"p={a.p} q={a.q} frac={a.mean_sampling_fraction:.4f}: {summary}")

    data = emit(
        results,
        cfg.output_format,
        config=cfg,
        exact=exact,
        aggregates=None if args.per_run else aggregates,
        include_timings=args.timings,
    )
    write_output(data, args.out)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    stream = load_edge_list(args.input, _mode(args))
    config = sampler_config(
        p=_single(args.p, '--p'),
        q=_single(args.q, '--q'),
        triangle_closure=_triangle_closure(args),
    )
    tree = enumerate_outcomes(stream, config)
    doc = tree_response(tree)
    write_output((doc.model_dump_json(indent=2) + "\n").encode(), args.out)
    return EXIT_OK


def cmd_generate(args) -> int:
    stream = erdos_renyi_stream(args.n, args.mean_degree, args.seed)
    try:
        write_edge_list(stream, args.out)
    except OSError as e:
        raise SinkError(f"cannot write edge list to {args.out}: {e}") from e
    logger.info(f"Wrote {len(stream)} edges on {args.n} nodes to {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("gsh.main:app", host=args.host, port=args.port, log_level=args.log_level.lower())
    return EXIT_OK


# ============ Parser ============

def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="gsh",
        description="Graph Sample and Hold: single-pass graph stream sampling and estimation",
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('--log-level', default=settings.log_level, help="Logging level (stderr)")
    sub = parser.add_subparsers(dest='command', required=True, parser_class=ArgumentParser)

    def graph_input(p):
        p.add_argument('--input', required=True, help="Edge list path")
        p.add_argument('--directed', action='store_true', help="Directed adjacency")

    def sampling(p, default_p, default_q):
        p.add_argument('--p', type=_float_list, default=[default_p], help="Probability for fresh edges")
        p.add_argument('--q', type=_float_list, default=[default_q], help="Probability for adjacent edges")
        p.add_argument(
            '--triangle-closure', type=_bool, default=None,
            help="Select triangle-closing edges with probability 1 (default: true, false if --directed)",
        )

    def output(p, formats=True):
        if formats:
            p.add_argument('--format', choices=['json', 'csv'], default='json')
        p.add_argument('--out', default=None, help="Output path (default: stdout)")

    p = sub.add_parser('sample', help="One sampling run with estimates and 95%% bounds")
    graph_input(p)
    sampling(p, settings.default_p, settings.default_q)
    p.add_argument('--seed', type=int, default=settings.default_seed)
    p.add_argument('--stats', type=_stat_list, default=None, help="Comma-separated statistics")
    p.add_argument('--threads', type=int, default=settings.threads)
    p.add_argument('--no-permute', action='store_true', help="Sample in file order")
    p.add_argument('--timings', action='store_true', help="Include phase timings")
    output(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser('exact', help="Exact statistics of the full graph")
    graph_input(p)
    p.add_argument('--no-cache', action='store_true', help="Ignore and do not write cached stats")
    output(p, formats=False)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser('experiment', help="Repeated runs over a (p, q) grid")
    graph_input(p)
    sampling(p, settings.default_p, settings.default_q)
    p.add_argument('--runs', type=int, default=settings.default_runs)
    p.add_argument('--seed', type=int, default=settings.default_seed, help="Base seed")
    p.add_argument('--stats', type=_stat_list, default=None, help="Comma-separated statistics")
    p.add_argument('--threads', type=int, default=settings.threads)
    p.add_argument('--per-run', action='store_true', help="CSV: one row per run instead of per aggregate")
    p.add_argument('--timings', action='store_true', help="Include phase timings")
    p.add_argument('--no-cache', action='store_true', help="Ignore and do not write cached stats")
    output(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser('enumerate', help="Every sampling outcome of a tiny stream, in file order")
    graph_input(p)
    sampling(p, 0.5, 1.0)
    output(p, formats=False)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser('generate', help="Write an Erdos-Renyi G(n, m) edge list")
    p.add_argument('--n', type=int, required=True, help="Node count")
    p.add_argument('--mean-degree', type=float, required=True)
    p.add_argument('--seed', type=int, default=settings.default_seed)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('serve', help="Run the HTTP service")
    p.add_argument('--host', default=settings.api_host)
    p.add_argument('--port', type=int, default=settings.api_port)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        return args.func(args)
    except IO_ERRORS as e:
        logger.debug("I/O failure", exc_info=True)
        print(f"gsh: error: {e}", file=sys.stderr)
        return EXIT_IO
    except (GSHError, ValidationError) as e:
        logger.debug("Configuration failure", exc_info=True)
        message = "; ".join(line.strip() for line in str(e).splitlines())
        print(f"gsh: error: {message}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
