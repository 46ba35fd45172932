"""
Edge-list ingestion and stream permutation.

Reads SNAP / Network-Repository style text: one edge per line, two
integer node tokens, optional trailing weight columns, '#' or '%'
comment lines.
"""

import logging
import time
from typing import BinaryIO, Iterable, Union

import numpy as np

from gsh.core.errors import EdgeListParseError, EmptyGraphError, EmptyStreamError
from gsh.models.graph import Edge, EdgeStream, Mode

logger = logging.getLogger(__name__)

COMMENT_PREFIXES = ('#', '%')


def _parse_node(token: str, line_number: int) -> int:
    try:
        node = int(token)
    except ValueError:
        raise EdgeListParseError(f"non-integer node token {token!r}", line_number)
    if node < 0:
        raise EdgeListParseError(f"negative node id {node}", line_number)
    return node


def ingest_edge_list(
    source: Union[BinaryIO, Iterable[bytes], Iterable[str]],
    mode: Mode = Mode.UNDIRECTED,
) -> EdgeStream:
    """
    Parse an edge list into a duplicate-free EdgeStream.

    Self-loops and duplicates (including reversed duplicates in
    undirected mode) are dropped and counted; the kept edges retain file
    order.

    Raises:
        EdgeListParseError: a line has fewer than two tokens or a bad token
        EmptyGraphError: no edge survived ingestion
    """
    start = time.perf_counter()
    seen: set[Edge] = set()
    edges: list[Edge] = []
    dropped = 0
    self_loops = 0

    for line_number, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode('utf-8')
            except UnicodeDecodeError:
                raise EdgeListParseError("invalid UTF-8", line_number)
        line = raw.strip()
        if not line or line.startswith(COMMENT_PREFIXES):
            continue

        tokens = line.split()
        if len(tokens) < 2:
            raise EdgeListParseError("expected two node tokens", line_number)
        a = _parse_node(tokens[0], line_number)
        b = _parse_node(tokens[1], line_number)

        if a == b:
            dropped += 1
            self_loops += 1
            continue

        edge = Edge.of(a, b, mode)
        if edge in seen:
            dropped += 1
            continue
        seen.add(edge)
        edges.append(edge)

    if not edges:
        raise EmptyGraphError("edge list contains no usable edges")

    logger.info(
        f"Ingested {len(edges)} edges ({mode.value}), dropped {dropped} lines "
        f"({self_loops} self-loops) in {time.perf_counter() - start:.3f}s"
    )
    return EdgeStream(edges=tuple(edges), mode=mode, dropped=dropped)


def load_edge_list(path: str, mode: Mode = Mode.UNDIRECTED) -> EdgeStream:
    """Ingest an edge-list file. OSError propagates to the caller."""
    with open(path, 'rb') as f:
        return ingest_edge_list(f, mode)


def permute(stream: EdgeStream, seed: int) -> EdgeStream:
    """
    Uniformly random reordering of the stream, deterministic given seed.

    Raises:
        EmptyStreamError: stream has no edges
    """
    if len(stream) == 0:
        raise EmptyStreamError("cannot permute an empty stream")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(stream))
    return EdgeStream(
        edges=tuple(stream.edges[i] for i in order),
        mode=stream.mode,
        order_seed=seed,
        dropped=stream.dropped,
    )
