"""
HTTP endpoints for sampling and estimation on inline edge lists.
"""

import logging

from fastapi import APIRouter, HTTPException

from gsh import __version__
from gsh.core.errors import (
    ConfigError,
    GSHError,
    StreamTooLargeError,
)
from gsh.db.cache import exact_cache
from gsh.models.graph import EdgeStream, Mode
from gsh.models.schemas import (
    EdgeListBody,
    EnumerateRequest,
    ExactStats,
    HealthResponse,
    OutcomeTreeResponse,
    RunResult,
    SampleRequest,
)
from gsh.services.harness import derive_seed, sampler_config, single_run
from gsh.services.ingest import ingest_edge_list
from gsh.services.oracle import enumerate_outcomes, tree_response

logger = logging.getLogger(__name__)

router = APIRouter()


def _stream(body: EdgeListBody) -> EdgeStream:
    """Run inline edges through the same ingestion rules as files."""
    mode = Mode.DIRECTED if body.directed else Mode.UNDIRECTED
    return ingest_edge_list((f"{a} {b}" for a, b in body.edges), mode)


def _http_error(e: GSHError) -> HTTPException:
    if isinstance(e, StreamTooLargeError):
        return HTTPException(status_code=413, detail=str(e))
    return HTTPException(status_code=400, detail=str(e))


@router.get(
    "/health",
    response_model=HealthResponse,
    summary="Health check",
)
def health_check():
    """Health check endpoint."""
    return HealthResponse(status="healthy", version=__version__)


@router.post(
    "/exact",
    response_model=ExactStats,
    responses={400: {"description": "Invalid edge list"}},
    summary="Exact statistics of a graph",
)
def exact(body: EdgeListBody):
    """Exact node, edge, triangle and wedge counts, clustering and density."""
    try:
        return exact_cache.get_or_compute(_stream(body))
    except GSHError as e:
        raise _http_error(e)


@router.post(
    "/sample",
    response_model=RunResult,
    responses={400: {"description": "Invalid edge list or sampler settings"}},
    summary="One gSH / gSH_T sampling run",
)
def sample(req: SampleRequest):
    """
    Sample the edge list once and report estimates with 95% bounds.

    - **p**, **q**: selection probabilities for fresh / adjacent edges
    - **triangle_closure**: select triangle-closing edges with probability 1
    - **permute**: shuffle the edges before sampling; `seed` drives both draws
    """
    logger.info(f"Sample request: {len(req.edges)} edges, p={req.p}, q={req.q}")
    try:
        stream = _stream(req)
        config = sampler_config(
            p=req.p,
            q=req.q,
            triangle_closure=req.triangle_closure,
            seed=derive_seed(req.seed, "sample"),
        )
        return single_run(
            stream,
            config,
            order_seed=derive_seed(req.seed, "order") if req.permute else None,
            statistics=req.statistics,
        )
    except GSHError as e:
        raise _http_error(e)


@router.post(
    "/enumerate",
    response_model=OutcomeTreeResponse,
    responses={
        400: {"description": "Invalid edge list or sampler settings"},
        413: {"description": "Too many edges for exhaustive enumeration"},
    },
    summary="Exhaustive outcome tree of a tiny stream",
)
def enumerate_tree(req: EnumerateRequest):
    """Every sampling outcome of the edge list in the given order, with its probability."""
    try:
        stream = _stream(req)
        if len(stream) != len(req.edges):
            raise ConfigError("outcome enumeration needs distinct, loop-free edges")
        config = sampler_config(p=req.p, q=req.q, triangle_closure=req.triangle_closure)
        tree = enumerate_outcomes(stream, config)
    except GSHError as e:
        raise _http_error(e)
    return tree_response(tree)
