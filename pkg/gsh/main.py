"""
Graph Sample and Hold HTTP service.

Serves sampling runs, exact statistics and outcome trees for inline
edge lists. Exact statistics are cached in Redis when configured.
"""

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI

from gsh import __version__
from gsh.api.endpoints import router
from gsh.core.config import configure_logging
from gsh.db.cache import exact_cache

configure_logging()
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Connect and disconnect the exact-stats cache."""
    logger.info("Starting Graph Sample and Hold service...")
    try:
        exact_cache.connect()
        if exact_cache.is_available:
            logger.info("Connected to Redis")
        else:
            logger.info("Redis not configured or unavailable - exact stats are not cached")
    except Exception as e:
        logger.warning(f"Redis connection failed: {e} - running without cache")

    yield

    logger.info("Shutting down Graph Sample and Hold service...")
    exact_cache.disconnect()


app = FastAPI(
    title="Graph Sample and Hold",
    description="Single-pass graph stream sampling with unbiased subgraph-count estimates",
    version=__version__,
    lifespan=lifespan,
)


@app.get("/")
def root():
    """Root endpoint with service information."""
    return {
        "service": "Graph Sample and Hold",
        "version": __version__,
        "docs": "/docs",
        "health": "/health",
    }


app.include_router(router)
