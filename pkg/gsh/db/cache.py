"""
Exact-statistics cache.

Exact triangle counting dominates runtime on large inputs, so results
are cached by content hash:
- Redis: exact:<hash> -> ExactStats JSON (cache-aside, optional)
- Sidecar manifest: <input>.gsh-exact.json, or <cache_dir>/<hash>.json

Redis failures never fail a request; the file layer still applies.
"""

import hashlib
import json
import logging
import os
from typing import Optional

import redis
from pydantic import ValidationError

from gsh.core.config import settings
from gsh.models.graph import EdgeStream, Mode
from gsh.models.schemas import ExactStats
from gsh.services.oracle import exact_count

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".gsh-exact.json"


def file_key(path: str, mode: Mode) -> str:
    """SHA-256 of the input bytes, salted with the adjacency mode."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 20), b''):
            digest.update(block)
    digest.update(mode.value.encode())
    return digest.hexdigest()


def stream_key(stream: EdgeStream) -> str:
    """SHA-256 of an in-memory stream's edge set."""
    digest = hashlib.sha256()
    for e in sorted(stream.edges):
        digest.update(f"{e.a} {e.b}\n".encode())
    digest.update(stream.mode.value.encode())
    return digest.hexdigest()


class ExactStatsCache:
    """Redis + sidecar manifest cache for ExactStats."""

    PREFIX = "exact:"

    def __init__(self):
        self.pool = None
        self.client = None

    def connect(self):
        """Initialize the Redis pool if a host is configured."""
        if not settings.redis_host:
            return
        self.pool = redis.ConnectionPool(
            host=settings.redis_host,
            port=settings.redis_port,
            db=settings.redis_db,
            password=settings.redis_password if settings.redis_password else None,
            decode_responses=True,
            max_connections=10,
            socket_connect_timeout=5,
            socket_timeout=5,
        )
        self.client = redis.Redis(connection_pool=self.pool)

        try:
            self.client.ping()
        except redis.RedisError as e:
            logger.warning(f"Redis connection failed: {e}. Using manifest cache only.")
            self.client = None

    def disconnect(self):
        """Close Redis connections."""
        if self.pool:
            self.pool.disconnect()
        self.pool = None
        self.client = None

    @property
    def is_available(self) -> bool:
        if not self.client:
            return False
        try:
            self.client.ping()
            return True
        except redis.RedisError:
            return False

    # ============ Redis layer ============

    def get(self, key: str) -> Optional[ExactStats]:
        """Cached stats, or None on miss or if Redis is unavailable."""
        if not self.client:
            return None
        try:
            raw = self.client.get(f"{self.PREFIX}{key}")
        except redis.RedisError:
            return None
        if raw is None:
            return None
        try:
            return ExactStats.model_validate_json(raw)
        except ValidationError:
            return None

    def set(self, key: str, stats: ExactStats) -> bool:
        if not self.client:
            return False
        try:
            self.client.setex(f"{self.PREFIX}{key}", settings.exact_cache_ttl, stats.model_dump_json())
            return True
        except redis.RedisError:
            return False

    # ============ Sidecar manifest ============

    @staticmethod
    def manifest_path(input_path: str, key: str) -> str:
        if settings.cache_dir:
            return os.path.join(settings.cache_dir, f"{key}.json")
        return f"{input_path}{MANIFEST_SUFFIX}"

    def read_manifest(self, path: str, key: str) -> Optional[ExactStats]:
        try:
            with open(path, 'r') as f:
                doc = json.load(f)
        except (OSError, ValueError):
            return None
        if doc.get('key') != key:
            return None
        try:
            return ExactStats.model_validate(doc.get('stats'))
        except ValidationError:
            return None

    def write_manifest(self, path: str, key: str, stats: ExactStats) -> bool:
        try:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, 'w') as f:
                json.dump({'key': key, 'stats': stats.model_dump(mode='json')}, f, indent=2)
            return True
        except OSError as e:
            logger.warning(f"Could not write exact-stats manifest {path}: {e}")
            return False

    # ============ Lookup ============

    def get_or_compute(
        self,
        stream: EdgeStream,
        input_path: Optional[str] = None,
        use_cache: bool = True,
    ) -> ExactStats:
        """
        Exact stats for a stream.

        Flow:
        1. Check Redis
        2. Check the sidecar manifest (file inputs only)
        3. Count exactly and write back to both layers
        """
        if not use_cache:
            return exact_count(stream)

        key = file_key(input_path, stream.mode) if input_path else stream_key(stream)

        cached = self.get(key)
        if cached:
            logger.info(f"Exact stats cache hit (redis) {key[:12]}")
            return cached

        manifest = self.manifest_path(input_path, key) if input_path else None
        if manifest:
            cached = self.read_manifest(manifest, key)
            if cached:
                logger.info(f"Exact stats cache hit (manifest) {manifest}")
                self.set(key, cached)
                return cached

        stats = exact_count(stream)
        if manifest:
            self.write_manifest(manifest, key, stats)
        self.set(key, stats)
        return stats


# Singleton instance
exact_cache = ExactStatsCache()
