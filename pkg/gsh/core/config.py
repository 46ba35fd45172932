import logging
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class Settings(BaseSettings):
    # Logging
    log_level: str = "INFO"

    # Sampling defaults
    default_p: float = 0.005
    default_q: float = 0.008
    default_runs: int = 100
    default_seed: int = 0
    threads: int = 1
    min_probability: float = 1e-6

    # Oracle limits
    max_outcome_edges: int = 20

    # Exact statistics cache
    cache_dir: Optional[str] = None
    exact_cache_ttl: int = 7 * 86400  # 1 week

    # Redis settings (empty host disables the Redis layer)
    redis_host: str = ""
    redis_port: int = 6379
    redis_db: int = 0
    redis_password: str = ""

    # HTTP service
    api_host: str = "127.0.0.1"
    api_port: int = 8000

    model_config = SettingsConfigDict(env_prefix="GSH_", env_file=".env", extra="ignore")


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once, to stderr."""
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format=LOG_FORMAT,
    )


settings = Settings()
