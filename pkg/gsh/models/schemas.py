"""
Pydantic schemas for sampler configuration, estimate reports and experiments.
"""

from enum import Enum
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from gsh.core.config import settings


class Statistic(str, Enum):
    """Graph statistics the estimators target."""
    N_K = "N_K"
    N_T = "N_T"
    N_LAMBDA = "N_Lambda"
    ALPHA = "alpha"
    N_V = "N_V"


# N_V has no variance estimator, so it is left out of CI tables by default
DEFAULT_STATISTICS = (Statistic.N_K, Statistic.N_T, Statistic.N_LAMBDA, Statistic.ALPHA)

# Wedges and triangles are not enumerated on directed samples
DIRECTED_STATISTICS = (Statistic.N_K, Statistic.N_V)


def _check_probability(v: float) -> float:
    if not settings.min_probability <= v <= 1.0:
        raise ValueError(
            f"probability {v} outside [{settings.min_probability}, 1]"
        )
    return v


class SamplerConfig(BaseModel):
    """Parameters of one gSH(p,q) / gSH_T(p,q) pass."""

    model_config = ConfigDict(frozen=True)

    p: float = Field(..., gt=0.0, le=1.0, description="Probability for fresh edges")
    q: float = Field(..., gt=0.0, le=1.0, description="Probability for adjacent edges")
    triangle_closure: bool = Field(
        default=True,
        description="Select triangle-closing edges with probability 1 (gSH_T)"
    )
    seed: int = Field(default=0, description="Seed of the selection RNG")

    @field_validator('p', 'q')
    @classmethod
    def validate_floor(cls, v: float) -> float:
        """Probability products stay well inside double range."""
        return _check_probability(v)


class EstimateReport(BaseModel):
    """Point estimate, variance estimate and 95% bounds of one statistic."""

    statistic: Statistic
    estimate: Optional[float] = Field(None, description="None when undefined")
    variance: Optional[float] = Field(None, ge=0.0, description="None when no estimator exists")
    lb: Optional[float] = None
    ub: Optional[float] = None
    flags: list[str] = Field(default_factory=list)


class ExactStats(BaseModel):
    """Exact statistics of a full graph."""

    n: int = Field(..., ge=0, description="Non-isolated node count")
    n_k: int = Field(..., ge=0)
    n_t: int = Field(..., ge=0)
    n_lambda: int = Field(..., ge=0)
    alpha: Optional[float] = Field(None, description="None when n_lambda == 0")
    density: float = Field(..., ge=0.0)
    directed: bool = False
    count_seconds: float = 0.0

    def actual(self, statistic: Statistic) -> Optional[float]:
        """True value of a statistic, None if undefined."""
        return {
            Statistic.N_K: float(self.n_k),
            Statistic.N_T: float(self.n_t),
            Statistic.N_LAMBDA: float(self.n_lambda),
            Statistic.ALPHA: self.alpha,
            Statistic.N_V: float(self.n),
        }[statistic]


class RunResult(BaseModel):
    """One sampling run: sample size plus a report per statistic."""

    p: float
    q: float
    triangle_closure: bool = True
    directed: bool = False
    seed: int
    order_seed: Optional[int] = None
    sample_size: int = Field(..., ge=0, description="Held edge count")
    stream_size: int = Field(..., ge=0)
    sampling_fraction: float = Field(..., ge=0.0, le=1.0)
    reports: dict[Statistic, EstimateReport]
    wall_time: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode='after')
    def validate_sizes(self) -> 'RunResult':
        if self.sample_size > self.stream_size:
            raise ValueError('sample_size exceeds stream size')
        return self


class StatisticAggregate(BaseModel):
    """Summary of one statistic over the runs of a grid cell."""

    mean: Optional[float] = None
    actual: Optional[float] = None
    rel_err: Optional[float] = Field(None, ge=0.0)
    coverage: Optional[float] = Field(None, ge=0.0, le=1.0)
    runs: int = 0
    undefined_runs: int = 0


class AggregateResult(BaseModel):
    """Per grid cell: mean estimates, relative errors and coverage."""

    p: float
    q: float
    runs: int
    mean_sampling_fraction: float
    mean_sample_size: float
    stats: dict[Statistic, StatisticAggregate]


class ExperimentConfig(BaseModel):
    """A (p, q) grid sweep of independent sampling runs."""

    input: str = Field(..., min_length=1, description="Edge list path")
    directed: bool = False
    p_grid: list[float] = Field(..., min_length=1)
    q_grid: list[float] = Field(..., min_length=1)
    triangle_closure: bool = True
    runs: int = Field(default=100, ge=1)
    base_seed: int = 0
    output_format: Literal['json', 'csv'] = 'json'
    statistics: list[Statistic] = Field(default_factory=lambda: list(DEFAULT_STATISTICS))
    threads: int = Field(default=1, ge=1)

    @field_validator('p_grid', 'q_grid')
    @classmethod
    def validate_grid(cls, v: list[float]) -> list[float]:
        for prob in v:
            if not 0.0 < prob <= 1.0:
                raise ValueError(f"probability {prob} outside (0, 1]")
            _check_probability(prob)
        return v

    @field_validator('statistics')
    @classmethod
    def validate_statistics(cls, v: list[Statistic]) -> list[Statistic]:
        if not v:
            raise ValueError('at least one statistic is required')
        # Keep request order, drop repeats
        return list(dict.fromkeys(v))

    @model_validator(mode='after')
    def validate_mode(self) -> 'ExperimentConfig':
        if self.directed and self.triangle_closure:
            raise ValueError('triangle closure is only defined for undirected streams')
        if self.directed and set(self.statistics) - set(DIRECTED_STATISTICS):
            raise ValueError('directed streams support only N_K and N_V')
        return self


# ============ HTTP bodies ============

class EdgeListBody(BaseModel):
    """Edge list sent inline to the HTTP service."""

    edges: list[tuple[int, int]] = Field(..., min_length=1)
    directed: bool = False


class SamplingBody(EdgeListBody):
    """Inline edge list plus the sampler variant."""

    triangle_closure: Optional[bool] = Field(
        None, description="Defaults to true, false for directed edge lists"
    )

    @model_validator(mode='after')
    def default_closure(self) -> 'SamplingBody':
        if self.triangle_closure is None:
            self.triangle_closure = not self.directed
        return self


class SampleRequest(SamplingBody):
    """Request model for a single sampling run."""

    p: float = Field(default_factory=lambda: settings.default_p, gt=0.0, le=1.0)
    q: float = Field(default_factory=lambda: settings.default_q, gt=0.0, le=1.0)
    seed: int = 0
    permute: bool = True
    statistics: Optional[list[Statistic]] = Field(
        None, description="Defaults to N_K, N_T, N_Lambda, alpha; N_K, N_V for directed edge lists"
    )

    @model_validator(mode='after')
    def default_statistics(self) -> 'SampleRequest':
        if self.statistics is None:
            self.statistics = list(DIRECTED_STATISTICS if self.directed else DEFAULT_STATISTICS)
        return self


class EnumerateRequest(SamplingBody):
    """Request model for an exhaustive outcome tree."""

    p: float = Field(..., gt=0.0, le=1.0)
    q: float = Field(..., gt=0.0, le=1.0)


class OutcomeModel(BaseModel):
    """One leaf of the outcome tree."""

    selected: list[bool]
    probability: float
    classes: list[str]
    weights: list[float]


class OutcomeTreeResponse(BaseModel):
    """Every sampling outcome of a tiny stream."""

    edges: list[tuple[int, int]]
    outcomes: list[OutcomeModel]
    total_probability: float


class HealthResponse(BaseModel):
    """Health check response."""

    status: str = Field(..., description="Service status")
    version: str
