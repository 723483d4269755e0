"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

from ..instances import InstanceSpec
from ..pipeline import PipelineConfig


class InstanceSpecModel(BaseModel):
    family: Literal["erdos_renyi", "planted_matching", "hard_sparse_induced"]
    n: int = Field(ge=2)
    seed: int = 0
    deletion_fraction: float = Field(0.0, ge=0, lt=1)
    p: float = Field(0.01, ge=0, le=1)
    mu: int | None = Field(None, ge=0)
    distractors: int = Field(0, ge=0)
    alpha: float = Field(4.0, gt=1)
    noise: float = Field(0.5, ge=0)
    dense_degree: int = Field(16, ge=0)

    def to_spec(self) -> InstanceSpec:
        return InstanceSpec(**self.model_dump())


class RunOptions(BaseModel):
    """Pipeline settings other than n, which a run takes from its stream."""

    alpha: float = Field(gt=1)
    delta: float = Field(0.5, gt=0, le=0.5)
    seed: int = 0
    small_alpha_threshold: float = 100.0
    fallback: Literal["parity_store", "best_effort_mos", "error"] = "parity_store"
    budget_bits: int | None = Field(None, ge=0)
    regime_opt_factor: float = Field(1.0, ge=0)
    match_knob: float = Field(1.0, gt=0)
    tester_scale: float = Field(1.0, gt=0)
    sparsify_copies: int | None = Field(None, ge=1)
    per_guess: bool = True

    def to_config(self, n: int) -> PipelineConfig:
        return PipelineConfig(n=n, **self.model_dump())


class PipelineConfigModel(RunOptions):
    n: int = Field(ge=2)

    def to_config(self, n: int | None = None) -> PipelineConfig:
        return PipelineConfig(**self.model_dump())


class StreamText(BaseModel):
    text: str = Field(description="stream in the line format: header 'n <N>' then '+ u v' / '- u v'")


class GenerateResponse(StreamText):
    n: int
    updates: int
    planted_mu: int | None = None


class RunRequest(BaseModel):
    stream: str
    options: RunOptions
    timing: bool = False


class VerifyRequest(BaseModel):
    stream: str
    report: dict[str, Any]


class VerifyResponse(BaseModel):
    passed: bool
    problems: list[str]
    ratio: float | list[float] | None = None


class SessionCreate(BaseModel):
    config: PipelineConfigModel


class SessionInfo(BaseModel):
    id: str
    n: int
    updates: int


class UpdateBatch(BaseModel):
    updates: list[tuple[int, int, int]] = Field(description="(u, v, delta) triples with delta in {+1, -1}")


class MergeRequest(BaseModel):
    other: str


class BitsResponse(BaseModel):
    total: int
    sketch: int
    randomness: int
    fallback: int
    per_guess: dict[str, int] | None = None
    budget: int | None = None
    within_budget: bool | None = None


class ErrorResponse(BaseModel):
    detail: str
    line: int | None = None
