"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field, model_validator


class ViolationItem(BaseModel):
    entity: str
    rule: str
    severity: str


class ValidateRequest(BaseModel):
    network: dict


class ValidateResponse(BaseModel):
    ok: bool
    violations: list[ViolationItem]


class CatalogEntry(BaseModel):
    model_id: str
    objective: str
    policy_constraint: str
    vulnerability_index: Optional[str]
    budget: float


class CatalogResponse(BaseModel):
    budget: float
    specs: list[CatalogEntry]


class RunRequest(BaseModel):
    """Submit a pipeline run; the service reads input files from its own
    filesystem, so paths must be visible to the server process."""

    config_path: Optional[str] = None
    config: Optional[dict] = None
    out_dir: str
    jobs: int = Field(default=1, ge=1)
    emit_only: bool = False
    oracle: bool = False

    @model_validator(mode="after")
    def _one_config_source(self):
        if (self.config_path is None) == (self.config is None):
            raise ValueError("provide exactly one of config_path or config")
        return self


class RunSubmitted(BaseModel):
    run_id: str
    state: str


class RunInfo(BaseModel):
    run_id: str
    state: str  # queued | running | done | failed
    exit_code: Optional[int] = None
    out_dir: Optional[str] = None
    manifest: Optional[dict] = None
    error: Optional[str] = None


class RunList(BaseModel):
    runs: list[RunInfo]


class HealthResponse(BaseModel):
    status: str
    version: str


class ReportResponse(BaseModel):
    run_id: str
    report: dict[str, Any]
