"""HTTP service wrapping the scenario pipeline.

Long-running solves are submitted as background runs and polled; small
operations (validation, the model catalog) answer synchronously. The CLI's
`run --server` mode is a thin client of these endpoints.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from .. import __version__
from ..network import network_from_json, validate_network
from ..pipeline import ConfigError, Pipeline, RunConfig
from ..scenarios import scenario_catalog
from .schemas import (CatalogEntry, CatalogResponse, HealthResponse,
                      ReportResponse, RunInfo, RunList, RunRequest,
                      RunSubmitted, ValidateRequest, ValidateResponse,
                      ViolationItem)

app = FastAPI(title="gridharden", version=__version__)


@dataclass
class _Run:
    run_id: str
    out_dir: str
    state: str = "queued"
    exit_code: int | None = None
    manifest: dict | None = None
    error: str | None = None
    thread: threading.Thread | None = field(default=None, repr=False)

    def info(self) -> RunInfo:
        return RunInfo(run_id=self.run_id, state=self.state,
                       exit_code=self.exit_code, out_dir=self.out_dir,
                       manifest=self.manifest, error=self.error)


_runs: dict[str, _Run] = {}
_runs_lock = threading.Lock()


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest) -> ValidateResponse:
    try:
        net = network_from_json(req.network)
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"malformed network: {exc}")
    violations = validate_network(net)
    return ValidateResponse(
        ok=not any(v.severity == "error" for v in violations),
        violations=[ViolationItem(entity=v.entity, rule=v.rule, severity=v.severity)
                    for v in violations],
    )


@app.get("/catalog", response_model=CatalogResponse)
def catalog(budget: float = 0.0) -> CatalogResponse:
    if budget < 0:
        raise HTTPException(status_code=422, detail="budget must be >= 0")
    specs = scenario_catalog(budget)
    return CatalogResponse(budget=budget, specs=[
        CatalogEntry(model_id=s.model_id, objective=s.objective,
                     policy_constraint=s.policy_constraint,
                     vulnerability_index=s.vulnerability_index, budget=s.budget)
        for s in specs
    ])


def _execute(run: _Run, pipeline: Pipeline) -> None:
    run.state = "running"
    try:
        manifest, code = pipeline.run()
        run.manifest = manifest
        run.exit_code = code
        run.state = "done"
    except Exception as exc:  # background thread: surface via the registry
        run.error = f"{type(exc).__name__}: {exc}"
        run.exit_code = 1
        run.state = "failed"


@app.post("/runs", response_model=RunSubmitted)
def submit_run(req: RunRequest) -> RunSubmitted:
    try:
        if req.config_path:
            config = RunConfig.load(req.config_path)
        else:
            config = RunConfig.from_dict(req.config)
        pipeline = Pipeline(config, req.out_dir, jobs=req.jobs,
                            force_oracle=req.oracle, emit_only=req.emit_only)
    except (OSError, ConfigError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    run = _Run(run_id=uuid.uuid4().hex[:12], out_dir=str(pipeline.out))
    thread = threading.Thread(target=_execute, args=(run, pipeline), daemon=True)
    run.thread = thread
    with _runs_lock:
        _runs[run.run_id] = run
    thread.start()
    return RunSubmitted(run_id=run.run_id, state=run.state)


@app.get("/runs", response_model=RunList)
def list_runs() -> RunList:
    with _runs_lock:
        return RunList(runs=[r.info() for r in _runs.values()])


def _get_run(run_id: str) -> _Run:
    with _runs_lock:
        run = _runs.get(run_id)
    if run is None:
        raise HTTPException(status_code=404, detail=f"unknown run {run_id}")
    return run


@app.get("/runs/{run_id}", response_model=RunInfo)
def run_info(run_id: str) -> RunInfo:
    return _get_run(run_id).info()


@app.get("/runs/{run_id}/report")
def run_report(run_id: str, format: str = "json"):
    run = _get_run(run_id)
    if run.state != "done":
        raise HTTPException(status_code=409, detail=f"run is {run.state}")
    out = Path(run.out_dir)
    if format == "csv":
        path = out / "report.csv"
        if not path.exists():
            raise HTTPException(status_code=404, detail="run produced no report.csv")
        return PlainTextResponse(path.read_text(), media_type="text/csv")
    if format == "json":
        path = out / "report.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail="run produced no report.json")
        return ReportResponse(run_id=run_id, report=json.loads(path.read_text()))
    raise HTTPException(status_code=422, detail="format must be csv or json")
