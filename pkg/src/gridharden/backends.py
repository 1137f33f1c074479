"""Process-based solve backends and in-process solution verification.

A backend is an external executable described by a small JSON config:
`{"name", "command", "args_template", "solution_format"}`. The solver is
handed an MPS file and must write a solution file; the default bundled
backend is this package's own `backend_main` module run under the current
Python interpreter.

Solution file format ("plain" adapter): one `<variable> <value>` pair per
line; lines starting with `#` carry metadata as `# key value` (`status`,
`objective`, `gap`, `nodes`). Returned solutions are never trusted: rows,
bounds and integrality are re-verified in process and the objective is
recomputed from the returned values.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

from .model import BOUND_FEAS_TOL, INT_FEAS_TOL, ROW_FEAS_TOL, MilpModel
from .mps import emit_model_file

STATUS_OPTIMAL = "optimal"
STATUS_GAPPED = "feasible-gapped"
STATUS_INFEASIBLE = "infeasible"
STATUS_TIME_LIMIT = "time-limit"
STATUS_ERROR = "error"

FEASIBLE_STATUSES = (STATUS_OPTIMAL, STATUS_GAPPED, STATUS_TIME_LIMIT)


@dataclass(frozen=True)
class BackendConfig:
    name: str
    command: str
    args_template: tuple[str, ...]
    solution_format: str = "plain"

    @classmethod
    def from_json(cls, doc: Mapping) -> "BackendConfig":
        return cls(name=str(doc["name"]), command=str(doc["command"]),
                   args_template=tuple(str(a) for a in doc["args_template"]),
                   solution_format=str(doc.get("solution_format", "plain")))

    @classmethod
    def load(cls, path: str | Path) -> "BackendConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def bundled_backend() -> BackendConfig:
    """Subprocess wrapper around this package's own MILP entry point."""
    return BackendConfig(
        name="bundled-highs",
        command=sys.executable,
        args_template=("-m", "gridharden.backend_main", "{model}", "{solution}",
                       "--mip-gap", "{mip_gap}", "--time-limit", "{time_limit}",
                       "{warm_start_args}"),
    )


@dataclass(frozen=True)
class SolveOptions:
    mip_gap: float = 0.01
    time_limit: float = 300.0
    warm_start: Mapping[str, float] | None = None
    backend: BackendConfig | None = None

    def __post_init__(self):
        if self.mip_gap < 0:
            raise ValueError("mip_gap must be >= 0")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be > 0")


@dataclass
class Solution:
    status: str
    objective: float | None = None
    gap: float | None = None
    values: dict[str, float] = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    diagnostics: str = ""

    @property
    def feasible(self) -> bool:
        return self.status in (STATUS_OPTIMAL, STATUS_GAPPED) or (
            self.status == STATUS_TIME_LIMIT and bool(self.values))


def write_values_file(path: str | Path, values: Mapping[str, float],
                      meta: Mapping[str, object] | None = None) -> None:
    lines = []
    for key, val in (meta or {}).items():
        lines.append(f"# {key} {val}")
    for name in values:
        lines.append(f"{name} {repr(float(values[name]))}")
    Path(path).write_text("\n".join(lines) + "\n")


def parse_plain_solution(text: str) -> tuple[dict[str, str], dict[str, float]]:
    meta: dict[str, str] = {}
    values: dict[str, float] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split(None, 1)
            if len(parts) == 2:
                meta[parts[0]] = parts[1].strip()
            continue
        name, _, value = line.partition(" ")
        if not value:
            raise ValueError(f"malformed solution line {line!r}")
        values[name] = float(value)
    return meta, values


SOLUTION_PARSERS: dict[str, Callable[[str], tuple[dict[str, str], dict[str, float]]]] = {
    "plain": parse_plain_solution,
}


def _expand_args(template: tuple[str, ...], mapping: Mapping[str, str],
                 warm_start_path: str | None) -> list[str]:
    args: list[str] = []
    for token in template:
        if token == "{warm_start_args}":
            if warm_start_path is not None:
                args.extend(["--warm-start", warm_start_path])
            continue
        args.append(token.format(**mapping))
    return args


def verify_solution(model: MilpModel, values: Mapping[str, float],
                    row_tol: float = ROW_FEAS_TOL) -> tuple[dict[str, float], list[str]]:
    """Round near-integral binaries and collect feasibility violations."""
    cleaned = dict(values)
    for var in model.variables:
        if var.name not in cleaned:
            cleaned[var.name] = 0.0
        if var.is_integer:
            x = cleaned[var.name]
            if abs(x - round(x)) <= INT_FEAS_TOL:
                cleaned[var.name] = float(round(x))
    problems = model.check_solution(cleaned, row_tol=row_tol,
                                    bound_tol=BOUND_FEAS_TOL, int_tol=INT_FEAS_TOL)
    return cleaned, problems


def solve(model: MilpModel, options: SolveOptions | None = None,
          model_file: str | Path | None = None,
          solution_file: str | Path | None = None) -> Solution:
    """Emit the model, invoke the backend executable, parse and verify."""
    options = options or SolveOptions()
    backend = options.backend or bundled_backend()
    parser = SOLUTION_PARSERS.get(backend.solution_format)
    if parser is None:
        return Solution(status=STATUS_ERROR,
                        diagnostics=f"unknown solution format {backend.solution_format!r}")

    with tempfile.TemporaryDirectory(prefix="gridharden-solve-") as tmp:
        tmpdir = Path(tmp)
        mps_path = Path(model_file) if model_file else tmpdir / "model.mps"
        sol_path = Path(solution_file) if solution_file else tmpdir / "model.sol"
        mps_path.write_text(emit_model_file(model))

        warm_path: str | None = None
        warm_size = 0
        if options.warm_start:
            usable = {k: v for k, v in options.warm_start.items()
                      if model.has_variable(k)}
            warm_size = len(usable)
            if usable:
                warm_file = tmpdir / "warm.sol"
                write_values_file(warm_file, usable)
                warm_path = str(warm_file)

        mapping = {
            "model": str(mps_path),
            "solution": str(sol_path),
            "mip_gap": repr(options.mip_gap),
            "time_limit": repr(options.time_limit),
        }
        args = _expand_args(backend.args_template, mapping, warm_path)
        warm_offered = any("{warm_start_args}" in t or "{warm_start}" in t
                           for t in backend.args_template)

        started = time.monotonic()
        try:
            proc = subprocess.run([backend.command, *args], capture_output=True,
                                  text=True, timeout=options.time_limit + 120.0)
        except (OSError, subprocess.TimeoutExpired) as exc:
            return Solution(status=STATUS_ERROR,
                            diagnostics=f"backend launch failed: {exc}")
        wall = time.monotonic() - started

        stats = {
            "backend": backend.name,
            "wall_time": wall,
            "warm_start_offered": bool(options.warm_start),
            "warm_start_values": warm_size,
            "warm_start_passed": warm_path is not None and warm_offered,
        }
        if proc.returncode != 0:
            return Solution(status=STATUS_ERROR, stats=stats,
                            diagnostics=f"backend exited {proc.returncode}:\n"
                                        f"{proc.stdout}\n{proc.stderr}")
        if not sol_path.exists():
            return Solution(status=STATUS_ERROR, stats=stats,
                            diagnostics=f"backend wrote no solution file:\n"
                                        f"{proc.stdout}\n{proc.stderr}")
        try:
            meta, raw_values = parser(sol_path.read_text())
        except ValueError as exc:
            return Solution(status=STATUS_ERROR, stats=stats,
                            diagnostics=f"solution parse failure: {exc}")

    status = meta.get("status", STATUS_OPTIMAL).lower()
    if "nodes" in meta:
        stats["node_count"] = int(float(meta["nodes"]))
    if meta.get("note"):
        stats["backend_note"] = meta["note"]
    gap = float(meta["gap"]) if "gap" in meta else None

    if status == STATUS_INFEASIBLE:
        return Solution(status=STATUS_INFEASIBLE, stats=stats)
    if status == STATUS_ERROR:
        return Solution(status=STATUS_ERROR, stats=stats,
                        diagnostics=meta.get("message", "backend reported an error"))
    if status == STATUS_TIME_LIMIT and not raw_values:
        return Solution(status=STATUS_TIME_LIMIT, gap=gap, stats=stats)
    if status not in (STATUS_OPTIMAL, STATUS_GAPPED, STATUS_TIME_LIMIT):
        return Solution(status=STATUS_ERROR, stats=stats,
                        diagnostics=f"backend reported unknown status {status!r}")

    values, problems = verify_solution(model, raw_values)
    if problems:
        return Solution(status=STATUS_ERROR, stats=stats,
                        diagnostics="returned solution failed verification:\n"
                                    + "\n".join(problems[:20]))
    objective = model.objective_value(values)
    if gap is None:
        gap = 0.0
    if status == STATUS_OPTIMAL and gap > 1e-9:
        status = STATUS_GAPPED
    return Solution(status=status, objective=objective, gap=gap,
                    values=values, stats=stats)
