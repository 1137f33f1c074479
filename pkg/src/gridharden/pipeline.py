"""Configuration-driven pipeline: ingest, risk, demographics, solve, report.

Stages exchange file artifacts under the output directory so they can run
independently; each cached stage records a hash of its inputs and is
skipped when nothing changed. Scenario solves proceed budget by budget in
ascending order, warm-starting each model from its own solution at the
previous budget; scenarios within one budget may run concurrently. The
no-budget reference model runs first whenever any requested model
constrains load-shed reduction, because those rows need its solution.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from filelock import FileLock

from . import builder
from .analysis import (GroupMetrics, ScenarioReport, compute_group_metrics,
                       postprocess_equity, write_report)
from .backends import (STATUS_ERROR, STATUS_OPTIMAL, BackendConfig, Solution,
                       SolveOptions, bundled_backend, solve)
from .demographics import (BusDemographics, assign_tracts, flag_vulnerability,
                           load_rules, load_tracts)
from .model import BaselineReference
from .mps import emit_model_file
from .network import Network, Violation, has_errors, load_network, validate_network
from .oracle import DEFAULT_BINARY_CAP, OracleCapError, oracle_solve
from .risk import (RiskProfile, RiskThresholds, build_risk_profile,
                   load_pixel_grid, load_profile, psps_days, save_profile)
from .scenarios import MODEL_IDS, POLICY_LOADSHED, ScenarioSpec, make_spec

BACKEND_ENV_VAR = "GRIDHARDEN_BACKEND"
MONOTONICITY_TOL = 1e-6


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    network: Path
    raster: Path | None = None
    raster_meta: Path | None = None
    risk_profile: Path | None = None
    tracts: Path | None = None
    rules: Path | None = None
    thresholds: RiskThresholds = field(default_factory=RiskThresholds)
    budgets: tuple[float, ...] = (0.0,)
    models: tuple[str, ...] = MODEL_IDS
    groups: tuple[str, ...] | None = None
    indices: tuple[str, ...] = ()
    inverse_distance: bool = False
    mip_gap: float = 0.01
    time_limit: float = 300.0
    backend: BackendConfig | None = None
    oracle: bool = False
    oracle_cap: int = DEFAULT_BINARY_CAP
    curves: bool = False
    raw: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError as exc:
                raise ConfigError(
                    "TOML configs need Python 3.11+; use JSON instead") from exc
            doc = tomllib.loads(text)
        else:
            doc = json.loads(text)
        return cls.from_dict(doc, base_dir=path.parent)

    @classmethod
    def from_dict(cls, doc: Mapping, base_dir: Path | None = None) -> "RunConfig":
        base = base_dir or Path(".")
        inputs = doc.get("inputs", {})
        if "network" not in inputs:
            raise ConfigError("config inputs must name a network file")

        def respath(key):
            return (base / inputs[key]).resolve() if inputs.get(key) else None

        th = doc.get("thresholds", {})
        thresholds = RiskThresholds(
            r_psps=float(th.get("r_psps", RiskThresholds().r_psps)),
            r_high=float(th.get("r_high", RiskThresholds().r_high)),
            r_low=float(th.get("r_low", RiskThresholds().r_low)),
        )
        budgets = tuple(float(b) for b in doc.get("budgets", [0.0]))
        if any(b < 0 for b in budgets):
            raise ConfigError("budgets must be >= 0")
        models = tuple(doc.get("models", MODEL_IDS))
        for mid in models:
            if mid not in MODEL_IDS:
                raise ConfigError(f"unknown model id {mid!r}")
        solver = doc.get("solver", {})
        backend = None
        if isinstance(solver.get("backend"), str):
            backend = BackendConfig.load(base / solver["backend"])
        elif isinstance(solver.get("backend"), Mapping):
            backend = BackendConfig.from_json(solver["backend"])
        groups = doc.get("groups")
        return cls(
            network=respath("network"),
            raster=respath("raster"),
            raster_meta=respath("raster_meta"),
            risk_profile=respath("risk_profile"),
            tracts=respath("tracts"),
            rules=respath("rules"),
            thresholds=thresholds,
            budgets=budgets,
            models=models,
            groups=tuple(groups) if groups else None,
            indices=tuple(doc.get("indices", ())),
            inverse_distance=bool(doc.get("inverse_distance", False)),
            mip_gap=float(solver.get("mip_gap", 0.01)),
            time_limit=float(solver.get("time_limit", 300.0)),
            backend=backend,
            oracle=bool(solver.get("oracle", False)),
            oracle_cap=int(solver.get("oracle_cap", DEFAULT_BINARY_CAP)),
            curves=bool(doc.get("curves", False)),
            raw=dict(doc),
        )

    def required_indices(self) -> tuple[str, ...]:
        """Vulnerability indices needed by the requested models."""
        from .scenarios import CATALOG
        needed = {CATALOG[m][2] for m in self.models if CATALOG[m][2]}
        needed.update(self.indices)
        return tuple(sorted(needed))


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class ScenarioOutcome:
    model_id: str
    budget: float
    status: str
    objective: float | None = None
    gap: float | None = None
    alpha_post: float | None = None
    mps_sha256: str | None = None
    warm_start_from: str | None = None
    solved_by: str = "backend"
    stats: dict = field(default_factory=dict)
    diagnostics: str = ""
    solution: Solution | None = None

    def record(self) -> dict:
        return {
            "model_id": self.model_id,
            "budget": self.budget,
            "status": self.status,
            "objective": self.objective,
            "gap": self.gap,
            "alpha_post": self.alpha_post,
            "mps_sha256": self.mps_sha256,
            "warm_start_from": self.warm_start_from,
            "solved_by": self.solved_by,
            "diagnostics": self.diagnostics,
            "stats": {k: v for k, v in self.stats.items()
                      if isinstance(v, (int, float, str, bool, type(None)))},
        }


class Pipeline:
    def __init__(self, config: RunConfig, out_dir: str | Path, jobs: int = 1,
                 force_oracle: bool = False, emit_only: bool = False,
                 backend_override: BackendConfig | None = None):
        self.config = config
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.jobs = max(1, jobs)
        self.force_oracle = force_oracle or config.oracle
        self.emit_only = emit_only
        self.backend = backend_override or config.backend or bundled_backend()
        self.lock = FileLock(str(self.out / ".lock"))
        self._net: Network | None = None

    # -- shared artifacts -----------------------------------------------------

    @property
    def net(self) -> Network:
        if self._net is None:
            self._net = load_network(self.config.network)
        return self._net

    def _stamp_path(self, stage: str) -> Path:
        d = self.out / "stamps"
        d.mkdir(exist_ok=True)
        return d / f"{stage}.json"

    def _is_fresh(self, stage: str, input_hash: str, outputs: Sequence[Path]) -> bool:
        stamp = self._stamp_path(stage)
        if not stamp.exists() or not all(p.exists() for p in outputs):
            return False
        try:
            return json.loads(stamp.read_text()).get("hash") == input_hash
        except (OSError, json.JSONDecodeError):
            return False

    def _write_stamp(self, stage: str, input_hash: str) -> None:
        self._stamp_path(stage).write_text(json.dumps({"hash": input_hash}))

    # -- stages ----------------------------------------------------------------

    def stage_validate(self) -> list[Violation]:
        violations = validate_network(self.net)
        doc = [{"entity": v.entity, "rule": v.rule, "severity": v.severity}
               for v in violations]
        (self.out / "validation.json").write_text(json.dumps(doc, indent=1) + "\n")
        return violations

    def stage_risk(self) -> RiskProfile:
        with self.lock:  # reentrant: safe under run()'s outer hold
            return self._stage_risk_locked()

    def _stage_risk_locked(self) -> RiskProfile:
        cfg = self.config
        out_path = self.out / "risk_profile.json"
        if cfg.risk_profile:
            return load_profile(cfg.risk_profile)
        if not (cfg.raster and cfg.raster_meta):
            raise ConfigError("config needs either risk_profile or raster+raster_meta")
        th = cfg.thresholds
        input_hash = _sha256_text(
            _sha256_file(cfg.raster) + _sha256_file(cfg.raster_meta)
            + _sha256_file(cfg.network) + f"{th.r_psps}:{th.r_high}:{th.r_low}"
            + ",".join(map(str, self.net.horizon.days)))
        if self._is_fresh("risk", input_hash, [out_path]):
            return load_profile(out_path)
        grid = load_pixel_grid(cfg.raster, cfg.raster_meta)
        days = self.net.horizon.days
        missing = [d for d in days if d not in grid.values]
        if missing:
            raise ConfigError(f"raster lacks horizon days {missing}")
        paths = {l.id: self.net.line_path(l.id) for l in self.net.lines}
        profile = build_risk_profile(paths, grid, thresholds=th, days=days)
        save_profile(profile, out_path)
        self._write_stamp("risk", input_hash)
        return profile

    def stage_assign(self) -> BusDemographics:
        with self.lock:
            return self._stage_assign_locked()

    def _stage_assign_locked(self) -> BusDemographics:
        cfg = self.config
        demo_path = self.out / "demographics.json"
        assign_path = self.out / "assignment.json"
        if not cfg.tracts:
            return BusDemographics.from_network(self.net)

        pieces = [_sha256_file(cfg.tracts), _sha256_file(cfg.network),
                  str(cfg.inverse_distance), ",".join(cfg.required_indices()),
                  ",".join(cfg.groups or ())]
        if cfg.rules:
            pieces.append(_sha256_file(cfg.rules))
        input_hash = _sha256_text("|".join(pieces))
        if self._is_fresh("assign", input_hash, [demo_path, assign_path]):
            return BusDemographics.from_json(json.loads(demo_path.read_text()))

        tracts = load_tracts(cfg.tracts)
        if cfg.rules:
            for rule in load_rules(cfg.rules):
                tracts = flag_vulnerability(tracts, rule)
        load_buses = {b.id: b.location for b in self.net.load_buses()}
        if not load_buses:
            raise ConfigError("network has no load buses to assign tracts to")
        assignment = assign_tracts(tracts, load_buses,
                                   inverse_distance=cfg.inverse_distance)
        groups = cfg.groups
        if groups is None:
            seen: dict[str, None] = {}
            for t in tracts:
                for key in t.features:
                    if key != "population":
                        seen.setdefault(key)
            groups = tuple(seen)
        demo, zero_pop = BusDemographics.from_tracts(
            tracts, assignment, groups, cfg.required_indices())
        assign_doc = {
            "tract_radius": dict(assignment.tract_radius),
            "weights": {f"{t}::{b}": w for (t, b), w in sorted(assignment.weights.items())},
            "unassigned_tracts": list(assignment.unassigned_tracts),
            "zero_population_buses": zero_pop,
        }
        assign_path.write_text(json.dumps(assign_doc, indent=1, sort_keys=True) + "\n")
        demo_path.write_text(json.dumps(demo.to_json(), indent=1, sort_keys=True) + "\n")
        self._write_stamp("assign", input_hash)
        return demo

    def _model_file(self, spec: ScenarioSpec) -> Path:
        d = self.out / "models"
        d.mkdir(exist_ok=True)
        return d / f"{spec.model_id}_B{spec.budget:g}.mps"

    def build_model(self, spec: ScenarioSpec, risk: RiskProfile,
                    demo: BusDemographics,
                    baseline: BaselineReference | None):
        model = builder.build_scenario(self.net, risk, demo, spec,
                                       baseline=baseline,
                                       groups=self.config.groups)
        return model

    def stage_build(self, risk: RiskProfile, demo: BusDemographics,
                    baseline: BaselineReference | None = None,
                    tags: bool = True) -> list[Path]:
        """Emit every requested (model, budget) as an MPS file; models whose
        preconditions fail (e.g. a shed-free reference run) are skipped and
        recorded in `self.build_skipped`."""
        written = []
        self.build_skipped: dict[str, str] = {}
        seen: set[Path] = set()
        for budget in sorted(self.config.budgets):
            for model_id in self.config.models:
                spec = self._spec(model_id, budget)
                if spec.needs_baseline and baseline is None:
                    self.build_skipped[f"{model_id}@{budget:g}"] = \
                        "needs the solved no-budget reference"
                    continue
                if self._model_file(spec) in seen:
                    continue  # BL-M0 pins budget 0 at every requested budget
                seen.add(self._model_file(spec))
                try:
                    model = self.build_model(spec, risk, demo, baseline)
                except (builder.BuildError, ValueError) as exc:
                    self.build_skipped[f"{model_id}@{budget:g}"] = str(exc)
                    continue
                path = self._model_file(spec)
                path.write_text(emit_model_file(model))
                if tags:
                    sidecar = path.with_suffix(".tags.json")
                    sidecar.write_text(json.dumps(
                        {row.name: row.tag for row in model.rows},
                        indent=1, sort_keys=True) + "\n")
                written.append(path)
        return written

    def _spec(self, model_id: str, budget: float,
              warm: Mapping[str, float] | None = None) -> ScenarioSpec:
        return make_spec(model_id, budget, mip_gap=self.config.mip_gap,
                         time_limit=self.config.time_limit,
                         warm_start=dict(warm) if warm else None)

    def _needs_reference(self) -> bool:
        from .scenarios import CATALOG
        return any(CATALOG[m][1] == POLICY_LOADSHED for m in self.config.models)

    def _solve_one(self, spec: ScenarioSpec, risk: RiskProfile,
                   demo: BusDemographics,
                   baseline: BaselineReference | None,
                   warm_from: str | None) -> ScenarioOutcome:
        outcome = ScenarioOutcome(model_id=spec.model_id, budget=spec.budget,
                                  status=STATUS_ERROR, warm_start_from=warm_from)
        try:
            model = self.build_model(spec, risk, demo, baseline)
        except (builder.BuildError, ValueError) as exc:
            outcome.diagnostics = f"build failed: {exc}"
            return outcome
        mps_path = self._model_file(spec)
        text = emit_model_file(model)
        mps_path.write_text(text)
        outcome.mps_sha256 = _sha256_text(text)

        options = SolveOptions(mip_gap=spec.mip_gap, time_limit=spec.time_limit,
                               warm_start=spec.warm_start, backend=self.backend)
        solution: Solution
        if self.force_oracle:
            try:
                solution = oracle_solve(model, cap=self.config.oracle_cap,
                                        backend=self.backend)
                outcome.solved_by = "oracle"
            except OracleCapError as exc:
                outcome.stats["oracle_skipped"] = str(exc)
                solution = solve(model, options)
        else:
            solution = solve(model, options)

        outcome.status = solution.status
        outcome.objective = solution.objective
        outcome.gap = solution.gap
        outcome.stats.update(solution.stats)
        outcome.diagnostics = solution.diagnostics
        if solution.feasible and spec.is_equity:
            try:
                post = postprocess_equity(model, solution, options)
            except RuntimeError as exc:
                outcome.status = STATUS_ERROR
                outcome.diagnostics = f"equity post-processing failed: {exc}"
                return outcome
            outcome.alpha_post = post.stats.get("alpha_post")
            outcome.stats["post_shed_fraction"] = post.objective
            outcome.solution = post
        else:
            outcome.solution = solution
        return outcome

    def stage_solve(self, risk: RiskProfile, demo: BusDemographics) -> list[ScenarioOutcome]:
        cfg = self.config
        budgets = sorted(cfg.budgets)
        models = list(cfg.models)
        needs_reference = self._needs_reference()

        outcomes: list[ScenarioOutcome] = []
        baseline_ref: BaselineReference | None = None
        baseline_solution: Solution | None = None

        run_bl_m0 = "BL-M0" in models or needs_reference
        if run_bl_m0:
            spec = self._spec("BL-M0", 0.0)
            outcome = self._solve_one(spec, risk, demo, None, None)
            outcomes.append(outcome)
            if outcome.solution is not None and outcome.solution.feasible:
                baseline_solution = outcome.solution
                baseline_ref = builder.baseline_reference(
                    self.net, demo, outcome.solution.values, cfg.required_indices())

        last_values: dict[str, dict[str, float]] = {}
        if baseline_solution is not None:
            last_values["BL-M0"] = baseline_solution.values
        for budget in budgets:
            todo = [m for m in models
                    if not (m == "BL-M0" and run_bl_m0)]  # reference already ran
            specs = []
            for model_id in todo:
                warm = last_values.get(model_id)
                warm_from = f"{model_id}@previous-budget" if warm else None
                specs.append((self._spec(model_id, budget, warm), warm_from))

            def job(item):
                spec, warm_from = item
                return self._solve_one(spec, risk, demo, baseline_ref, warm_from)

            if self.jobs > 1 and len(specs) > 1:
                with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                    results = list(pool.map(job, specs))
            else:
                results = [job(item) for item in specs]
            for outcome in results:
                outcomes.append(outcome)
                if outcome.solution is not None and outcome.solution.feasible:
                    last_values[outcome.model_id] = outcome.solution.values
        return outcomes

    def write_solutions(self, outcomes: Sequence[ScenarioOutcome]) -> list[Path]:
        sol_dir = self.out / "solutions"
        sol_dir.mkdir(exist_ok=True)
        paths = []
        for o in outcomes:
            doc = o.record()
            if o.solution is not None:
                doc["values"] = o.solution.values
            path = sol_dir / f"{o.model_id}_B{o.budget:g}.json"
            path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
            paths.append(path)
        return paths

    def load_outcomes(self) -> list[ScenarioOutcome]:
        """Reconstruct solved scenarios from the solutions/ artifacts."""
        sol_dir = self.out / "solutions"
        if not sol_dir.is_dir():
            raise ConfigError(f"no solutions directory under {self.out}; run solve first")
        outcomes = []
        for path in sorted(sol_dir.glob("*.json")):
            doc = json.loads(path.read_text())
            solution = None
            if doc.get("values"):
                solution = Solution(status=doc["status"], objective=doc.get("objective"),
                                    gap=doc.get("gap"), values=doc["values"],
                                    stats=doc.get("stats", {}))
            outcomes.append(ScenarioOutcome(
                model_id=doc["model_id"], budget=float(doc["budget"]),
                status=doc["status"], objective=doc.get("objective"),
                gap=doc.get("gap"), alpha_post=doc.get("alpha_post"),
                mps_sha256=doc.get("mps_sha256"),
                warm_start_from=doc.get("warm_start_from"),
                solved_by=doc.get("solved_by", "backend"),
                stats=doc.get("stats", {}), diagnostics=doc.get("diagnostics", ""),
                solution=solution))
        return outcomes

    def stage_report(self, risk: RiskProfile, demo: BusDemographics,
                     outcomes: Sequence[ScenarioOutcome]) -> dict[str, Path]:
        baseline_solution = next(
            (o.solution for o in outcomes
             if o.model_id == "BL-M0" and o.solution is not None
             and o.solution.feasible), None)
        reports = []
        for o in outcomes:
            metrics: GroupMetrics | None = None
            if o.solution is not None and o.solution.feasible:
                spec = self._spec(o.model_id, o.budget)
                metrics = compute_group_metrics(
                    self.net, demo, risk, o.solution, spec,
                    baseline_solution=baseline_solution,
                    groups=self.config.groups)
            reports.append(ScenarioReport(
                scenario_id=o.model_id, budget=o.budget, status=o.status,
                objective=o.objective, gap=o.gap, metrics=metrics,
                stats=o.record()["stats"], diagnostics=o.diagnostics))
        return write_report(reports, self.out, curves=self.config.curves)

    def _check_monotonicity(self, outcomes: Sequence[ScenarioOutcome]) -> dict:
        """Optimal objectives must not increase with budget (per model)."""
        report: dict[str, str] = {}
        by_model: dict[str, list[ScenarioOutcome]] = {}
        for o in outcomes:
            if o.model_id != "BL-M0":
                by_model.setdefault(o.model_id, []).append(o)
        for model_id, runs in by_model.items():
            runs = sorted(runs, key=lambda o: o.budget)
            if any(o.status not in (STATUS_OPTIMAL,) for o in runs):
                report[model_id] = "skipped: not all solves proven optimal"
                continue
            ok = all(b.objective <= a.objective + MONOTONICITY_TOL
                     for a, b in zip(runs, runs[1:]))
            report[model_id] = "ok" if ok else "violated"
        return report

    def run(self) -> tuple[dict, int]:
        """Full pipeline; returns (manifest, exit_code)."""
        with self.lock:
            started = time.time()
            violations = self.stage_validate()
            manifest: dict = {
                "config_hash": _sha256_text(json.dumps(self.config.raw, sort_keys=True)),
                "backend": self.backend.name,
                "validation": [str(v) for v in violations],
                "scenarios": [],
            }
            if has_errors(violations):
                manifest["status"] = "invalid-network"
                self._write_manifest(manifest)
                return manifest, 2

            risk = self.stage_risk()
            manifest["psps_trigger_days"] = sorted(psps_days(risk))
            demo = self.stage_assign()

            if self.emit_only:
                baseline_ref = None
                if self._needs_reference():
                    # reduction-share rows need the solved no-budget reference
                    ref = self._solve_one(self._spec("BL-M0", 0.0), risk, demo,
                                          None, None)
                    manifest["scenarios"].append(ref.record())
                    if ref.solution is not None and ref.solution.feasible:
                        baseline_ref = builder.baseline_reference(
                            self.net, demo, ref.solution.values,
                            self.config.required_indices())
                written = self.stage_build(risk, demo, baseline=baseline_ref)
                manifest["status"] = "emitted"
                manifest["models_written"] = [str(p) for p in written]
                if self.build_skipped:
                    manifest["models_skipped"] = dict(self.build_skipped)
                self._write_manifest(manifest)
                return manifest, 0

            outcomes = self.stage_solve(risk, demo)
            manifest["scenarios"] = [o.record() for o in outcomes]
            manifest["monotonicity"] = self._check_monotonicity(outcomes)
            self.write_solutions(outcomes)
            self.stage_report(risk, demo, outcomes)

            errors = [o for o in outcomes if o.status == STATUS_ERROR]
            violated = [m for m, v in manifest["monotonicity"].items()
                        if v == "violated"]
            manifest["status"] = "error" if (errors or violated) else "complete"
            manifest["wall_time"] = time.time() - started
            self._write_manifest(manifest)
            return manifest, 1 if (errors or violated) else 0

    def _write_manifest(self, manifest: dict) -> None:
        (self.out / "manifest.json").write_text(
            json.dumps(manifest, indent=1, sort_keys=True) + "\n")
