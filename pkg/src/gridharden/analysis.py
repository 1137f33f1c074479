"""Post-solve analysis: equity re-optimization, group metrics, reports.

Equity-objective solutions can strand avoidable shed at buses that do not
matter to the worst-off group, so they are re-solved with the binary
decisions pinned and a total-shed objective. Group metrics attribute
demand and shed through per-bus group fractions; undergrounding spend and
season risk reduction are attributed half to each terminal bus.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import builder
from .backends import (STATUS_OPTIMAL, Solution, SolveOptions, solve)
from .demographics import BusDemographics
from .model import MilpModel
from .network import Network
from .risk import RiskProfile
from .scenarios import ScenarioSpec

OVERALL = "overall"
SHED_ALERT_PERCENT = 1.0  # highlight groups shedding more than 1% of demand


def recompute_alpha(model: MilpModel, values: Mapping[str, float]) -> float | None:
    """Max group shed fraction implied by the group-ratio rows."""
    ratios = []
    for row in model.rows_tagged("group_shed_ratio"):
        denom = -row.coeffs.get(builder.ALPHA, 0.0)
        if denom <= 0:
            continue
        shed = sum(c * values[v] for v, c in row.coeffs.items() if v != builder.ALPHA)
        ratios.append(shed / denom)
    return max(ratios) if ratios else None


def postprocess_equity(model: MilpModel, solution: Solution,
                       options: SolveOptions | None = None) -> Solution:
    """Pin the solved binaries, minimize total shed over the continuous
    variables, and report the implied max group fraction alongside."""
    if not solution.feasible:
        raise ValueError(f"cannot post-process a {solution.status} solution")
    total = model.metadata.get("total_demand")
    if not total:
        raise ValueError("model metadata lacks total_demand")

    fixed = {v.name: solution.values[v.name] for v in model.binaries}
    restricted = model.fixed(fixed)
    restricted.set_objective({v.name: 1.0 / total for v in model.variables
                              if v.name.startswith("ps_")})
    options = options or SolveOptions()
    redo = solve(restricted, SolveOptions(mip_gap=0.0, time_limit=options.time_limit,
                                          backend=options.backend))
    if redo.status != STATUS_OPTIMAL:
        raise RuntimeError(
            f"continuous re-solve unexpectedly {redo.status}: {redo.diagnostics}")
    for name, val in fixed.items():
        if abs(redo.values[name] - val) > 1e-9:
            raise RuntimeError(f"post-processing moved binary {name}")
        redo.values[name] = val  # keep bit-identical binaries
    alpha = recompute_alpha(model, redo.values)
    redo.stats["alpha_post"] = alpha
    if alpha is not None:
        redo.values[builder.ALPHA] = alpha
    redo.stats["postprocessed"] = True
    return redo


def unfairness_ratio(group_percent: float | None,
                     overall_percent: float | None) -> float | None:
    """Group percent shed relative to the overall percent shed."""
    if group_percent is None or not overall_percent:
        return None
    return group_percent / overall_percent


@dataclass(frozen=True)
class GroupRow:
    group: str
    population: float
    demand: float  # p.u.
    shed: float  # p.u.
    percent_shed: float | None
    unfairness: float | None
    exceeds_threshold: bool
    budget_allocated: float  # M$
    per_capita_budget: float | None  # $/person
    risk_reduction: float
    per_capita_risk_reduction: float | None


@dataclass(frozen=True)
class GroupMetrics:
    scenario_id: str
    budget: float
    rows: tuple[GroupRow, ...]
    excluded_groups: tuple[str, ...] = ()

    def row(self, group: str) -> GroupRow:
        for r in self.rows:
            if r.group == group:
                return r
        raise KeyError(group)

    @property
    def overall(self) -> GroupRow:
        return self.row(OVERALL)


def _line_exposure(values: Mapping[str, float], line_id: str, day: int) -> float:
    z = values.get(builder.zvar(line_id, day), 1.0)  # non-switchable lines stay on
    y = values.get(builder.yvar(line_id), 0.0)
    return z - y


def _risk_reductions(net: Network, risk: RiskProfile,
                     values: Mapping[str, float],
                     baseline_values: Mapping[str, float] | None) -> dict[str, float]:
    """Per-line season risk removed relative to the reference operation."""
    out = {}
    for line in net.lines:
        total = 0.0
        for d in net.horizon.days:
            r = risk.line_day[(line.id, d)]
            if r == 0.0:
                continue
            now = _line_exposure(values, line.id, d)
            if baseline_values is None:
                ref = 1.0  # all-energized, nothing undergrounded
            else:
                ref = _line_exposure(baseline_values, line.id, d)
            total += r * (ref - now)
        out[line.id] = total
    return out


def compute_group_metrics(net: Network, demo: BusDemographics, risk: RiskProfile,
                          solution: Solution, spec: ScenarioSpec,
                          baseline_solution: Solution | None = None,
                          groups: Sequence[str] | None = None) -> GroupMetrics:
    """Demand/shed/unfairness plus budget and risk attribution per group."""
    if not solution.feasible:
        raise ValueError(f"cannot compute metrics for a {solution.status} solution")
    values = solution.values
    group_list = list(groups) if groups is not None else list(demo.groups)

    total_demand = net.total_demand
    total_shed = builder.total_shed(net, values)
    overall_pct = 100.0 * total_shed / total_demand if total_demand > 0 else None

    spend_by_line = {}
    for line in net.lines:
        y = values.get(builder.yvar(line.id), 0.0)
        if y > 0.5:
            spend_by_line[line.id] = line.cost
    reductions = _risk_reductions(
        net, risk, values, baseline_solution.values if baseline_solution else None)

    def attributed(weights_by_bus: Mapping[str, float], by_line: Mapping[str, float]) -> float:
        total = 0.0
        for lid, amount in by_line.items():
            line = net.line_by_id[lid]
            total += (amount / 2.0) * (weights_by_bus.get(line.to_bus, 0.0)
                                       + weights_by_bus.get(line.from_bus, 0.0))
        return total

    rows: list[GroupRow] = []
    excluded: list[str] = []

    def build_row(label: str, gamma: Mapping[str, float]) -> GroupRow:
        demand = sum(gamma.get(b.id, 0.0) * b.total_demand for b in net.buses)
        shed = builder.weighted_shed(net, values, gamma)
        population = sum(gamma.get(b.id, 0.0) * demo.population.get(b.id, 0.0)
                         for b in net.buses)
        pct = 100.0 * shed / demand if demand > 0 else None
        if label == OVERALL:
            unfair = 1.0 if pct is not None else None
        else:
            unfair = unfairness_ratio(pct, overall_pct)
        budget_alloc = attributed(gamma, spend_by_line)
        risk_red = attributed(gamma, reductions)
        return GroupRow(
            group=label,
            population=population,
            demand=demand,
            shed=shed,
            percent_shed=pct,
            unfairness=unfair,
            exceeds_threshold=(pct is not None and pct > SHED_ALERT_PERCENT),
            budget_allocated=budget_alloc,
            per_capita_budget=(budget_alloc * 1e6 / population if population > 0 else None),
            risk_reduction=risk_red,
            per_capita_risk_reduction=(risk_red / population if population > 0 else None),
        )

    rows.append(build_row(OVERALL, {b.id: 1.0 for b in net.buses}))
    for m in group_list:
        gamma = {b.id: demo.gamma_grp(b.id, m) for b in net.buses}
        row = build_row(m, gamma)
        if row.demand <= 0:
            excluded.append(m)
        rows.append(row)
    return GroupMetrics(scenario_id=spec.model_id, budget=spec.budget,
                        rows=tuple(rows), excluded_groups=tuple(excluded))


# ---------------------------------------------------------------------------
# Report files


@dataclass(frozen=True)
class ScenarioReport:
    scenario_id: str
    budget: float
    status: str
    objective: float | None = None
    gap: float | None = None
    metrics: GroupMetrics | None = None
    stats: Mapping[str, object] = field(default_factory=dict)
    diagnostics: str = ""


CSV_COLUMNS = [
    "scenario", "budget_musd", "group", "population", "demand_pu", "shed_pu",
    "percent_shed", "unfairness", "exceeds_1pct", "budget_allocated_musd",
    "per_capita_budget_usd", "risk_reduction", "per_capita_risk_reduction",
]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_report(reports: Sequence[ScenarioReport], out_dir: str | Path,
                 curves: bool = False) -> dict[str, Path]:
    """Write report.csv and report.json (and optional curves/) under out_dir."""
    if not reports:
        raise ValueError("no scenario reports to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    csv_path = out / "report.csv"
    try:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for rep in reports:
                if rep.metrics is None:
                    continue
                for row in rep.metrics.rows:
                    writer.writerow([
                        rep.scenario_id, _fmt(rep.budget), row.group,
                        _fmt(row.population), _fmt(row.demand), _fmt(row.shed),
                        _fmt(row.percent_shed), _fmt(row.unfairness),
                        _fmt(row.exceeds_threshold), _fmt(row.budget_allocated),
                        _fmt(row.per_capita_budget), _fmt(row.risk_reduction),
                        _fmt(row.per_capita_risk_reduction),
                    ])
    except OSError as exc:
        raise OSError(f"cannot write {csv_path}: {exc}") from exc
    paths["csv"] = csv_path

    doc = {}
    for rep in reports:
        doc[f"{rep.scenario_id}@{_fmt(rep.budget)}"] = {
            "scenario": rep.scenario_id,
            "budget_musd": rep.budget,
            "status": rep.status,
            "objective": rep.objective,
            "gap": rep.gap,
            "diagnostics": rep.diagnostics,
            "stats": dict(rep.stats),
            "groups": None if rep.metrics is None else [
                {
                    "group": row.group,
                    "population": row.population,
                    "demand_pu": row.demand,
                    "shed_pu": row.shed,
                    "percent_shed": row.percent_shed,
                    "unfairness": row.unfairness,
                    "exceeds_1pct": row.exceeds_threshold,
                    "budget_allocated_musd": row.budget_allocated,
                    "per_capita_budget_usd": row.per_capita_budget,
                    "risk_reduction": row.risk_reduction,
                    "per_capita_risk_reduction": row.per_capita_risk_reduction,
                }
                for row in rep.metrics.rows
            ],
            "excluded_groups": (list(rep.metrics.excluded_groups)
                                if rep.metrics else []),
        }
    json_path = out / "report.json"
    try:
        json_path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {json_path}: {exc}") from exc
    paths["json"] = json_path

    if curves:
        curve_dir = out / "curves"
        curve_dir.mkdir(exist_ok=True)
        groups = sorted({row.group for rep in reports if rep.metrics
                         for row in rep.metrics.rows})
        for group in groups:
            slug = "".join(ch if (ch.isalnum() or ch in "-_.") else "-" for ch in group)
            path = curve_dir / f"{slug}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["budget_musd", "scenario", "percent_shed",
                                 "per_capita_budget_usd", "per_capita_risk_reduction"])
                for rep in sorted(reports, key=lambda r: (r.budget, r.scenario_id)):
                    if rep.metrics is None:
                        continue
                    try:
                        row = rep.metrics.row(group)
                    except KeyError:
                        continue
                    writer.writerow([_fmt(rep.budget), rep.scenario_id,
                                     _fmt(row.percent_shed), _fmt(row.per_capita_budget),
                                     _fmt(row.per_capita_risk_reduction)])
            paths[f"curve:{group}"] = path
    return paths
