"""Build the switching/undergrounding MILP for one scenario.

Variable blocks (deterministic lexicographic order within each block):
generation `pg_<gen>_<day>_<t>`, angles `th_<bus>_<day>_<t>`, shed
`ps_<bus>_<day>_<t>`, flows `f_<line>_<day>_<t>`, energization
`z_<line>_<day>` (only where the line is switchable that day),
undergrounding `y_<line>` (only for harden candidates), and `alpha` for
equity objectives. Generation and shed limits are encoded as variable
bounds; everything else is a tagged row.

Sign conventions: flow on an energized line satisfies
f = -b * (theta_from - theta_to), and the big-M relaxations scale the
window by |b| so they are valid for either susceptance sign.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Mapping, Sequence

from .demographics import BusDemographics
from .model import (SENSE_EQ, SENSE_GE, SENSE_LE, BaselineReference, MilpModel)
from .network import Network
from .risk import RiskProfile
from .scenarios import (OBJ_MAX_GROUP_SHED, OBJ_TOTAL_SHED, POLICY_BUDGET,
                        POLICY_LOADSHED, ScenarioSpec)

POLICY_BENEFIT_SHARE = 0.4  # share of benefit reserved for vulnerable tracts

ALPHA = "alpha"


class BuildError(ValueError):
    """Inputs cannot be translated into a well-formed model."""


def zvar(line_id: str, day: int) -> str:
    return f"z_{line_id}_{day}"


def yvar(line_id: str) -> str:
    return f"y_{line_id}"


def psvar(bus_id: str, day: int, t: int) -> str:
    return f"ps_{bus_id}_{day}_{t}"


def pgvar(gen_id: str, day: int, t: int) -> str:
    return f"pg_{gen_id}_{day}_{t}"


def thvar(bus_id: str, day: int, t: int) -> str:
    return f"th_{bus_id}_{day}_{t}"


def fvar(line_id: str, day: int, t: int) -> str:
    return f"f_{line_id}_{day}_{t}"


def _slug(text: str) -> str:
    return "".join(ch if (ch.isalnum() or ch in "-_.") else "-" for ch in text)


def _check_risk_coverage(net: Network, risk: RiskProfile) -> None:
    for line in net.lines:
        for day in net.horizon.days:
            if (line.id, day) not in risk.line_day:
                raise BuildError(f"no risk category for line {line.id} on day {day}")
            if day not in risk.high:
                raise BuildError(f"risk profile missing day {day}")


def build_dcots(net: Network, risk: RiskProfile, spec: ScenarioSpec) -> MilpModel:
    """DC transmission-switching core: flow physics, switching logic and
    power balance for every (day, period)."""
    _check_risk_coverage(net, risk)
    h = net.horizon
    model = MilpModel(name=spec.model_id, metadata={
        "scenario": spec.model_id,
        "budget": spec.budget,
        "objective": spec.objective,
        "policy_constraint": spec.policy_constraint,
        "vulnerability_index": spec.vulnerability_index,
        "total_demand": net.total_demand,
        "bound_encoded": {
            "gen_bounds": "pg variable bounds",
            "shed_bounds": "ps variable bounds",
            "flow_cap_fixed": "f variable bounds",
        },
    })

    bus_ids = sorted(b.id for b in net.buses)
    line_ids = sorted(l.id for l in net.lines)
    gen_ids = sorted(g.id for g in net.generators)
    days = h.days
    periods = range(h.periods_per_day)

    for gid in gen_ids:
        g = net.gen_by_id[gid]
        for d in days:
            for t in periods:
                model.add_variable(pgvar(gid, d, t), g.p_min, g.p_max)
    for bid in bus_ids:
        for d in days:
            for t in periods:
                model.add_variable(thvar(bid, d, t), -float("inf"), float("inf"))
    for bid in bus_ids:
        bus = net.bus_by_id[bid]
        for di, d in enumerate(days):
            for t in periods:
                model.add_variable(psvar(bid, d, t), 0.0, float(bus.demand[di, t]))
    for lid in line_ids:
        line = net.line_by_id[lid]
        for d in days:
            for t in periods:
                model.add_variable(fvar(lid, d, t), -line.flow_limit, line.flow_limit)
    for lid in line_ids:
        for d in days:
            if risk.switchable(lid, d):
                model.add_variable(zvar(lid, d), 0.0, 1.0, integer=True)

    m_lo, m_hi = spec.big_m_lower, spec.big_m_upper
    for di, d in enumerate(days):
        for t in periods:
            for lid in line_ids:
                line = net.line_by_id[lid]
                f = fvar(lid, d, t)
                th_fr = thvar(line.from_bus, d, t)
                th_to = thvar(line.to_bus, d, t)
                b = line.susceptance
                if risk.switchable(lid, d):
                    z = zvar(lid, d)
                    model.add_row(f"fcapz_hi_{lid}_{d}_{t}",
                                  {f: 1.0, z: -line.flow_limit},
                                  SENSE_LE, 0.0, "flow_cap_switch")
                    model.add_row(f"fcapz_lo_{lid}_{d}_{t}",
                                  {f: 1.0, z: line.flow_limit},
                                  SENSE_GE, 0.0, "flow_cap_switch")
                    model.add_row(f"angbm_lo_{lid}_{d}_{t}",
                                  _acc({th_fr: 1.0}, {th_to: -1.0},
                                       {z: -(line.angle_min - m_lo)}),
                                  SENSE_GE, m_lo, "angle_bigm")
                    model.add_row(f"angbm_hi_{lid}_{d}_{t}",
                                  _acc({th_fr: 1.0}, {th_to: -1.0},
                                       {z: -(line.angle_max - m_hi)}),
                                  SENSE_LE, m_hi, "angle_bigm")
                    model.add_row(f"dcbm_lo_{lid}_{d}_{t}",
                                  _acc({f: 1.0}, {th_fr: b}, {th_to: -b},
                                       {z: abs(b) * m_lo}),
                                  SENSE_GE, abs(b) * m_lo, "dc_flow_bigm")
                    model.add_row(f"dcbm_hi_{lid}_{d}_{t}",
                                  _acc({f: 1.0}, {th_fr: b}, {th_to: -b},
                                       {z: abs(b) * m_hi}),
                                  SENSE_LE, abs(b) * m_hi, "dc_flow_bigm")
                else:
                    model.add_row(f"ang_lo_{lid}_{d}_{t}",
                                  _acc({th_fr: 1.0}, {th_to: -1.0}),
                                  SENSE_GE, line.angle_min, "angle_window")
                    model.add_row(f"ang_hi_{lid}_{d}_{t}",
                                  _acc({th_fr: 1.0}, {th_to: -1.0}),
                                  SENSE_LE, line.angle_max, "angle_window")
                    model.add_row(f"dc_eq_{lid}_{d}_{t}",
                                  _acc({f: 1.0}, {th_fr: b}, {th_to: -b}),
                                  SENSE_EQ, 0.0, "dc_flow_exact")
            for bid in bus_ids:
                bus = net.bus_by_id[bid]
                coeffs: dict[str, float] = defaultdict(float)
                for lid in net.lines_from[bid]:
                    coeffs[fvar(lid, d, t)] += 1.0
                for lid in net.lines_to[bid]:
                    coeffs[fvar(lid, d, t)] -= 1.0
                for gid in net.gens_at[bid]:
                    coeffs[pgvar(gid, d, t)] -= 1.0
                coeffs[psvar(bid, d, t)] -= 1.0
                model.add_row(f"bal_{bid}_{d}_{t}", dict(coeffs),
                              SENSE_EQ, -float(bus.demand[di, t]), "power_balance")
    return model


def _acc(*parts: Mapping[str, float]) -> dict[str, float]:
    out: dict[str, float] = defaultdict(float)
    for part in parts:
        for k, v in part.items():
            out[k] += v
    return dict(out)


def add_hardening(model: MilpModel, net: Network, risk: RiskProfile) -> MilpModel:
    """Undergrounding variables plus the de-energize-or-underground linking:
    high-risk (line, day) pairs force z = y; medium-risk pairs force y <= z."""
    for lid in sorted(risk.harden):
        model.add_variable(yvar(lid), 0.0, 1.0, integer=True)
    for d in net.horizon.days:
        for lid in sorted(risk.high[d]):
            model.add_row(f"link_hi_{lid}_{d}",
                          {zvar(lid, d): 1.0, yvar(lid): -1.0},
                          SENSE_EQ, 0.0, "link_high_risk")
        for lid in sorted(risk.med[d]):
            model.add_row(f"link_med_{lid}_{d}",
                          {yvar(lid): 1.0, zvar(lid, d): -1.0},
                          SENSE_LE, 0.0, "link_med_risk")
    return model


def add_budget(model: MilpModel, net: Network, risk: RiskProfile,
               spec: ScenarioSpec) -> MilpModel:
    """Total undergrounding spend must stay within the budget."""
    coeffs = {}
    for lid in sorted(risk.harden):
        cost = net.line_by_id[lid].cost
        coeffs[yvar(lid)] = cost
        if spec.budget == 0.0 and cost > 0.0:
            model.set_bounds(yvar(lid), 0.0, 0.0)
    if coeffs:
        model.add_row("budget_cap", coeffs, SENSE_LE, spec.budget, "budget_cap")
    return model


def add_risk_cap(model: MilpModel, net: Network, risk: RiskProfile,
                 spec: ScenarioSpec) -> MilpModel:
    """Per-day cap on total risk from energized, above-ground lines.

    Always-energized lines contribute constants (moved to the rhs);
    undergrounded lines cancel their own risk.
    """
    for d in net.horizon.days:
        coeffs: dict[str, float] = defaultdict(float)
        rhs = risk.thresholds.r_psps
        for lid in sorted(l.id for l in net.lines):
            r = risk.line_day[(lid, d)]
            if r == 0.0:
                continue
            if risk.switchable(lid, d):
                coeffs[zvar(lid, d)] += r
            else:
                rhs -= r  # z fixed at 1
            if model.has_variable(yvar(lid)):
                coeffs[yvar(lid)] -= r
        model.add_row(f"risk_cap_{d}", dict(coeffs), SENSE_LE, rhs, "risk_cap")
    return model


def add_policy_budget(model: MilpModel, net: Network, demo: BusDemographics,
                      spec: ScenarioSpec) -> MilpModel:
    """Require >= 40% of the budget to be attributed to vulnerable
    populations; each line's spend splits evenly between its end buses."""
    index = spec.vulnerability_index
    if not index:
        raise BuildError("policy budget constraint requires a vulnerability index")
    coeffs = {}
    for name in sorted(model.index_of):
        if not name.startswith("y_"):
            continue
        lid = name[2:]
        line = net.line_by_id[lid]
        weight = (line.cost / 2.0) * (demo.gamma_vuln(line.to_bus, index)
                                      + demo.gamma_vuln(line.from_bus, index))
        if weight != 0.0:
            coeffs[name] = weight
    model.add_row("policy_budget_floor", coeffs, SENSE_GE,
                  POLICY_BENEFIT_SHARE * spec.budget, "policy_budget_floor")
    return model


def add_policy_loadshed(model: MilpModel, net: Network, demo: BusDemographics,
                        baseline: BaselineReference | None,
                        spec: ScenarioSpec) -> MilpModel:
    """Require >= 40% of the load-shed reduction (relative to the no-budget
    reference) to land on vulnerable populations.

    The fractional requirement is linearized by cross-multiplication, which
    is valid because a companion row keeps total shed at or below the
    reference value (extra budget can only relax the problem).
    """
    index = spec.vulnerability_index
    if not index:
        raise BuildError("policy load-shed constraint requires a vulnerability index")
    if baseline is None:
        raise BuildError("policy load-shed constraint requires the no-budget baseline")
    if baseline.total_shed <= 0.0:
        raise BuildError("no reduction to allocate: baseline total shed is zero")
    if index not in baseline.vuln_shed:
        raise BuildError(f"baseline reference has no vulnerable shed for index {index!r}")

    share = POLICY_BENEFIT_SHARE
    reduction_coeffs: dict[str, float] = {}
    cap_coeffs: dict[str, float] = {}
    h = net.horizon
    for bid in sorted(b.id for b in net.buses):
        gamma = demo.gamma_vuln(bid, index)
        for d in h.days:
            for t in range(h.periods_per_day):
                name = psvar(bid, d, t)
                c = share - gamma
                if c != 0.0:
                    reduction_coeffs[name] = c
                cap_coeffs[name] = 1.0
    rhs = share * baseline.total_shed - baseline.vuln_shed[index]
    model.add_row("policy_shed_share", reduction_coeffs, SENSE_GE, rhs,
                  "policy_shed_share")
    model.add_row("shed_cap_baseline", cap_coeffs, SENSE_LE,
                  baseline.total_shed, "shed_not_above_baseline")
    return model


def group_demand(net: Network, demo: BusDemographics, group: str) -> float:
    """Total demand attributed to a group across all buses and periods."""
    return sum(demo.gamma_grp(b.id, group) * b.total_demand for b in net.buses)


def add_equity(model: MilpModel, net: Network, demo: BusDemographics,
               groups: Sequence[str]) -> MilpModel:
    """Epigraph rows bounding each group's shed fraction by `alpha`.

    Groups with zero attributed demand are excluded (their ratio is
    undefined) and recorded in model metadata.
    """
    h = net.horizon
    included, excluded = [], []
    for m in groups:
        (included if group_demand(net, demo, m) > 0.0 else excluded).append(m)
    if not included:
        raise BuildError("all groups have zero attributed demand")
    model.add_variable(ALPHA, 0.0, 1.0)
    used_names: set[str] = set()
    for i, m in enumerate(included):
        p_l_m = group_demand(net, demo, m)
        coeffs: dict[str, float] = {ALPHA: -p_l_m}
        for bid in sorted(b.id for b in net.buses):
            gamma = demo.gamma_grp(bid, m)
            if gamma == 0.0:
                continue
            for d in h.days:
                for t in range(h.periods_per_day):
                    coeffs[psvar(bid, d, t)] = gamma
        name = f"grp_ratio_{_slug(m)}"
        if name in used_names:
            name = f"grp_ratio_{i}_{_slug(m)}"
        used_names.add(name)
        model.add_row(name, coeffs, SENSE_LE, 0.0, "group_shed_ratio")
    model.metadata["equity_groups"] = list(included)
    model.metadata["excluded_groups"] = list(excluded)
    return model


def set_objective(model: MilpModel, net: Network, spec: ScenarioSpec) -> MilpModel:
    """Minimize the shed fraction of total demand, or `alpha` for equity
    objectives."""
    if spec.objective == OBJ_TOTAL_SHED:
        total = net.total_demand
        if total <= 0.0:
            raise BuildError("zero-demand network: shed fraction undefined")
        h = net.horizon
        coeffs = {}
        for bid in sorted(b.id for b in net.buses):
            for d in h.days:
                for t in range(h.periods_per_day):
                    coeffs[psvar(bid, d, t)] = 1.0 / total
        model.set_objective(coeffs)
    elif spec.objective == OBJ_MAX_GROUP_SHED:
        if not model.has_variable(ALPHA):
            raise BuildError("equity objective requires the group ratio rows")
        model.set_objective({ALPHA: 1.0})
    else:
        raise BuildError(f"unknown objective {spec.objective!r}")
    return model


def build_scenario(net: Network, risk: RiskProfile, demo: BusDemographics,
                   spec: ScenarioSpec,
                   baseline: BaselineReference | None = None,
                   groups: Sequence[str] | None = None) -> MilpModel:
    """Compose the full model for one catalog row."""
    model = build_dcots(net, risk, spec)
    add_hardening(model, net, risk)
    add_budget(model, net, risk, spec)
    add_risk_cap(model, net, risk, spec)
    if spec.policy_constraint == POLICY_BUDGET:
        add_policy_budget(model, net, demo, spec)
    elif spec.policy_constraint == POLICY_LOADSHED:
        add_policy_loadshed(model, net, demo, baseline, spec)
    if spec.objective == OBJ_MAX_GROUP_SHED:
        add_equity(model, net, demo, groups if groups is not None else demo.groups)
    set_objective(model, net, spec)
    return model


# ---------------------------------------------------------------------------
# Aggregates over solved variable values (shared by policies, analysis, tests).


def total_shed(net: Network, values: Mapping[str, float]) -> float:
    h = net.horizon
    return sum(values[psvar(b.id, d, t)]
               for b in net.buses for d in h.days for t in range(h.periods_per_day))


def weighted_shed(net: Network, values: Mapping[str, float],
                  gamma: Mapping[str, float]) -> float:
    """Shed weighted by a per-bus fraction (group or vulnerability)."""
    h = net.horizon
    return sum(gamma.get(b.id, 0.0) * values[psvar(b.id, d, t)]
               for b in net.buses for d in h.days for t in range(h.periods_per_day))


def group_shed(net: Network, demo: BusDemographics, group: str,
               values: Mapping[str, float]) -> float:
    return weighted_shed(net, values,
                         {b.id: demo.gamma_grp(b.id, group) for b in net.buses})


def vuln_shed(net: Network, demo: BusDemographics, index: str,
              values: Mapping[str, float]) -> float:
    return weighted_shed(net, values,
                         {b.id: demo.gamma_vuln(b.id, index) for b in net.buses})


def baseline_reference(net: Network, demo: BusDemographics,
                       values: Mapping[str, float],
                       indices: Sequence[str]) -> BaselineReference:
    """Extract the reference quantities from a solved no-budget run."""
    return BaselineReference(
        total_shed=total_shed(net, values),
        vuln_shed={idx: vuln_shed(net, demo, idx, values) for idx in indices},
    )
