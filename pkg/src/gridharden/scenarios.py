"""Scenario configuration: objective/policy combinations and the model catalog."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

OBJ_TOTAL_SHED = "total-load-shed"
OBJ_MAX_GROUP_SHED = "max-group-percent-shed"

POLICY_NONE = "none"
POLICY_BUDGET = "budget"
POLICY_LOADSHED = "load-shed-reduction"

INDEX_CEJST = "CEJST"
INDEX_SVI = "SVI"

# Canonical catalog rows: model_id -> (objective, policy_constraint, index).
# BL-M0 is the no-budget reference model and always runs at budget 0.
CATALOG: dict[str, tuple[str, str, str | None]] = {
    "BL-M0": (OBJ_TOTAL_SHED, POLICY_NONE, None),
    "BL-M1": (OBJ_TOTAL_SHED, POLICY_NONE, None),
    "M2": (OBJ_TOTAL_SHED, POLICY_BUDGET, INDEX_CEJST),
    "M3": (OBJ_TOTAL_SHED, POLICY_LOADSHED, INDEX_CEJST),
    "M4": (OBJ_TOTAL_SHED, POLICY_BUDGET, INDEX_SVI),
    "M5": (OBJ_TOTAL_SHED, POLICY_LOADSHED, INDEX_SVI),
    "E-M6": (OBJ_MAX_GROUP_SHED, POLICY_NONE, None),
    "E-M7": (OBJ_MAX_GROUP_SHED, POLICY_BUDGET, INDEX_CEJST),
    "E-M8": (OBJ_MAX_GROUP_SHED, POLICY_LOADSHED, INDEX_CEJST),
    "E-M9": (OBJ_MAX_GROUP_SHED, POLICY_BUDGET, INDEX_SVI),
    "E-M10": (OBJ_MAX_GROUP_SHED, POLICY_LOADSHED, INDEX_SVI),
}

MODEL_IDS = tuple(CATALOG)


@dataclass(frozen=True)
class ScenarioSpec:
    """One model/budget combination to build and solve."""

    model_id: str
    objective: str
    policy_constraint: str = POLICY_NONE
    vulnerability_index: str | None = None
    budget: float = 0.0  # M$
    big_m_upper: float = 2.0 * math.pi
    big_m_lower: float = -2.0 * math.pi
    mip_gap: float = 0.01
    time_limit: float = 300.0  # seconds
    warm_start: Mapping[str, float] | None = None

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError(f"{self.model_id}: budget must be >= 0")
        if self.objective not in (OBJ_TOTAL_SHED, OBJ_MAX_GROUP_SHED):
            raise ValueError(f"{self.model_id}: unknown objective {self.objective!r}")
        if self.policy_constraint not in (POLICY_NONE, POLICY_BUDGET, POLICY_LOADSHED):
            raise ValueError(
                f"{self.model_id}: unknown policy constraint {self.policy_constraint!r}")
        if self.policy_constraint != POLICY_NONE and not self.vulnerability_index:
            raise ValueError(
                f"{self.model_id}: a policy constraint requires a vulnerability index")
        canonical = CATALOG.get(self.model_id)
        if canonical is not None:
            got = (self.objective, self.policy_constraint, self.vulnerability_index)
            if got != canonical:
                raise ValueError(
                    f"{self.model_id}: (objective, policy, index) {got} does not match "
                    f"the catalog definition {canonical}")
            if self.model_id == "BL-M0" and self.budget != 0.0:
                raise ValueError("BL-M0 is the no-budget model; budget must be 0")

    @property
    def needs_baseline(self) -> bool:
        return self.policy_constraint == POLICY_LOADSHED

    @property
    def is_equity(self) -> bool:
        return self.objective == OBJ_MAX_GROUP_SHED

    def with_warm_start(self, values: Mapping[str, float] | None) -> "ScenarioSpec":
        return replace(self, warm_start=dict(values) if values else None)


def make_spec(model_id: str, budget: float, **kwargs) -> ScenarioSpec:
    """Instantiate a catalog row at the given budget (BL-M0 pins budget 0)."""
    try:
        objective, policy, index = CATALOG[model_id]
    except KeyError:
        raise KeyError(f"unknown model id {model_id!r}; expected one of {MODEL_IDS}")
    if model_id == "BL-M0":
        budget = 0.0
    return ScenarioSpec(
        model_id=model_id,
        objective=objective,
        policy_constraint=policy,
        vulnerability_index=index,
        budget=budget,
        **kwargs,
    )


def scenario_catalog(budget: float, **kwargs) -> list[ScenarioSpec]:
    """All 11 catalog models instantiated at `budget`."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    return [make_spec(model_id, budget, **kwargs) for model_id in MODEL_IDS]
