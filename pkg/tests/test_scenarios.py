import pytest

from gridharden.scenarios import (CATALOG, MODEL_IDS, OBJ_MAX_GROUP_SHED,
                                  OBJ_TOTAL_SHED, POLICY_BUDGET, POLICY_LOADSHED,
                                  POLICY_NONE, ScenarioSpec, make_spec,
                                  scenario_catalog)


def test_catalog_has_eleven_models():
    specs = scenario_catalog(1000.0)
    assert len(specs) == 11
    assert [s.model_id for s in specs] == list(MODEL_IDS)


def test_catalog_row_e_m8():
    spec = next(s for s in scenario_catalog(1000.0) if s.model_id == "E-M8")
    assert spec.objective == OBJ_MAX_GROUP_SHED
    assert spec.policy_constraint == POLICY_LOADSHED
    assert spec.vulnerability_index == "CEJST"


def test_catalog_row_m2():
    spec = next(s for s in scenario_catalog(250.0) if s.model_id == "M2")
    assert spec.objective == OBJ_TOTAL_SHED
    assert spec.policy_constraint == POLICY_BUDGET
    assert spec.vulnerability_index == "CEJST"
    assert spec.budget == 250.0


def test_bl_m0_always_budget_zero():
    for budget in (0.0, 250.0, 1000.0):
        specs = scenario_catalog(budget)
        assert specs[0].model_id == "BL-M0"
        assert specs[0].budget == 0.0
        for s in specs[1:]:
            assert s.budget == budget


def test_catalog_mapping_is_bijective():
    combos = set(CATALOG.values())
    # BL-M0 and BL-M1 share a combo by design (budget distinguishes them)
    assert len(combos) == len(CATALOG) - 1
    assert len(CATALOG) == 11


def test_spec_validation_errors():
    with pytest.raises(ValueError, match="budget"):
        ScenarioSpec("custom", OBJ_TOTAL_SHED, budget=-1.0)
    with pytest.raises(ValueError, match="vulnerability index"):
        ScenarioSpec("custom", OBJ_TOTAL_SHED, policy_constraint=POLICY_BUDGET,
                     budget=10.0)
    with pytest.raises(ValueError, match="does not match"):
        ScenarioSpec("M2", OBJ_TOTAL_SHED, policy_constraint=POLICY_NONE, budget=10.0)
    with pytest.raises(ValueError, match="no-budget"):
        ScenarioSpec("BL-M0", OBJ_TOTAL_SHED, budget=10.0)
    with pytest.raises(KeyError):
        make_spec("M99", 10.0)


def test_defaults_match_formulation_constants():
    import math
    spec = make_spec("BL-M1", 100.0)
    assert spec.big_m_upper == pytest.approx(2.0 * math.pi)
    assert spec.big_m_lower == pytest.approx(-2.0 * math.pi)
    assert spec.mip_gap == 0.01


def test_needs_baseline_flags():
    assert make_spec("M3", 1.0).needs_baseline
    assert make_spec("E-M10", 1.0).needs_baseline
    assert not make_spec("M2", 1.0).needs_baseline
    assert make_spec("E-M6", 1.0).is_equity
