import math

import pytest

from gridharden.model import SENSE_EQ, SENSE_GE, SENSE_LE, MilpModel
from gridharden.mps import emit_model_file, parse_mps

from fixtures import manual_profile, triangle_net


def small_model():
    m = MilpModel("toy")
    m.add_variable("x", 0.0, 10.0)
    m.add_variable("zz", 0.0, 1.0, integer=True)
    m.add_row("cap", {"x": 2.5, "zz": -1.0}, SENSE_LE, 5.0, "demo")
    m.set_objective({"x": 1.0, "zz": 3.0})
    return m


GOLDEN = """NAME toy
ROWS
 N OBJ
 L cap
COLUMNS
    x OBJ 1.0
    x cap 2.5
    MARK1 'MARKER' 'INTORG'
    zz OBJ 3.0
    zz cap -1.0
    MARK2 'MARKER' 'INTEND'
RHS
    RHS cap 5.0
BOUNDS
 LO BND x 0.0
 UP BND x 10.0
 LO BND zz 0.0
 UP BND zz 1.0
ENDATA
"""


def test_emission_matches_hand_written_golden():
    assert emit_model_file(small_model()) == GOLDEN


def test_empty_model_is_valid_mps():
    m = MilpModel("empty")
    m.add_variable("x", 0.0, 1.0)
    text = emit_model_file(m)
    assert text.startswith("NAME empty\nROWS\n N OBJ\nCOLUMNS\n")
    parsed = parse_mps(text)
    assert parsed.var_order == ["x"]
    assert parsed.rows == []


def test_round_trip_preserves_everything():
    m = MilpModel("rt")
    m.add_variable("a", -math.inf, math.inf)
    m.add_variable("b", -3.5, math.inf)
    m.add_variable("c", 0.25, 0.25)
    m.add_variable("zb", 0.0, 1.0, integer=True)
    m.add_row("r1", {"a": 1.0, "b": -2.0}, SENSE_GE, -1.5, "t")
    m.add_row("r2", {"b": 1e-17, "c": 3.0, "zb": 1.0}, SENSE_EQ, 0.0, "t")
    m.add_row("r3", {"a": 123456.789012345}, SENSE_LE, 9.87654321e12, "t")
    m.set_objective({"a": -1.0, "c": 2.0})
    parsed = parse_mps(emit_model_file(m))
    assert parsed.var_order == ["a", "b", "c", "zb"]
    assert parsed.integer == {"zb"}
    assert parsed.bounds["a"] == (-math.inf, math.inf)
    assert parsed.bounds["b"] == (-3.5, math.inf)
    assert parsed.bounds["c"] == (0.25, 0.25)
    assert parsed.bounds["zb"] == (0.0, 1.0)
    assert parsed.objective == {"a": -1.0, "c": 2.0}
    rows = {name: (sense, rhs, coeffs) for name, sense, rhs, coeffs in parsed.rows}
    assert rows["r1"] == (SENSE_GE, -1.5, {"a": 1.0, "b": -2.0})
    assert rows["r2"] == (SENSE_EQ, 0.0, {"b": 1e-17, "c": 3.0, "zb": 1.0})
    assert rows["r3"] == (SENSE_LE, 9.87654321e12, {"a": 123456.789012345})


def test_round_trip_on_full_scenario_model():
    from gridharden.builder import build_scenario
    from gridharden.demographics import BusDemographics
    from gridharden.risk import RiskThresholds
    from gridharden.scenarios import make_spec

    net = triangle_net(periods=2)
    line_day = {(l.id, 0): 100.0 for l in net.lines}
    risk = manual_profile(line_day, [l.id for l in net.lines], [0],
                          RiskThresholds(r_psps=250.0))
    model = build_scenario(net, risk, BusDemographics.from_network(net),
                           make_spec("BL-M1", 40.0))
    parsed = parse_mps(emit_model_file(model))
    assert parsed.var_order == [v.name for v in model.variables]
    assert parsed.integer == {v.name for v in model.binaries}
    for v in model.variables:
        assert parsed.bounds[v.name] == (v.lb, v.ub)
    assert parsed.objective == model.objective
    assert len(parsed.rows) == len(model.rows)
    for (name, sense, rhs, coeffs), row in zip(parsed.rows, model.rows):
        assert name == row.name
        assert sense == row.sense
        assert rhs == row.rhs  # exact: repr round-trips floats
        assert coeffs == dict(row.coeffs)


def test_emission_is_byte_deterministic():
    a = emit_model_file(small_model())
    b = emit_model_file(small_model())
    assert a == b


def test_parser_rejects_ranges_and_bad_lines():
    with pytest.raises(ValueError, match="RANGES"):
        parse_mps("NAME x\nROWS\n N OBJ\nRANGES\nENDATA\n")
    with pytest.raises(ValueError, match="unknown row"):
        parse_mps("NAME x\nROWS\n N OBJ\nCOLUMNS\n    v nope 1.0\nENDATA\n")


def test_parser_accepts_paired_entries_and_comments():
    text = """* comment line
NAME pairs
ROWS
 N COST
 L r1
 G r2
COLUMNS
    x r1 1.0 r2 2.0
    x COST 3.0
RHS
    RHS r1 4.0 r2 1.0
BOUNDS
 UP BND x 9.0
ENDATA
"""
    parsed = parse_mps(text)
    rows = {name: (sense, rhs, coeffs) for name, sense, rhs, coeffs in parsed.rows}
    assert rows["r1"] == (SENSE_LE, 4.0, {"x": 1.0})
    assert rows["r2"] == (SENSE_GE, 1.0, {"x": 2.0})
    assert parsed.objective == {"x": 3.0}
    assert parsed.bounds["x"] == (0.0, 9.0)


def test_unnamed_variable_is_internal_error():
    m = MilpModel("bad")
    with pytest.raises(ValueError, match="invalid variable name"):
        m.add_variable("", 0.0, 1.0)
    with pytest.raises(ValueError, match="invalid variable name"):
        m.add_variable("has space", 0.0, 1.0)
