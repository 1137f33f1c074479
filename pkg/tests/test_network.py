import json

import numpy as np
import pytest

from gridharden.network import (Bus, Generator, GroupFamily, Horizon, Line,
                                Network, has_errors, load_network,
                                network_from_json, network_to_json,
                                save_network, validate_network)

from fixtures import triangle_net


def test_wellformed_triangle_has_no_violations():
    assert validate_network(triangle_net()) == []


def test_dangling_bus_reference():
    net = triangle_net()
    bad = Network(net.horizon, net.buses,
                  list(net.lines) + [Line("lx", "b1", "nope", -1.0, 1.0, -0.5, 0.5)],
                  net.generators, net.group_families)
    violations = validate_network(bad)
    assert any("dangling bus reference" in v.rule and v.entity == "line lx"
               for v in violations)


def test_dangling_generator_reference():
    net = triangle_net()
    bad = Network(net.horizon, net.buses, net.lines,
                  list(net.generators) + [Generator("gx", "ghost", 0.0, 1.0)])
    violations = validate_network(bad)
    assert any("dangling bus reference" in v.rule and "gx" in v.entity
               for v in violations)


def test_partition_fraction_sum_violation():
    h = Horizon(days=(0,), periods_per_day=1)
    buses = [Bus("b1", demand=np.zeros((1, 1)),
                 group_fractions={"White": 0.7, "Hispanic": 0.5})]
    net = Network(h, buses, [], [],
                  [GroupFamily("race", "partition", ("White", "Hispanic"))])
    violations = validate_network(net)
    assert any("partition fractions sum 1.2" in v.rule for v in violations)


def test_overlay_family_exempt_from_partition_rule():
    h = Horizon(days=(0,), periods_per_day=1)
    buses = [Bus("b1", demand=np.zeros((1, 1)), group_fractions={"Uninsured": 0.3})]
    net = Network(h, buses, [], [], [GroupFamily("ins", "overlay", ("Uninsured",))])
    assert not any("partition" in v.rule for v in validate_network(net))


def test_disconnected_network_is_warning_not_error():
    h = Horizon(days=(0,), periods_per_day=1)
    buses = [Bus("b1", demand=np.zeros((1, 1))), Bus("b2", demand=np.zeros((1, 1)))]
    net = Network(h, buses, [], [])
    violations = validate_network(net)
    assert any(v.severity == "warning" and "disconnected" in v.rule
               for v in violations)
    assert not has_errors(violations)


def test_bad_line_attributes_flagged():
    h = Horizon(days=(0,), periods_per_day=1)
    buses = [Bus("b1", demand=np.zeros((1, 1))), Bus("b2", demand=np.zeros((1, 1)))]
    lines = [Line("self", "b1", "b1", -1.0, 1.0, -0.5, 0.5),
             Line("flat", "b1", "b2", -1.0, 0.0, 0.5, -0.5)]
    violations = validate_network(Network(h, buses, lines, []))
    rules = " | ".join(v.rule for v in violations)
    assert "from_bus equals to_bus" in rules
    assert "flow_limit must be > 0" in rules
    assert "angle_min must be < angle_max" in rules


def test_path_endpoint_mismatch_flagged():
    h = Horizon(days=(0,), periods_per_day=1)
    buses = [Bus("b1", demand=np.zeros((1, 1)), location=(0.0, 0.0)),
             Bus("b2", demand=np.zeros((1, 1)), location=(0.0, 1.0))]
    lines = [Line("l1", "b1", "b2", -1.0, 1.0, -0.5, 0.5,
                  path=((0.5, 0.5), (0.0, 1.0)))]
    violations = validate_network(Network(h, buses, lines, []))
    assert any("path endpoint" in v.rule for v in violations)


def test_default_underground_cost_rule():
    line = Line("l1", "a", "b", -1.0, 1.0, -0.5, 0.5, length=12.0)
    assert line.cost == pytest.approx(7.0 * 12.0)
    explicit = Line("l2", "a", "b", -1.0, 1.0, -0.5, 0.5, length=12.0,
                    underground_cost=50.0)
    assert explicit.cost == 50.0


def test_incidence_rebuild_is_idempotent():
    net = triangle_net()
    assert net.rebuild_incidence() == (net.gens_at, net.lines_from, net.lines_to)
    assert net.lines_from["b1"] == ("l12", "l13")
    assert net.lines_to["b3"] == ("l13", "l23")


def test_horizon_invariants():
    net = triangle_net()
    bad = Network(Horizon(days=(), periods_per_day=0, base_power=-1.0),
                  net.buses, net.lines, net.generators)
    rules = " | ".join(v.rule for v in validate_network(bad))
    assert "days must be nonempty" in rules
    assert "periods_per_day" in rules
    assert "base_power" in rules


def test_demand_shape_checked():
    h = Horizon(days=(0, 1), periods_per_day=2)
    buses = [Bus("b1", demand=np.zeros((1, 2)))]
    violations = validate_network(Network(h, buses, [], []))
    assert any("demand shape" in v.rule for v in violations)


def test_json_round_trip(tmp_path):
    net = triangle_net(periods=2)
    path = tmp_path / "net.json"
    save_network(net, path)
    back = load_network(path)
    assert network_to_json(back) == network_to_json(net)
    assert validate_network(back) == []


def test_load_buses_and_line_path():
    net = triangle_net()
    assert {b.id for b in net.load_buses()} == {"b2", "b3"}
    assert net.line_path("l12") == ((0.0, 0.0), (0.0, 1.0))
