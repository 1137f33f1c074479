import math

import pytest

from gridharden.matpower import matpower_to_network_doc
from gridharden.network import network_from_json, validate_network

CASE = """function mpc = case3
% a tiny three-bus case
mpc.version = '2';
mpc.baseMVA = 100;

%% bus data
%	bus_i	type	Pd	Qd	Gs	Bs	area	Vm	Va	baseKV	zone	Vmax	Vmin
mpc.bus = [
	1	3	0	0	0	0	1	1	0	135	1	1.05	0.95;
	2	1	90	30	0	0	1	1	0	135	1	1.05	0.95;
	3	1	50	10	0	0	1	1	0	135	1	1.05	0.95;
];

%% generator data
mpc.gen = [
	1	0	0	300	-300	1	100	1	250	10;
	3	0	0	300	-300	1	100	0	100	0;
];

%% branch data
%	fbus	tbus	r	x	b	rateA	rateB	rateC	ratio	angle	status	angmin	angmax
mpc.branch = [
	1	2	0.01	0.1	0	150	0	0	0	0	1	-30	30;
	1	3	0.02	0.25	0	0	0	0	0	0	1	0	0;
	2	3	0.01	0.2	0	100	0	0	0	0	0	-30	30;
];
"""


def test_matpower_conversion():
    doc = matpower_to_network_doc(CASE)
    assert [b["id"] for b in doc["buses"]] == ["1", "2", "3"]
    assert doc["horizon"]["base_power"] == 100.0

    lines = {l["id"]: l for l in doc["lines"]}
    assert set(lines) == {"br0", "br1"}  # out-of-service branch dropped
    br0 = lines["br0"]
    assert br0["from_bus"] == "1" and br0["to_bus"] == "2"
    assert br0["susceptance"] == pytest.approx(-10.0)  # -1/x
    assert br0["flow_limit"] == pytest.approx(1.5)  # 150 MW / 100 MVA
    assert br0["angle_min"] == pytest.approx(math.radians(-30))
    assert br0["angle_max"] == pytest.approx(math.radians(30))
    # zero rating / zero angle limits map to wide defaults
    br1 = lines["br1"]
    assert br1["flow_limit"] == 100.0
    assert br1["angle_max"] == pytest.approx(2 * math.pi)

    gens = doc["generators"]
    assert len(gens) == 1  # status-0 generator dropped
    assert gens[0]["bus"] == "1"
    assert gens[0]["p_max"] == pytest.approx(2.5)
    assert gens[0]["p_min"] == pytest.approx(0.1)


def test_matpower_demand_seeding_and_validity():
    doc = matpower_to_network_doc(CASE, demand_from_pd=True)
    by_id = {b["id"]: b for b in doc["buses"]}
    assert by_id["2"]["demand"] == [[0.9]]
    assert by_id["3"]["demand"] == [[0.5]]
    net = network_from_json(doc)
    # structurally valid apart from co-located bus coordinates
    errors = [v for v in validate_network(net)
              if v.severity == "error" and "path" not in v.rule]
    assert errors == []


def test_matpower_rejects_zero_reactance():
    bad = CASE.replace("1	2	0.01	0.1", "1	2	0.01	0.0")
    with pytest.raises(ValueError, match="zero reactance"):
        matpower_to_network_doc(bad)


def test_matpower_requires_bus_and_branch():
    with pytest.raises(ValueError, match="mpc.bus"):
        matpower_to_network_doc("function mpc = empty\n")
