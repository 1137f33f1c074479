"""Shared test fixtures: tiny deterministic networks and randomized ones."""

from __future__ import annotations

import random

import numpy as np

from gridharden.demographics import BusDemographics
from gridharden.network import Bus, Generator, GroupFamily, Horizon, Line, Network
from gridharden.risk import RiskProfile, RiskThresholds, classify
from gridharden.scenarios import make_spec


def manual_profile(line_day: dict[tuple[str, int], float], line_ids, days,
                   thresholds: RiskThresholds | None = None) -> RiskProfile:
    """RiskProfile straight from given per-line per-day risk values."""
    thresholds = thresholds or RiskThresholds()
    days = tuple(days)
    line_ids = tuple(line_ids)
    high, med, low, harden = classify(line_day, line_ids, days,
                                      thresholds.r_high, thresholds.r_low)
    day_total = {d: sum(line_day[(lid, d)] for lid in line_ids) for d in days}
    return RiskProfile(line_ids=line_ids, days=days, line_day=dict(line_day),
                       day_total=day_total, thresholds=thresholds,
                       high=high, med=med, low=low, harden=harden)


def two_bus_net(demand=((1.0, 0.5),), p_max=3.0, flow_limit=2.0) -> Network:
    h = Horizon(days=tuple(range(len(demand))), periods_per_day=len(demand[0]))
    zeros = np.zeros((h.n_days, h.periods_per_day))
    buses = [
        Bus("b1", demand=zeros, population=100.0, group_fractions={"A": 1.0},
            vuln_fraction={"CEJST": 1.0, "SVI": 1.0}, location=(0.0, 0.0)),
        Bus("b2", demand=np.asarray(demand, dtype=float), population=200.0,
            group_fractions={"A": 1.0}, vuln_fraction={"CEJST": 0.0, "SVI": 0.0},
            location=(0.0, 1.0)),
    ]
    lines = [Line("l1", "b1", "b2", susceptance=-10.0, flow_limit=flow_limit,
                  angle_min=-0.6, angle_max=0.6, length=10.0)]
    gens = [Generator("g1", "b1", 0.0, p_max)]
    return Network(h, buses, lines, gens,
                   [GroupFamily("grp", "partition", ("A",))])


def triangle_net(periods=1) -> Network:
    """Three buses in a cycle; generation at b1, load at b2 and b3."""
    h = Horizon(days=(0,), periods_per_day=periods)
    mk = lambda v: np.full((1, periods), v, dtype=float)
    buses = [
        Bus("b1", demand=mk(0.0), population=50.0,
            group_fractions={"A": 0.5, "B": 0.5},
            vuln_fraction={"CEJST": 0.2, "SVI": 0.1}, location=(0.0, 0.0)),
        Bus("b2", demand=mk(1.0), population=100.0,
            group_fractions={"A": 1.0, "B": 0.0},
            vuln_fraction={"CEJST": 1.0, "SVI": 0.5}, location=(0.0, 1.0)),
        Bus("b3", demand=mk(0.5), population=80.0,
            group_fractions={"A": 0.0, "B": 1.0},
            vuln_fraction={"CEJST": 0.0, "SVI": 1.0}, location=(1.0, 0.0)),
    ]
    lines = [
        Line("l12", "b1", "b2", susceptance=-5.0, flow_limit=2.0,
             angle_min=-0.7, angle_max=0.7, length=5.0),
        Line("l13", "b1", "b3", susceptance=-4.0, flow_limit=2.0,
             angle_min=-0.7, angle_max=0.7, length=8.0),
        Line("l23", "b2", "b3", susceptance=-3.0, flow_limit=1.5,
             angle_min=-0.7, angle_max=0.7, length=4.0),
    ]
    gens = [Generator("g1", "b1", 0.0, 4.0)]
    return Network(h, buses, lines, gens,
                   [GroupFamily("grp", "partition", ("A", "B"))])


GROUPS = ("A", "B", "C")


def random_fixture(seed: int, n_buses=None, n_lines=None, n_days=None,
                   periods=None, max_free_binaries: int = 10):
    """Random connected network + risk profile + demographics.

    Risk categories are drawn so a mix of high/med/low lines appears, the
    per-day risk cap sits below the all-energized total (so it binds), and
    the number of free binaries stays within the verifier's comfort zone.
    """
    rng = random.Random(seed)
    n_buses = n_buses or rng.randint(3, 6)
    n_lines = n_lines or rng.randint(max(3, n_buses - 1), min(8, n_buses * 2))
    n_days = n_days or rng.randint(1, 2)
    periods = periods or rng.randint(2, 4)
    days = tuple(range(n_days))

    bus_ids = [f"b{i}" for i in range(n_buses)]
    buses = []
    for i, bid in enumerate(bus_ids):
        demand = np.array([[round(rng.uniform(0.0, 1.2), 3) if rng.random() < 0.8 else 0.0
                            for _ in range(periods)] for _ in range(n_days)])
        fa = rng.random()
        fb = rng.random() * (1 - fa)
        fractions = {"A": fa, "B": fb, "C": 1.0 - fa - fb}
        buses.append(Bus(bid, demand=demand, population=rng.uniform(10, 500),
                         group_fractions=fractions,
                         vuln_fraction={"CEJST": rng.random(), "SVI": rng.random()},
                         location=(rng.uniform(-1, 1), rng.uniform(-1, 1))))

    # spanning tree first, then extra edges
    edges = []
    for i in range(1, n_buses):
        edges.append((rng.randrange(i), i))
    while len(edges) < n_lines:
        i, j = rng.randrange(n_buses), rng.randrange(n_buses)
        if i != j:
            edges.append((min(i, j), max(i, j)))
    lines = []
    for k, (i, j) in enumerate(edges):
        lines.append(Line(f"l{k}", bus_ids[i], bus_ids[j],
                          susceptance=-rng.uniform(2.0, 10.0),
                          flow_limit=rng.uniform(0.6, 2.5),
                          angle_min=-rng.uniform(0.3, 0.8),
                          angle_max=rng.uniform(0.3, 0.8),
                          length=rng.uniform(2.0, 20.0)))

    gens = []
    total_demand_per_period = sum(float(b.demand.max()) for b in buses)
    for gi in range(rng.randint(1, 2)):
        gens.append(Generator(f"g{gi}", rng.choice(bus_ids), 0.0,
                              max(1.0, total_demand_per_period) * rng.uniform(0.8, 1.5)))

    net = Network(Horizon(days=days, periods_per_day=periods), buses, lines, gens,
                  [GroupFamily("grp", "partition", GROUPS)])

    thresholds = RiskThresholds(r_psps=1.0, r_high=1e6, r_low=1.0)
    line_day = {}
    free = 0
    for line in lines:
        for d in days:
            category = rng.choices(("high", "med", "low"), weights=(2, 3, 3))[0]
            if free >= max_free_binaries:
                category = "low"
            if category == "high":
                line_day[(line.id, d)] = rng.uniform(2e6, 9e6)
            elif category == "med":
                line_day[(line.id, d)] = rng.uniform(10.0, 1e4)
            else:
                line_day[(line.id, d)] = rng.uniform(0.0, 0.9)
            if category in ("high", "med"):
                free += 1
    # Cap at half the worst all-energized day so the risk row can bind.
    worst = max(sum(line_day[(l.id, d)] for l in lines) for d in days)
    thresholds = RiskThresholds(r_psps=max(1.0, 0.5 * worst), r_high=1e6, r_low=1.0)
    profile = manual_profile(line_day, [l.id for l in lines], days, thresholds)
    demo = BusDemographics.from_network(net)
    return net, profile, demo


def fixture_with_shed(seed: int, **kwargs):
    """Random fixture whose no-budget reference run must shed load."""
    from gridharden.builder import build_scenario, total_shed
    from gridharden.oracle import oracle_solve

    for attempt in range(60):
        net, profile, demo = random_fixture(seed + 1000 * attempt, **kwargs)
        if net.total_demand <= 0:
            continue
        model = build_scenario(net, profile, demo, make_spec("BL-M0", 0.0))
        sol = oracle_solve(model)
        if sol.status == "optimal" and total_shed(net, sol.values) > 1e-6:
            return net, profile, demo, sol
    raise AssertionError(f"no shedding fixture found from seed {seed}")
