"""Network domain model: buses, lines, generators, horizon, validation.

Construction freezes everything (tuples, read-only arrays) so networks can
be shared across concurrently running scenarios. The canonical on-disk form
is a single JSON document with `horizon`, `buses`, `lines`, `generators`
and optional `group_families` arrays; see `network_from_json`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

UNDERGROUND_COST_PER_MILE = 7.0  # M$ per mile
PARTITION_TOL = 1e-6
ENDPOINT_TOL_DEG = 1e-6


@dataclass(frozen=True)
class Violation:
    """One failed structural rule, attributed to a named entity."""

    entity: str
    rule: str
    severity: str = "error"  # "error" or "warning"

    def __str__(self) -> str:
        return f"[{self.severity}] {self.entity}: {self.rule}"


@dataclass(frozen=True)
class GroupFamily:
    """A named family of demographic groups.

    `partition` families must have bus fractions summing to 1; `overlay`
    families carry independent fractions (e.g. uninsured).
    """

    name: str
    kind: str  # "partition" or "overlay"
    groups: tuple[str, ...]


@dataclass(frozen=True)
class Horizon:
    days: tuple[int, ...]
    periods_per_day: int
    base_power: float = 100.0

    @property
    def n_days(self) -> int:
        return len(self.days)


@dataclass(frozen=True)
class Bus:
    id: str
    demand: np.ndarray  # shape (n_days, periods_per_day), p.u.
    population: float = 0.0
    group_fractions: Mapping[str, float] = field(default_factory=dict)
    vuln_fraction: Mapping[str, float] = field(default_factory=dict)
    location: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        arr = np.asarray(self.demand, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "demand", arr)
        object.__setattr__(self, "group_fractions", dict(self.group_fractions))
        object.__setattr__(self, "vuln_fraction", dict(self.vuln_fraction))
        object.__setattr__(self, "location", tuple(self.location))

    @property
    def total_demand(self) -> float:
        return float(self.demand.sum())


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    susceptance: float
    flow_limit: float
    angle_min: float
    angle_max: float
    length: float = 0.0  # miles
    underground_cost: float | None = None  # M$; None -> default costing rule
    path: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(tuple(p) for p in self.path))
        if self.underground_cost is None:
            object.__setattr__(
                self, "underground_cost", UNDERGROUND_COST_PER_MILE * self.length
            )

    @property
    def cost(self) -> float:
        return float(self.underground_cost)


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    p_min: float = 0.0
    p_max: float = 0.0


class Network:
    """Immutable network with derived incidence sets.

    Incidence (`gens_at`, `lines_from`, `lines_to`) is computed once at
    construction; `rebuild_incidence` recomputes it for idempotence checks.
    """

    def __init__(
        self,
        horizon: Horizon,
        buses: Sequence[Bus],
        lines: Sequence[Line],
        generators: Sequence[Generator],
        group_families: Sequence[GroupFamily] = (),
    ):
        self.horizon = horizon
        self.buses = tuple(buses)
        self.lines = tuple(lines)
        self.generators = tuple(generators)
        self.group_families = tuple(group_families)
        self.bus_by_id = {b.id: b for b in self.buses}
        self.line_by_id = {l.id: l for l in self.lines}
        self.gen_by_id = {g.id: g for g in self.generators}
        self.gens_at, self.lines_from, self.lines_to = self.rebuild_incidence()

    def rebuild_incidence(self):
        gens_at = {b.id: [] for b in self.buses}
        lines_from = {b.id: [] for b in self.buses}
        lines_to = {b.id: [] for b in self.buses}
        for g in self.generators:
            if g.bus in gens_at:
                gens_at[g.bus].append(g.id)
        for l in self.lines:
            if l.from_bus in lines_from:
                lines_from[l.from_bus].append(l.id)
            if l.to_bus in lines_to:
                lines_to[l.to_bus].append(l.id)
        freeze = lambda d: {k: tuple(v) for k, v in d.items()}
        return freeze(gens_at), freeze(lines_from), freeze(lines_to)

    @property
    def total_demand(self) -> float:
        return sum(b.total_demand for b in self.buses)

    def load_buses(self) -> tuple[Bus, ...]:
        """Buses with nonzero demand in any period."""
        return tuple(b for b in self.buses if b.total_demand > 0.0)

    def line_path(self, line_id: str) -> tuple[tuple[float, float], ...]:
        """Line geometry; defaults to the straight bus-to-bus segment."""
        line = self.line_by_id[line_id]
        if line.path:
            return line.path
        return (self.bus_by_id[line.from_bus].location,
                self.bus_by_id[line.to_bus].location)

    def is_connected(self) -> bool:
        if not self.buses:
            return True
        adj: dict[str, set[str]] = {b.id: set() for b in self.buses}
        for l in self.lines:
            if l.from_bus in adj and l.to_bus in adj:
                adj[l.from_bus].add(l.to_bus)
                adj[l.to_bus].add(l.from_bus)
        seen = {self.buses[0].id}
        stack = [self.buses[0].id]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(self.buses)


def validate_network(net: Network) -> list[Violation]:
    """Check every structural invariant; returns diagnostics, never raises.

    Errors mark data that cannot be modeled; a disconnected graph is only a
    warning because de-energization legitimately splits components.
    """
    out: list[Violation] = []
    err = lambda entity, rule: out.append(Violation(entity, rule))

    h = net.horizon
    if not h.days:
        err("horizon", "days must be nonempty")
    if list(h.days) != sorted(set(h.days)):
        err("horizon", "days must be strictly increasing")
    if h.periods_per_day < 1:
        err("horizon", "periods_per_day must be >= 1")
    if not h.base_power > 0:
        err("horizon", "base_power must be > 0")

    seen_ids: set[str] = set()
    for b in net.buses:
        name = f"bus {b.id}"
        if b.id in seen_ids:
            err(name, "duplicate id")
        seen_ids.add(b.id)
        if any(ch.isspace() for ch in b.id):
            err(name, "id contains whitespace")
        if b.demand.shape != (h.n_days, h.periods_per_day):
            err(name, f"demand shape {b.demand.shape} != (days, periods) = "
                f"({h.n_days}, {h.periods_per_day})")
        elif (b.demand < 0).any():
            err(name, "negative demand")
        if b.population < 0:
            err(name, "population must be >= 0")
        for grp, frac in b.group_fractions.items():
            if not 0.0 <= frac <= 1.0:
                err(name, f"group fraction {grp}={frac} outside [0, 1]")
        for idx, frac in b.vuln_fraction.items():
            if not 0.0 <= frac <= 1.0:
                err(name, f"vulnerability fraction {idx}={frac} outside [0, 1]")
        for fam in net.group_families:
            if fam.kind != "partition":
                continue
            total = sum(b.group_fractions.get(g, 0.0) for g in fam.groups)
            if abs(total - 1.0) > PARTITION_TOL:
                err(name, f"partition fractions sum {total:.6g} != 1 +/- {PARTITION_TOL} "
                    f"for family {fam.name}")

    for l in net.lines:
        name = f"line {l.id}"
        if any(ch.isspace() for ch in l.id):
            err(name, "id contains whitespace")
        for end in (l.from_bus, l.to_bus):
            if end not in net.bus_by_id:
                err(name, f"dangling bus reference {end}")
        if l.from_bus == l.to_bus:
            err(name, "from_bus equals to_bus")
        if not l.flow_limit > 0:
            err(name, "flow_limit must be > 0")
        if not l.angle_min < l.angle_max:
            err(name, "angle_min must be < angle_max")
        if l.length < 0:
            err(name, "length must be >= 0")
        if l.cost < 0:
            err(name, "underground_cost must be >= 0")
        if l.path:
            for end, bus_id in ((l.path[0], l.from_bus), (l.path[-1], l.to_bus)):
                bus = net.bus_by_id.get(bus_id)
                if bus is None:
                    continue
                if (abs(end[0] - bus.location[0]) > ENDPOINT_TOL_DEG
                        or abs(end[1] - bus.location[1]) > ENDPOINT_TOL_DEG):
                    err(name, f"path endpoint {end} does not coincide with bus "
                        f"{bus_id} location {bus.location}")

    for g in net.generators:
        name = f"generator {g.id}"
        if any(ch.isspace() for ch in g.id):
            err(name, "id contains whitespace")
        if g.bus not in net.bus_by_id:
            err(name, f"dangling bus reference {g.bus}")
        if not 0.0 <= g.p_min <= g.p_max:
            err(name, f"generation limits must satisfy 0 <= p_min <= p_max, "
                f"got [{g.p_min}, {g.p_max}]")

    gens_at, lines_from, lines_to = net.rebuild_incidence()
    if (gens_at, lines_from, lines_to) != (net.gens_at, net.lines_from, net.lines_to):
        err("network", "incidence sets inconsistent with line/generator references")

    if not net.is_connected():
        out.append(Violation("network", "graph is disconnected", severity="warning"))
    return out


def has_errors(violations: Sequence[Violation]) -> bool:
    return any(v.severity == "error" for v in violations)


# ---------------------------------------------------------------------------
# JSON serialization


def network_from_json(doc: Mapping) -> Network:
    h = doc["horizon"]
    horizon = Horizon(
        days=tuple(int(d) for d in h["days"]),
        periods_per_day=int(h["periods_per_day"]),
        base_power=float(h.get("base_power", 100.0)),
    )
    buses = [
        Bus(
            id=str(b["id"]),
            demand=np.asarray(b["demand"], dtype=float),
            population=float(b.get("population", 0.0)),
            group_fractions={str(k): float(v) for k, v in b.get("group_fractions", {}).items()},
            vuln_fraction={str(k): float(v) for k, v in b.get("vuln_fraction", {}).items()},
            location=tuple(b.get("location", (0.0, 0.0))),
        )
        for b in doc["buses"]
    ]
    lines = [
        Line(
            id=str(l["id"]),
            from_bus=str(l["from_bus"]),
            to_bus=str(l["to_bus"]),
            susceptance=float(l["susceptance"]),
            flow_limit=float(l["flow_limit"]),
            angle_min=float(l["angle_min"]),
            angle_max=float(l["angle_max"]),
            length=float(l.get("length", 0.0)),
            underground_cost=(float(l["underground_cost"])
                              if l.get("underground_cost") is not None else None),
            path=tuple((float(p[0]), float(p[1])) for p in l.get("path", ())),
        )
        for l in doc["lines"]
    ]
    gens = [
        Generator(
            id=str(g["id"]),
            bus=str(g["bus"]),
            p_min=float(g.get("p_min", 0.0)),
            p_max=float(g["p_max"]),
        )
        for g in doc["generators"]
    ]
    families = [
        GroupFamily(name=str(f["name"]), kind=str(f["kind"]),
                    groups=tuple(str(g) for g in f["groups"]))
        for f in doc.get("group_families", ())
    ]
    return Network(horizon, buses, lines, gens, families)


def network_to_json(net: Network) -> dict:
    return {
        "horizon": {
            "days": list(net.horizon.days),
            "periods_per_day": net.horizon.periods_per_day,
            "base_power": net.horizon.base_power,
        },
        "buses": [
            {
                "id": b.id,
                "demand": b.demand.tolist(),
                "population": b.population,
                "group_fractions": dict(b.group_fractions),
                "vuln_fraction": dict(b.vuln_fraction),
                "location": list(b.location),
            }
            for b in net.buses
        ],
        "lines": [
            {
                "id": l.id,
                "from_bus": l.from_bus,
                "to_bus": l.to_bus,
                "susceptance": l.susceptance,
                "flow_limit": l.flow_limit,
                "angle_min": l.angle_min,
                "angle_max": l.angle_max,
                "length": l.length,
                "underground_cost": l.underground_cost,
                "path": [list(p) for p in l.path],
            }
            for l in net.lines
        ],
        "generators": [
            {"id": g.id, "bus": g.bus, "p_min": g.p_min, "p_max": g.p_max}
            for g in net.generators
        ],
        "group_families": [
            {"name": f.name, "kind": f.kind, "groups": list(f.groups)}
            for f in net.group_families
        ],
    }


def load_network(path: str | Path) -> Network:
    with open(path) as fh:
        return network_from_json(json.load(fh))


def save_network(net: Network, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(network_to_json(net), fh, indent=1)
