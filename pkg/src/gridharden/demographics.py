"""Census-tract to bus attribution and per-bus demographic fractions.

Tracts are assigned to load buses by a three-pass radius scheme, then bus
feature vectors are weighted sums of tract feature vectors. Distances are
great-circle km between tract population centers and bus locations.

The third pass divides a tract's population among in-radius buses with
weights proportional to distance, exactly as the source method prescribes
(a counterintuitive choice); set `inverse_distance=True` to flip to
1/distance weighting.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from .geometry import haversine_km
from .network import Network

MIN_DISTANCE_KM = 1e-3  # 1 m floor keeps weights defined for co-located points
POPULATION_KEY = "population"
VULN_POP_PREFIX = "vuln_pop::"
PERCENTILE_COLUMN_PREFIX = "pctl_"


@dataclass(frozen=True)
class TractRecord:
    gidtr: str
    center: tuple[float, float]  # (lat, lon)
    features: Mapping[str, float]  # population plus per-group counts
    percentiles: Mapping[str, float] = field(default_factory=dict)
    vuln_flags: Mapping[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(self.center))
        feats = {str(k): float(v) for k, v in self.features.items()}
        object.__setattr__(self, "features", feats)
        pct = {str(k): float(v) for k, v in self.percentiles.items()}
        for k, v in pct.items():
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"tract {self.gidtr}: percentile {k}={v} outside [0, 100]")
        object.__setattr__(self, "percentiles", pct)
        object.__setattr__(self, "vuln_flags", dict(self.vuln_flags))
        pop = feats.get(POPULATION_KEY, 0.0)
        for k, v in feats.items():
            if k != POPULATION_KEY and not k.startswith(VULN_POP_PREFIX) and v > pop + 1e-9:
                raise ValueError(
                    f"tract {self.gidtr}: group count {k}={v} exceeds population {pop}")

    @property
    def population(self) -> float:
        return self.features.get(POPULATION_KEY, 0.0)


@dataclass(frozen=True)
class AssignmentMatrix:
    """Sparse tract-to-bus weights plus the per-tract assignment radius."""

    weights: Mapping[tuple[str, str], float]  # (tract, bus) -> fraction
    tract_radius: Mapping[str, float]
    unassigned_tracts: tuple[str, ...] = ()

    def buses_of(self, tract: str) -> dict[str, float]:
        return {b: w for (t, b), w in self.weights.items() if t == tract}

    def tracts_of(self, bus: str) -> dict[str, float]:
        return {t: w for (t, b), w in self.weights.items() if b == bus}


def assign_tracts(tracts: Sequence[TractRecord],
                  bus_locations: Mapping[str, tuple[float, float]],
                  inverse_distance: bool = False) -> AssignmentMatrix:
    """Three-pass tract-to-bus assignment over the given (load) buses.

    Pass 1 initializes each tract's radius to its nearest-bus distance and
    marks in-radius buses assigned. Pass 2 grows radii so every remaining
    bus is covered by its nearest tract. Pass 3 splits each tract among its
    in-radius buses with distance-proportional weights.
    """
    if not tracts:
        raise ValueError("no tracts to assign")
    if not bus_locations:
        raise ValueError("no load buses to assign tracts to")

    bus_ids = list(bus_locations)
    dist: dict[tuple[str, str], float] = {}
    for t in tracts:
        for b in bus_ids:
            dist[(t.gidtr, b)] = max(haversine_km(t.center, bus_locations[b]),
                                     MIN_DISTANCE_KM)

    # Pass 1: nearest-bus radius per tract; buses inside any radius are assigned.
    radius = {t.gidtr: min(dist[(t.gidtr, b)] for b in bus_ids) for t in tracts}
    assigned = {b for b in bus_ids
                if any(dist[(t.gidtr, b)] <= radius[t.gidtr] for t in tracts)}

    # Pass 2: grow the nearest tract's radius over each unassigned bus.
    for b in bus_ids:
        if b in assigned:
            continue
        nearest = min(tracts, key=lambda t: dist[(t.gidtr, b)])
        r_n = dist[(nearest.gidtr, b)]
        radius[nearest.gidtr] = max(radius[nearest.gidtr], r_n)
        assigned.add(b)

    # Pass 3: distance-proportional split among in-radius buses.
    weights: dict[tuple[str, str], float] = {}
    unassigned: list[str] = []
    for t in tracts:
        inside = [b for b in bus_ids if dist[(t.gidtr, b)] <= radius[t.gidtr]]
        if not inside:
            unassigned.append(t.gidtr)
            continue
        if inverse_distance:
            raw = {b: 1.0 / dist[(t.gidtr, b)] for b in inside}
        else:
            raw = {b: dist[(t.gidtr, b)] for b in inside}
        total = sum(raw.values())
        for b in inside:
            weights[(t.gidtr, b)] = raw[b] / total

    return AssignmentMatrix(weights=weights, tract_radius=radius,
                            unassigned_tracts=tuple(unassigned))


def tract_feature_vector(tract: TractRecord, vuln_indices: Sequence[str] = ()) -> dict[str, float]:
    """Tract features augmented with per-index vulnerable-population counts."""
    f = dict(tract.features)
    for idx in vuln_indices:
        flagged = tract.vuln_flags.get(idx, False)
        f[VULN_POP_PREFIX + idx] = tract.population if flagged else 0.0
    return f


def bus_features(tracts: Sequence[TractRecord], assignment: AssignmentMatrix,
                 vuln_indices: Sequence[str] = ()) -> dict[str, dict[str, float]]:
    """Per-bus feature vectors: weighted sums of tract feature vectors."""
    by_tract = {t.gidtr: tract_feature_vector(t, vuln_indices) for t in tracts}
    out: dict[str, dict[str, float]] = {}
    for (tract_id, bus_id), w in assignment.weights.items():
        feats = by_tract.get(tract_id)
        if feats is None:
            continue  # linearity: absent tracts contribute nothing
        target = out.setdefault(bus_id, {})
        for key, value in feats.items():
            target[key] = target.get(key, 0.0) + w * value
    return out


def group_fractions(features_by_bus: Mapping[str, Mapping[str, float]],
                    groups: Sequence[str],
                    vuln_indices: Sequence[str] = ()):
    """Per-bus group fractions and vulnerability fractions.

    Returns (group_fracs, vuln_fracs, zero_population_buses); buses with no
    population get all-zero fractions and are reported, not dropped.
    """
    group_fracs: dict[str, dict[str, float]] = {}
    vuln_fracs: dict[str, dict[str, float]] = {}
    zero_pop: list[str] = []
    for bus_id, feats in features_by_bus.items():
        pop = feats.get(POPULATION_KEY, 0.0)
        if pop <= 0.0:
            zero_pop.append(bus_id)
            group_fracs[bus_id] = {g: 0.0 for g in groups}
            vuln_fracs[bus_id] = {idx: 0.0 for idx in vuln_indices}
            continue
        group_fracs[bus_id] = {g: feats.get(g, 0.0) / pop for g in groups}
        vuln_fracs[bus_id] = {idx: feats.get(VULN_POP_PREFIX + idx, 0.0) / pop
                              for idx in vuln_indices}
    return group_fracs, vuln_fracs, zero_pop


# ---------------------------------------------------------------------------
# Vulnerability rules: disjunction of conjunctions over percentile thresholds.


@dataclass(frozen=True)
class VulnerabilityRule:
    """Flag a tract if ANY clause holds; a clause is a conjunction of
    (indicator, minimum percentile) requirements."""

    name: str
    clauses: tuple[tuple[tuple[str, float], ...], ...]

    def applies(self, tract: TractRecord) -> bool:
        for clause in self.clauses:
            ok = True
            for indicator, min_pct in clause:
                if indicator not in tract.percentiles:
                    raise KeyError(
                        f"rule {self.name}: tract {tract.gidtr} has no indicator "
                        f"{indicator!r}")
                if tract.percentiles[indicator] < min_pct:
                    ok = False
                    break
            if ok:
                return True
        return False


def flag_vulnerability(tracts: Sequence[TractRecord],
                       rule: VulnerabilityRule) -> list[TractRecord]:
    """Evaluate `rule` on every tract; returns tracts with the flag set."""
    out = []
    for t in tracts:
        flags = dict(t.vuln_flags)
        flags[rule.name] = rule.applies(t)
        out.append(replace(t, vuln_flags=flags))
    return out


def load_rules(path: str | Path) -> list[VulnerabilityRule]:
    """Rule file: {index_name: [[{"indicator": ..., "min_percentile": ...}, ...], ...]}."""
    with open(path) as fh:
        doc = json.load(fh)
    rules = []
    for name, clauses in doc.items():
        parsed = tuple(
            tuple((str(c["indicator"]), float(c["min_percentile"])) for c in clause)
            for clause in clauses
        )
        rules.append(VulnerabilityRule(name=str(name), clauses=parsed))
    return rules


def load_tracts(path: str | Path) -> list[TractRecord]:
    """Tract CSV: gidtr, lat, lon, population, group columns, and percentile
    columns prefixed `pctl_`."""
    tracts = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"gidtr", "lat", "lon", "population"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: tract CSV must have columns {sorted(required)}")
        for rec in reader:
            features = {POPULATION_KEY: float(rec["population"])}
            percentiles = {}
            for key, value in rec.items():
                if key in required or value in (None, ""):
                    continue
                if key.startswith(PERCENTILE_COLUMN_PREFIX):
                    percentiles[key[len(PERCENTILE_COLUMN_PREFIX):]] = float(value)
                else:
                    features[key] = float(value)
            tracts.append(TractRecord(
                gidtr=str(rec["gidtr"]),
                center=(float(rec["lat"]), float(rec["lon"])),
                features=features,
                percentiles=percentiles,
            ))
    return tracts


# ---------------------------------------------------------------------------
# Bus-level demographic view consumed by the model builder and analysis.


@dataclass(frozen=True)
class BusDemographics:
    """Per-bus population, group fractions and vulnerability fractions."""

    population: Mapping[str, float]
    group_fractions: Mapping[str, Mapping[str, float]]  # bus -> group -> frac
    vuln_fractions: Mapping[str, Mapping[str, float]]  # bus -> index -> frac

    def gamma_grp(self, bus_id: str, group: str) -> float:
        return self.group_fractions.get(bus_id, {}).get(group, 0.0)

    def gamma_vuln(self, bus_id: str, index: str) -> float:
        return self.vuln_fractions.get(bus_id, {}).get(index, 0.0)

    @property
    def groups(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for per_bus in self.group_fractions.values():
            for g in per_bus:
                seen.setdefault(g)
        return tuple(seen)

    @classmethod
    def from_network(cls, net: Network) -> "BusDemographics":
        return cls(
            population={b.id: b.population for b in net.buses},
            group_fractions={b.id: dict(b.group_fractions) for b in net.buses},
            vuln_fractions={b.id: dict(b.vuln_fraction) for b in net.buses},
        )

    @classmethod
    def from_tracts(cls, tracts: Sequence[TractRecord], assignment: AssignmentMatrix,
                    groups: Sequence[str], vuln_indices: Sequence[str] = ()):
        feats = bus_features(tracts, assignment, vuln_indices)
        group_fracs, vuln_fracs, zero_pop = group_fractions(feats, groups, vuln_indices)
        demo = cls(
            population={b: f.get(POPULATION_KEY, 0.0) for b, f in feats.items()},
            group_fractions=group_fracs,
            vuln_fractions=vuln_fracs,
        )
        return demo, zero_pop

    def to_json(self) -> dict:
        return {
            "population": dict(self.population),
            "group_fractions": {b: dict(v) for b, v in self.group_fractions.items()},
            "vuln_fractions": {b: dict(v) for b, v in self.vuln_fractions.items()},
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "BusDemographics":
        return cls(
            population={str(k): float(v) for k, v in doc["population"].items()},
            group_fractions={str(b): {str(g): float(x) for g, x in v.items()}
                             for b, v in doc["group_fractions"].items()},
            vuln_fractions={str(b): {str(i): float(x) for i, x in v.items()}
                            for b, v in doc["vuln_fractions"].items()},
        )
