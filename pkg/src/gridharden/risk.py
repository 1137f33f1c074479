"""Wildfire-risk pipeline: daily pixel rasters to per-line, per-day risk.

The raster carries unitless potential values in [0, 247] on a square
lat/lon grid. Processing: freeze mean/std over all pixels touched by any
line on any considered day, zero out pixels below mean+std, then integrate
the surviving values along each line path (value times km of path inside
each pixel). Lines/days are then classified against fixed thresholds.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geometry import path_segments, scaled_km, segment_cells

WFPI_MAX = 247.0

DEFAULT_R_PSPS = 6e8
DEFAULT_R_HIGH = 1e6
DEFAULT_R_LOW = 1.0

CAT_HIGH = "high"
CAT_MED = "med"
CAT_LOW = "low"


@dataclass(frozen=True)
class RiskThresholds:
    r_psps: float = DEFAULT_R_PSPS
    r_high: float = DEFAULT_R_HIGH
    r_low: float = DEFAULT_R_LOW

    def __post_init__(self):
        if self.r_low >= self.r_high:
            raise ValueError(
                f"classification thresholds require r_low < r_high, "
                f"got {self.r_low} >= {self.r_high}")


class PixelGrid:
    """Per-day rasters on a shared axis-aligned lat/lon grid.

    `origin` is the lower-left corner (min lat, min lon); `values` maps day
    index to a (rows, cols) array; row 0 is the southernmost row.
    """

    def __init__(self, origin: tuple[float, float], cell_size: float,
                 values: Mapping[int, np.ndarray]):
        if cell_size <= 0:
            raise ValueError("cell_size must be > 0")
        if not values:
            raise ValueError("grid needs at least one day of values")
        self.origin = (float(origin[0]), float(origin[1]))
        self.cell_size = float(cell_size)
        vals: dict[int, np.ndarray] = {}
        shape = None
        for day, arr in values.items():
            a = np.asarray(arr, dtype=float)
            if a.ndim != 2:
                raise ValueError(f"day {day}: raster must be 2-D")
            if shape is None:
                shape = a.shape
            elif a.shape != shape:
                raise ValueError(f"day {day}: raster shape {a.shape} != {shape}")
            if (a < 0).any() or (a > WFPI_MAX).any():
                raise ValueError(f"day {day}: values outside [0, {WFPI_MAX}]")
            a.flags.writeable = False
            vals[int(day)] = a
        self.values = vals
        self.shape = shape

    @property
    def days(self) -> tuple[int, ...]:
        return tuple(sorted(self.values))

    def cells_on_path(self, path: Sequence[tuple[float, float]]) -> list[tuple[int, int]]:
        """Grid cells the path traverses with positive length, de-duplicated."""
        seen: set[tuple[int, int]] = set()
        out: list[tuple[int, int]] = []
        for a, b in path_segments(path):
            for row, col, _, _ in segment_cells(a, b, self.origin, self.cell_size, self.shape):
                if (row, col) not in seen:
                    seen.add((row, col))
                    out.append((row, col))
        return out


@dataclass(frozen=True)
class PixelStats:
    mean: float
    std_dev: float

    def __post_init__(self):
        if self.std_dev < 0:
            raise ValueError("std_dev must be >= 0")

    @property
    def cutoff(self) -> float:
        return self.mean + self.std_dev


def compute_pixel_stats(grid: PixelGrid,
                        line_paths: Iterable[Sequence[tuple[float, float]]],
                        days: Sequence[int] | None = None) -> PixelStats:
    """Population mean/std over the multiset of on-line pixel values.

    A pixel contributes once per (line, day) that touches it; the multiset
    spans all given paths over all considered days.
    """
    if days is None:
        days = grid.days
    samples: list[float] = []
    for path in line_paths:
        cells = grid.cells_on_path(path)
        for day in days:
            arr = grid.values[day]
            samples.extend(float(arr[r, c]) for r, c in cells)
    if not samples:
        raise ValueError("no on-line pixels")
    data = np.asarray(samples)
    return PixelStats(mean=float(data.mean()), std_dev=float(data.std()))


def threshold_pixels(grid: PixelGrid, stats: PixelStats) -> PixelGrid:
    """Keep pixel values at or above mean+std, zero the rest."""
    cut = stats.cutoff
    new_vals = {}
    for day, arr in grid.values.items():
        new_vals[day] = np.where(arr >= cut, arr, 0.0)
    return PixelGrid(grid.origin, grid.cell_size, new_vals)


def line_day_risk(path: Sequence[tuple[float, float]], grid: PixelGrid, day: int) -> float:
    """Integrate pixel values along the path: sum of value * km inside pixel.

    Each pixel's km lengths use the longitude scale at the pixel's center
    latitude, which keeps the integral exactly additive when a path is
    split at an interior point.
    """
    arr = grid.values[day]
    total = 0.0
    for a, b in path_segments(path):
        for row, col, p, q in segment_cells(a, b, grid.origin, grid.cell_size, grid.shape):
            v = float(arr[row, col])
            if v != 0.0:
                ref_lat = grid.origin[0] + (row + 0.5) * grid.cell_size
                total += v * scaled_km(p, q, ref_lat)
    return total


@dataclass(frozen=True)
class RiskProfile:
    """Per-line, per-day risk plus category sets and threshold context."""

    line_ids: tuple[str, ...]
    days: tuple[int, ...]
    line_day: Mapping[tuple[str, int], float]
    day_total: Mapping[int, float]
    thresholds: RiskThresholds
    high: Mapping[int, frozenset[str]]
    med: Mapping[int, frozenset[str]]
    low: Mapping[int, frozenset[str]]
    harden: frozenset[str] = field(default_factory=frozenset)

    def risk(self, line_id: str, day: int) -> float:
        return self.line_day[(line_id, day)]

    def category(self, line_id: str, day: int) -> str:
        if line_id in self.high[day]:
            return CAT_HIGH
        if line_id in self.med[day]:
            return CAT_MED
        return CAT_LOW

    def switchable(self, line_id: str, day: int) -> bool:
        return line_id in self.high[day] or line_id in self.med[day]

    def switch_set(self, day: int) -> frozenset[str]:
        return self.high[day] | self.med[day]


def classify(line_day: Mapping[tuple[str, int], float],
             line_ids: Sequence[str], days: Sequence[int],
             r_high: float, r_low: float):
    """Split lines per day into high (>= r_high), med ([r_low, r_high)) and
    low (< r_low) risk sets; the harden set is the union over days of high
    and medium lines."""
    if r_low >= r_high:
        raise ValueError(f"r_low must be < r_high, got {r_low} >= {r_high}")
    high: dict[int, frozenset[str]] = {}
    med: dict[int, frozenset[str]] = {}
    low: dict[int, frozenset[str]] = {}
    harden: set[str] = set()
    for d in days:
        h, m, lo = set(), set(), set()
        for lid in line_ids:
            r = line_day[(lid, d)]
            if r >= r_high:
                h.add(lid)
            elif r >= r_low:
                m.add(lid)
            else:
                lo.add(lid)
        high[d] = frozenset(h)
        med[d] = frozenset(m)
        low[d] = frozenset(lo)
        harden |= h | m
    return high, med, low, frozenset(harden)


def build_risk_profile(line_paths: Mapping[str, Sequence[tuple[float, float]]],
                       grid: PixelGrid,
                       thresholds: RiskThresholds = RiskThresholds(),
                       days: Sequence[int] | None = None,
                       stats: PixelStats | None = None) -> RiskProfile:
    """Full pipeline: stats (unless frozen ones are given), thresholding,
    per-line integration, day totals and classification."""
    if days is None:
        days = grid.days
    days = tuple(int(d) for d in days)
    if stats is None:
        stats = compute_pixel_stats(grid, line_paths.values(), days)
    hot = threshold_pixels(grid, stats)
    line_ids = tuple(line_paths)
    line_day: dict[tuple[str, int], float] = {}
    for lid in line_ids:
        for d in days:
            line_day[(lid, d)] = line_day_risk(line_paths[lid], hot, d)
    day_total = {d: sum(line_day[(lid, d)] for lid in line_ids) for d in days}
    high, med, low, harden = classify(line_day, line_ids, days,
                                      thresholds.r_high, thresholds.r_low)
    return RiskProfile(line_ids=line_ids, days=days, line_day=line_day,
                       day_total=day_total, thresholds=thresholds,
                       high=high, med=med, low=low, harden=harden)


def psps_days(profile: RiskProfile) -> set[int]:
    """Days whose all-energized total risk meets the shutoff trigger.

    Informational: the per-day risk cap row is built for every day
    regardless; this only reports which days trip the trigger.
    """
    return {d for d in profile.days if profile.day_total[d] >= profile.thresholds.r_psps}


# ---------------------------------------------------------------------------
# File formats: raster CSV (day,row,col,value) + sidecar JSON; profile JSON.


def load_pixel_grid(csv_path: str | Path, meta_path: str | Path) -> PixelGrid:
    with open(meta_path) as fh:
        meta = json.load(fh)
    rows, cols = int(meta["rows"]), int(meta["cols"])
    values: dict[int, np.ndarray] = {}
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"day", "row", "col", "value"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{csv_path}: raster CSV must have columns {sorted(required)}")
        for rec in reader:
            day = int(rec["day"])
            if day not in values:
                values[day] = np.zeros((rows, cols))
            values[day][int(rec["row"]), int(rec["col"])] = float(rec["value"])
    return PixelGrid(origin=(float(meta["origin_lat"]), float(meta["origin_lon"])),
                     cell_size=float(meta["cell_size_deg"]), values=values)


def profile_to_json(profile: RiskProfile) -> dict:
    return {
        "line_ids": list(profile.line_ids),
        "days": list(profile.days),
        "risk": {lid: {str(d): profile.line_day[(lid, d)] for d in profile.days}
                 for lid in profile.line_ids},
        "day_total": {str(d): profile.day_total[d] for d in profile.days},
        "thresholds": {"r_psps": profile.thresholds.r_psps,
                       "r_high": profile.thresholds.r_high,
                       "r_low": profile.thresholds.r_low},
        "categories": {str(d): {"high": sorted(profile.high[d]),
                                "med": sorted(profile.med[d]),
                                "low": sorted(profile.low[d])}
                       for d in profile.days},
        "harden": sorted(profile.harden),
    }


def profile_from_json(doc: Mapping) -> RiskProfile:
    line_ids = tuple(doc["line_ids"])
    days = tuple(int(d) for d in doc["days"])
    line_day = {(lid, int(d)): float(v)
                for lid, per_day in doc["risk"].items()
                for d, v in per_day.items()}
    day_total = {int(d): float(v) for d, v in doc["day_total"].items()}
    th = doc["thresholds"]
    cats = doc["categories"]
    as_sets = lambda key: {int(d): frozenset(cats[d][key]) for d in cats}
    return RiskProfile(
        line_ids=line_ids, days=days, line_day=line_day, day_total=day_total,
        thresholds=RiskThresholds(r_psps=float(th["r_psps"]),
                                  r_high=float(th["r_high"]),
                                  r_low=float(th["r_low"])),
        high=as_sets("high"), med=as_sets("med"), low=as_sets("low"),
        harden=frozenset(doc["harden"]),
    )


def save_profile(profile: RiskProfile, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(profile_to_json(profile), fh, indent=1, sort_keys=True)


def load_profile(path: str | Path) -> RiskProfile:
    with open(path) as fh:
        return profile_from_json(json.load(fh))
