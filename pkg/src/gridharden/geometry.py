"""Geographic primitives: distances in km and segment/grid clipping.

All coordinates are (lat, lon) in degrees. Path lengths use the
equirectangular approximation evaluated at the segment midpoint latitude,
which keeps per-cell lengths exactly additive under path splitting.
Point-to-point distances use the haversine formula.
"""

from __future__ import annotations

import math
from typing import Iterator, Sequence

EARTH_RADIUS_KM = 6371.0088


def haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in km between two (lat, lon) points."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def equirect_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Equirectangular length in km of the segment a->b (midpoint latitude)."""
    return scaled_km(a, b, 0.5 * (a[0] + b[0]))


def scaled_km(a: tuple[float, float], b: tuple[float, float],
              ref_lat_deg: float) -> float:
    """Equirectangular length with the longitude scale fixed at `ref_lat_deg`.

    Holding the reference latitude fixed makes lengths exactly additive
    when a segment is split at an interior point.
    """
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    dx = (lon2 - lon1) * math.cos(math.radians(ref_lat_deg))
    dy = lat2 - lat1
    return EARTH_RADIUS_KM * math.hypot(dx, dy)


def segment_cells(
    a: tuple[float, float],
    b: tuple[float, float],
    origin: tuple[float, float],
    cell_size: float,
    shape: tuple[int, int],
) -> Iterator[tuple[int, int, tuple[float, float], tuple[float, float]]]:
    """Clip segment a->b against an axis-aligned lat/lon grid.

    The grid has `shape` = (rows, cols) cells of `cell_size` degrees whose
    lower-left corner is `origin` (min lat, min lon). Yields
    (row, col, sub_start, sub_end) for every in-grid cell the segment
    traverses with positive length, in traversal order. Sub-segments outside
    the grid are skipped.
    """
    rows, cols = shape
    lat0, lon0 = origin

    # Breakpoints where the segment crosses a grid line, in parameter t.
    ts = [0.0, 1.0]
    dlat = b[0] - a[0]
    dlon = b[1] - a[1]
    if dlat != 0.0:
        for i in range(rows + 1):
            t = (lat0 + i * cell_size - a[0]) / dlat
            if 0.0 < t < 1.0:
                ts.append(t)
    if dlon != 0.0:
        for j in range(cols + 1):
            t = (lon0 + j * cell_size - a[1]) / dlon
            if 0.0 < t < 1.0:
                ts.append(t)
    ts = sorted(set(ts))

    for t0, t1 in zip(ts[:-1], ts[1:]):
        if t1 - t0 <= 1e-15:
            continue
        p = (a[0] + t0 * dlat, a[1] + t0 * dlon)
        q = (a[0] + t1 * dlat, a[1] + t1 * dlon)
        mid_lat = 0.5 * (p[0] + q[0])
        mid_lon = 0.5 * (p[1] + q[1])
        row = math.floor((mid_lat - lat0) / cell_size)
        col = math.floor((mid_lon - lon0) / cell_size)
        if 0 <= row < rows and 0 <= col < cols:
            yield int(row), int(col), p, q


def path_segments(path: Sequence[tuple[float, float]]) -> Iterator[tuple[tuple[float, float], tuple[float, float]]]:
    """Consecutive vertex pairs of a polyline."""
    for i in range(len(path) - 1):
        yield tuple(path[i]), tuple(path[i + 1])


def path_length_km(path: Sequence[tuple[float, float]]) -> float:
    """Total equirectangular length of a polyline in km."""
    return sum(equirect_km(p, q) for p, q in path_segments(path))
