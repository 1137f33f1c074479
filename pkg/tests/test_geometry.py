import math

import pytest

from gridharden.geometry import (EARTH_RADIUS_KM, equirect_km, haversine_km,
                                 path_length_km, scaled_km, segment_cells)


def test_haversine_known_points():
    # one degree of latitude is ~111.2 km everywhere
    d = haversine_km((0.0, 0.0), (1.0, 0.0))
    assert d == pytest.approx(111.19, abs=0.1)


def test_haversine_symmetry_and_zero():
    a, b = (32.5, -97.1), (30.0, -95.0)
    assert haversine_km(a, b) == pytest.approx(haversine_km(b, a), rel=1e-12)
    assert haversine_km(a, a) == 0.0


def test_equirect_matches_haversine_for_short_segments():
    a, b = (31.0, -100.0), (31.01, -100.02)
    assert equirect_km(a, b) == pytest.approx(haversine_km(a, b), rel=1e-4)


def test_equirect_longitude_shrinks_with_latitude():
    near_equator = equirect_km((0.0, 0.0), (0.0, 1.0))
    at_60 = equirect_km((60.0, 0.0), (60.0, 1.0))
    assert at_60 == pytest.approx(near_equator * math.cos(math.radians(60.0)), rel=1e-3)


def test_segment_cells_straight_across():
    # grid: 1x3 cells of 1 degree, origin (0,0); horizontal path through row 0
    cells = list(segment_cells((0.5, 0.2), (0.5, 2.8), (0.0, 0.0), 1.0, (1, 3)))
    assert [(r, c) for r, c, _, _ in cells] == [(0, 0), (0, 1), (0, 2)]
    total = sum(abs(q[1] - p[1]) for _, _, p, q in cells)
    assert total == pytest.approx(2.6, rel=1e-12)


def test_segment_cells_diagonal():
    cells = list(segment_cells((0.0, 0.0), (2.0, 2.0), (0.0, 0.0), 1.0, (2, 2)))
    assert [(r, c) for r, c, _, _ in cells] == [(0, 0), (1, 1)]


def test_segment_cells_outside_grid_skipped():
    cells = list(segment_cells((5.0, 5.0), (6.0, 6.0), (0.0, 0.0), 1.0, (2, 2)))
    assert cells == []


def test_cell_scaled_lengths_are_additive():
    origin, size, shape = (0.0, 0.0), 0.5, (4, 4)
    a, b = (0.1, 0.1), (1.9, 1.7)
    def seg_len(p, q):
        total = 0.0
        for row, _, s, e in segment_cells(p, q, origin, size, shape):
            total += scaled_km(s, e, origin[0] + (row + 0.5) * size)
        return total
    whole = seg_len(a, b)
    # split at a point on the segment
    t = 0.4
    on_seg = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    assert seg_len(a, on_seg) + seg_len(on_seg, b) == pytest.approx(whole, rel=1e-12)


def test_path_length_sums_segments():
    path = [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
    assert path_length_km(path) == pytest.approx(
        equirect_km(path[0], path[1]) + equirect_km(path[1], path[2]), rel=1e-12)
