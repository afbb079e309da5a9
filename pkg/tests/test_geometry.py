import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orchardprop.geometry import (OrchardLayout, Point2D, count_canopy_intersections,
                                  link_geometry, palermo_layout, tree_positions)

from .oracles import brute_force_canopy_count

coord = st.floats(-60, 60, allow_nan=False)
points = st.tuples(coord, coord)


def test_single_tree_positions():
    lay = OrchardLayout(1, 1, 7.12, 7.12, 4.16)
    assert tree_positions(lay) == [Point2D(0.0, 0.0)]


def test_two_by_two_positions_row_major():
    lay = OrchardLayout(2, 2, 7.12, 7.12, 4.16)
    assert [tuple(p) for p in tree_positions(lay)] == [
        (0.0, 0.0), (7.12, 0.0), (0.0, 7.12), (7.12, 7.12)]


def test_position_count():
    assert len(tree_positions(OrchardLayout(3, 2, 5.0, 4.0, 1.0))) == 6


def test_palermo_fits_field():
    lay = palermo_layout()
    xy = lay.tree_array()
    assert lay.n_trees == 42
    assert xy[:, 0].min() > 0 and xy[:, 0].max() < 43
    assert xy[:, 1].min() > 0 and xy[:, 1].max() < 38
    assert lay.canopy_radius_m > lay.row_spacing_m / 2  # overlapping canopies allowed


@pytest.mark.parametrize("kw", [
    dict(rows=0), dict(cols=0), dict(row_spacing_m=0.0), dict(col_spacing_m=-1.0),
    dict(canopy_radius_m=0.0),
])
def test_layout_validation(kw):
    args = dict(rows=2, cols=2, row_spacing_m=7.12, col_spacing_m=7.12, canopy_radius_m=4.16)
    args.update(kw)
    with pytest.raises(ValueError):
        OrchardLayout(**args)


def test_point_rejects_nan():
    with pytest.raises(ValueError):
        Point2D(float("nan"), 0.0)


def test_link_345(table2_grid):
    g = link_geometry(table2_grid, (0, 0), (3, 4))
    assert g.d_euclid_m == pytest.approx(5.0)
    assert g.d_manhattan_m == pytest.approx(7.0)


def test_link_identity(table2_grid):
    g = link_geometry(table2_grid, (100, 100), (100, 100))
    assert (g.d_euclid_m, g.d_manhattan_m, g.row_offset, g.col_offset, g.n_canopies) == (0, 0, 0, 0, 0)


def test_link_two_rows_three_cols(table2_grid):
    tx = (0.0, 0.0)
    rx = (3 * 7.12, 2 * 7.12)
    g = link_geometry(table2_grid, tx, rx)
    assert g.d_manhattan_m == pytest.approx(5 * 7.12)
    assert (g.row_offset, g.col_offset) == (2, 3)


def test_offsets_off_grid(table2_grid):
    # Mid-corridor to mid-corridor two corridors up crosses two row lines.
    g = link_geometry(table2_grid, (1.0, 3.56), (1.0, 3.56 + 2 * 7.12))
    assert (g.row_offset, g.col_offset) == (2, 0)


def test_single_tree_crossing():
    lay = OrchardLayout(1, 1, 7.12, 7.12, 4.16)
    assert count_canopy_intersections(lay, (-10, 0), (10, 0)) == 1
    assert brute_force_canopy_count(lay.tree_array(), 4.16, (-10, 0), (10, 0)) == 1


def test_single_tree_miss():
    lay = OrchardLayout(1, 1, 7.12, 7.12, 4.16)
    assert count_canopy_intersections(lay, (-10, 5), (10, 5)) == 0
    assert brute_force_canopy_count(lay.tree_array(), 4.16, (-10, 5), (10, 5)) == 0


def test_tangent_counts():
    lay = OrchardLayout(1, 1, 7.12, 7.12, 4.16)
    assert count_canopy_intersections(lay, (-10, 4.16), (10, 4.16)) == 1


def test_degenerate_segment(table2_grid):
    assert count_canopy_intersections(table2_grid, (100, 100), (100, 100)) == 0
    assert count_canopy_intersections(table2_grid, (0.5, 0.5), (0.5, 0.5)) == 1


def test_endpoint_inside_canopy_counts():
    lay = OrchardLayout(1, 2, 7.12, 20.0, 4.16)
    # Starts inside tree 0's canopy and ends short of tree 1.
    assert count_canopy_intersections(lay, (1.0, 0.0), (10.0, 0.0)) == 1


def test_canopy_count_matches_sampling_oracle():
    rng = np.random.default_rng(7)
    for _ in range(200):
        lay = OrchardLayout(int(rng.integers(1, 6)), int(rng.integers(1, 6)),
                            rng.uniform(3, 10), rng.uniform(3, 10), rng.uniform(0.5, 5))
        a, b = rng.uniform(-10, 50, 2), rng.uniform(-10, 50, 2)
        assert count_canopy_intersections(lay, a, b) == brute_force_canopy_count(
            lay.tree_array(), lay.canopy_radius_m, a, b)


@given(points, points)
def test_metric_dominance(a, b):
    g = link_geometry(OrchardLayout(3, 3, 7.12, 7.12, 4.16), a, b)
    assert g.d_manhattan_m >= g.d_euclid_m - 1e-12
    small, big = sorted((abs(g.dx_m), abs(g.dy_m)))
    if small > 1e-6 * big:
        assert g.d_manhattan_m > g.d_euclid_m
    elif small == 0:
        assert g.d_manhattan_m == pytest.approx(g.d_euclid_m)


@given(points, points)
def test_symmetry(a, b):
    lay = OrchardLayout(4, 5, 7.12, 6.0, 4.16)
    g1, g2 = link_geometry(lay, a, b), link_geometry(lay, b, a)
    assert (g1.d_euclid_m, g1.d_manhattan_m) == pytest.approx((g2.d_euclid_m, g2.d_manhattan_m))
    assert (g1.row_offset, g1.col_offset, g1.n_canopies) == (g2.row_offset, g2.col_offset, g2.n_canopies)
    assert g1.n_canopies <= lay.n_trees


@settings(max_examples=200)
@given(points, points, st.tuples(st.integers(-50, 50), st.integers(-50, 50)))
def test_translation_invariance(a, b, shift):
    lay = OrchardLayout(4, 5, 7.12, 7.12, 4.16)
    sx, sy = shift[0] * 0.5, shift[1] * 0.25  # exactly representable shifts
    g1 = link_geometry(lay, a, b)
    g2 = link_geometry(lay.translated(sx, sy), (a[0] + sx, a[1] + sy), (b[0] + sx, b[1] + sy))
    assert (g1.row_offset, g1.col_offset, g1.n_canopies) == (g2.row_offset, g2.col_offset, g2.n_canopies)
    assert g1.d_euclid_m == pytest.approx(g2.d_euclid_m, abs=1e-9)
    assert g1.d_manhattan_m == pytest.approx(g2.d_manhattan_m, abs=1e-9)
    assert g1.dx_m == pytest.approx(g2.dx_m, abs=1e-9)


def test_on_grid_offsets_equal_rounded_ratio(table2_grid):
    for i in range(6):
        for j in range(7):
            g = link_geometry(table2_grid, (0, 0), (j * 7.12, i * 7.12))
            assert g.row_offset == i and g.col_offset == j
            assert g.d_manhattan_m == pytest.approx((i + j) * 7.12)
            assert g.d_euclid_m == pytest.approx(math.hypot(i, j) * 7.12)
