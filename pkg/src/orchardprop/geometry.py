"""Orchard grid geometry: tree positions, link displacements, canopy interception."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Tangent segments (distance == r_c within this many meters) count as intersecting.
TANGENT_TOL_M = 1e-9
# Snap tolerance, in units of spacing, when locating endpoints on grid lines.
_GRID_SNAP = 1e-9


@dataclass(frozen=True)
class Point2D:
    x_m: float
    y_m: float

    def __post_init__(self):
        if not (math.isfinite(self.x_m) and math.isfinite(self.y_m)):
            raise ValueError(f"non-finite coordinates: ({self.x_m}, {self.y_m})")

    def __iter__(self):
        yield self.x_m
        yield self.y_m

    def shifted(self, dx: float, dy: float) -> Point2D:
        return Point2D(self.x_m + dx, self.y_m + dy)


def as_point(p) -> Point2D:
    if isinstance(p, Point2D):
        return p
    x, y = p
    return Point2D(float(x), float(y))


@dataclass(frozen=True)
class OrchardLayout:
    """Regular tree grid.

    Tree (i, j) sits at ``origin + (j * col_spacing_m, i * row_spacing_m)``:
    rows run along x, so ``row_spacing_m`` is the gap between rows (along y)
    and ``col_spacing_m`` the gap between trees within a row (along x).
    Canopies are discs of a single representative radius and may overlap.
    """

    rows: int
    cols: int
    row_spacing_m: float
    col_spacing_m: float
    canopy_radius_m: float
    origin: Point2D = field(default_factory=lambda: Point2D(0.0, 0.0))

    def __post_init__(self):
        object.__setattr__(self, "origin", as_point(self.origin))
        if int(self.rows) != self.rows or int(self.cols) != self.cols:
            raise ValueError("rows and cols must be integers")
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"need rows >= 1 and cols >= 1, got {self.rows}x{self.cols}")
        for name in ("row_spacing_m", "col_spacing_m", "canopy_radius_m"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")

    @property
    def extent_m(self) -> tuple[float, float]:
        """Width and height spanned by the tree centers."""
        return ((self.cols - 1) * self.col_spacing_m, (self.rows - 1) * self.row_spacing_m)

    @property
    def n_trees(self) -> int:
        return self.rows * self.cols

    def translated(self, dx: float, dy: float) -> OrchardLayout:
        return OrchardLayout(self.rows, self.cols, self.row_spacing_m, self.col_spacing_m,
                             self.canopy_radius_m, self.origin.shifted(dx, dy))

    def tree_array(self) -> np.ndarray:
        """Tree centers as a read-only ``(rows*cols, 2)`` array, row-major."""
        cached = self.__dict__.get("_trees")
        if cached is None:
            ii, jj = np.meshgrid(np.arange(self.rows), np.arange(self.cols), indexing="ij")
            xs = self.origin.x_m + jj.ravel() * self.col_spacing_m
            ys = self.origin.y_m + ii.ravel() * self.row_spacing_m
            cached = np.column_stack([xs, ys]).astype(float)
            cached.flags.writeable = False
            object.__setattr__(self, "_trees", cached)
        return cached


# Olive orchard surveyed near Palermo: 7.12 m square planting, r_c = 4.16 m,
# 43 m x 38 m field. 7 trees per row and 6 rows fit that footprint; the origin
# centres the tree block inside the field rectangle [0, 43] x [0, 38].
PALERMO_SPACING_M = 7.12
PALERMO_CANOPY_RADIUS_M = 4.16
PALERMO_FIELD_M = (43.0, 38.0)


def palermo_layout() -> OrchardLayout:
    rows, cols = 6, 7
    ox = (PALERMO_FIELD_M[0] - (cols - 1) * PALERMO_SPACING_M) / 2
    oy = (PALERMO_FIELD_M[1] - (rows - 1) * PALERMO_SPACING_M) / 2
    return OrchardLayout(rows, cols, PALERMO_SPACING_M, PALERMO_SPACING_M,
                         PALERMO_CANOPY_RADIUS_M, Point2D(ox, oy))


@dataclass(frozen=True)
class LinkGeometry:
    dx_m: float
    dy_m: float
    d_euclid_m: float
    d_manhattan_m: float
    row_offset: int
    col_offset: int
    n_canopies: int

    def distance(self, metric: str) -> float:
        if metric == "euclid":
            return self.d_euclid_m
        if metric == "manhattan":
            return self.d_manhattan_m
        raise ValueError(f"unknown distance metric {metric!r}")


def tree_positions(layout: OrchardLayout) -> list[Point2D]:
    return [Point2D(float(x), float(y)) for x, y in layout.tree_array()]


def _lines_crossed(a: float, b: float, offset: float, spacing: float) -> int:
    # Number of integers k with lo < offset + k*spacing <= hi.
    lo, hi = sorted(((a - offset) / spacing, (b - offset) / spacing))
    return int(math.floor(hi + _GRID_SNAP) - math.floor(lo + _GRID_SNAP))


def segment_disc_distances(centers: np.ndarray, a, b) -> np.ndarray:
    """Distance from each center to the closed segment a-b."""
    ax, ay = a
    bx, by = b
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    vx, vy = bx - ax, by - ay
    wx, wy = c[:, 0] - ax, c[:, 1] - ay
    seg2 = vx * vx + vy * vy
    if seg2 == 0.0:
        return np.hypot(wx, wy)
    t = np.clip((wx * vx + wy * vy) / seg2, 0.0, 1.0)
    return np.hypot(wx - t * vx, wy - t * vy)


def count_canopy_intersections(layout: OrchardLayout, tx, rx) -> int:
    """Count trees whose canopy disc touches the straight tx-rx segment.

    Each tree counts once however long the chord. A degenerate segment
    (tx == rx) counts the canopies containing that point.
    """
    d = segment_disc_distances(layout.tree_array(), as_point(tx), as_point(rx))
    return int(np.count_nonzero(d <= layout.canopy_radius_m + TANGENT_TOL_M))


def link_geometry(layout: OrchardLayout, tx, rx) -> LinkGeometry:
    tx, rx = as_point(tx), as_point(rx)
    dx = rx.x_m - tx.x_m
    dy = rx.y_m - tx.y_m
    return LinkGeometry(
        dx_m=dx,
        dy_m=dy,
        d_euclid_m=math.hypot(dx, dy),
        d_manhattan_m=abs(dx) + abs(dy),
        row_offset=_lines_crossed(tx.y_m, rx.y_m, layout.origin.y_m, layout.row_spacing_m),
        col_offset=_lines_crossed(tx.x_m, rx.x_m, layout.origin.x_m, layout.col_spacing_m),
        n_canopies=count_canopy_intersections(layout, tx, rx),
    )
