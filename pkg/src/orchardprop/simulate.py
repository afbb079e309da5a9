"""Spatial predictions: RSSI heatmaps, error maps, zigzag gateway runs, shadowing draws."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import error_stats
from .geometry import OrchardLayout, Point2D, as_point, link_geometry
from .models import (DEFAULT_METRIC, MODEL_IDS, FlogOptions, ModelParams, RadioConfig,
                     evaluate_pl, predict_rssi)

VALUE_KINDS = ("rssi_dbm", "error_db", "pl_db")


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    cell_size_m: float = 1.0
    origin: Point2D = field(default_factory=lambda: Point2D(0.0, 0.0))

    def __post_init__(self):
        object.__setattr__(self, "origin", as_point(self.origin))
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell per axis")
        if not self.cell_size_m > 0:
            raise ValueError("cell_size_m must be positive")

    @classmethod
    def covering(cls, layout: OrchardLayout, cell_size_m: float = 1.0,
                 margin_m: float = 0.0) -> GridSpec:
        """Smallest grid covering the tree block plus ``margin_m`` on every side."""
        w, h = layout.extent_m
        nx = max(1, math.ceil((w + 2 * margin_m) / cell_size_m - 1e-9))
        ny = max(1, math.ceil((h + 2 * margin_m) / cell_size_m - 1e-9))
        ox = layout.origin.x_m - margin_m - (nx * cell_size_m - w - 2 * margin_m) / 2
        oy = layout.origin.y_m - margin_m - (ny * cell_size_m - h - 2 * margin_m) / 2
        return cls(nx, ny, cell_size_m, Point2D(ox, oy))

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinate arrays of shape ``(ny, nx)``."""
        xs = self.origin.x_m + (np.arange(self.nx) + 0.5) * self.cell_size_m
        ys = self.origin.y_m + (np.arange(self.ny) + 0.5) * self.cell_size_m
        return np.meshgrid(xs, ys)

    def locate(self, p) -> tuple[int, int] | None:
        """``(row, col)`` of the cell whose center is nearest to ``p``.

        Points on a cell boundary go to the lower index. Returns None outside.
        """
        p = as_point(p)
        tx = (p.x_m - self.origin.x_m) / self.cell_size_m
        ty = (p.y_m - self.origin.y_m) / self.cell_size_m
        if not (0.0 <= tx <= self.nx and 0.0 <= ty <= self.ny):
            return None
        return max(math.ceil(ty - 1.0), 0), max(math.ceil(tx - 1.0), 0)


def palermo_grid(cell_size_m: float = 1.0) -> GridSpec:
    """Grid over the 43 m x 38 m surveyed field (pairs with ``palermo_layout``)."""
    return GridSpec(math.ceil(43.0 / cell_size_m), math.ceil(38.0 / cell_size_m), cell_size_m)


@dataclass
class HeatmapGrid:
    values: np.ndarray
    spec: GridSpec
    value_kind: str = "rssi_dbm"
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.spec.ny, self.spec.nx):
            raise ValueError(f"values shape {self.values.shape} != ({self.spec.ny}, {self.spec.nx})")
        if self.value_kind not in VALUE_KINDS:
            raise ValueError(f"unknown value_kind {self.value_kind!r}")
        if self.mask is None:
            self.mask = np.ones(self.values.shape, dtype=bool)
        self.mask = np.asarray(self.mask, dtype=bool)

    nx = property(lambda self: self.spec.nx)
    ny = property(lambda self: self.spec.ny)
    cell_size_m = property(lambda self: self.spec.cell_size_m)
    origin = property(lambda self: self.spec.origin)

    def valid_values(self) -> np.ndarray:
        return self.values[self.mask]

    def value_at(self, p) -> float:
        cell = self.spec.locate(p)
        if cell is None:
            raise ValueError(f"point {p} lies outside the grid")
        return float(self.values[cell])


def model_heatmap(layout: OrchardLayout, model_id: str, params: ModelParams,
                  radio: RadioConfig, tx, grid: GridSpec, metric: str | None = None,
                  flog: FlogOptions | None = None, value_kind: str = "rssi_dbm",
                  workers: int = 1) -> HeatmapGrid:
    """Evaluate a model at every cell center with the transmitter at ``tx``.

    Rows are evaluated independently (optionally on a thread pool) and placed
    by index, so the result does not depend on ``workers``. For FLog each cell
    gets its own Monte-Carlo seed derived from ``flog.seed`` and the cell index.
    """
    if model_id not in MODEL_IDS:
        raise ValueError(f"unknown model {model_id!r}; expected one of {', '.join(MODEL_IDS)}")
    if value_kind not in ("rssi_dbm", "pl_db"):
        raise ValueError("model heatmaps hold rssi_dbm or pl_db")
    tx = as_point(tx)
    metric = metric or DEFAULT_METRIC[model_id]
    flog = flog or FlogOptions()
    xs, ys = grid.centers()

    def row(i):
        out = np.empty(grid.nx)
        for j in range(grid.nx):
            cell_flog = replace(flog, seed=_cell_seed(flog.seed, i * grid.nx + j))
            out[j] = evaluate_pl(model_id, params, radio, layout, tx,
                                 Point2D(xs[i, j], ys[i, j]), metric, cell_flog)
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(grid.ny)))
    else:
        rows = [row(i) for i in range(grid.ny)]
    pl = np.vstack(rows)
    values = predict_rssi(pl, radio) if value_kind == "rssi_dbm" else pl
    return HeatmapGrid(values, grid, value_kind)


def _cell_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


@dataclass
class ErrorHeatmap:
    """Signed measured-minus-modeled map plus its summary statistics."""

    grid: HeatmapGrid
    measured_dbm: np.ndarray
    modeled_dbm: np.ndarray
    mse_db2: float
    rmse_db: float


def error_heatmap(measured, modeled: HeatmapGrid) -> ErrorHeatmap:
    """Point-wise measured minus modeled RSSI on the model's grid.

    Each waypoint is matched to the cell containing it; cells without a
    waypoint are masked. Two waypoints in one cell, or a waypoint off the grid,
    raise ``ValueError``.
    """
    if modeled.value_kind != "rssi_dbm":
        raise ValueError("error maps compare against an rssi_dbm heatmap")
    spec = modeled.spec
    values = np.zeros((spec.ny, spec.nx))
    mask = np.zeros((spec.ny, spec.nx), dtype=bool)
    meas, mod = [], []
    owner = {}
    for wp in measured.waypoints:
        cell = spec.locate(wp.position)
        if cell is None:
            raise ValueError(f"waypoint {wp.waypoint_id} at {tuple(wp.position)} is outside the grid")
        if cell in owner:
            raise ValueError(f"waypoints {owner[cell]} and {wp.waypoint_id} fall in the same cell {cell}")
        owner[cell] = wp.waypoint_id
        m = modeled.values[cell]
        values[cell] = wp.mean_rssi_dbm - m
        mask[cell] = True
        meas.append(wp.mean_rssi_dbm)
        mod.append(m)
    if not meas:
        raise ValueError("no measured waypoints")
    mse, rmse = error_stats(meas, mod)
    return ErrorHeatmap(HeatmapGrid(values, spec, "error_db", mask),
                        np.array(meas), np.array(mod), mse, rmse)


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple[Point2D, ...]
    dwell: tuple[int, ...]

    def __post_init__(self):
        wps = tuple(as_point(p) for p in self.waypoints)
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "dwell", tuple(int(d) for d in self.dwell))
        if len(wps) < 2:
            raise ValueError("a trajectory needs at least 2 waypoints")
        if len(self.dwell) != len(wps):
            raise ValueError("dwell must give one sample count per waypoint")
        for a, b in zip(wps, wps[1:]):
            if a == b:
                raise ValueError(f"consecutive waypoints coincide at {tuple(a)}")

    def __len__(self):
        return len(self.waypoints)


def zigzag_path(layout: OrchardLayout, waypoints_per_corridor: int, dwell: int = 30) -> Trajectory:
    """Boustrophedon sweep along the mid-line of each inter-row corridor.

    Corridor ``i`` lies at ``y = origin.y + (i + 0.5) * row_spacing``; even
    corridors run toward +x, odd ones back toward -x. Waypoints are evenly
    spaced between the first and last tree column.
    """
    if waypoints_per_corridor < 2:
        raise ValueError("need at least 2 waypoints per corridor")
    if layout.rows < 2:
        raise ValueError("a layout with fewer than 2 rows has no inter-row corridor")
    if layout.cols < 2:
        raise ValueError("a single-column layout gives zero-length corridors")
    x0 = layout.origin.x_m
    xs = np.linspace(x0, x0 + (layout.cols - 1) * layout.col_spacing_m, waypoints_per_corridor)
    pts = []
    for i in range(layout.rows - 1):
        y = layout.origin.y_m + (i + 0.5) * layout.row_spacing_m
        for x in (xs if i % 2 == 0 else xs[::-1]):
            pts.append(Point2D(float(x), float(y)))
    return Trajectory(tuple(pts), (dwell,) * len(pts))


def shadowing_sample(sigma_db: float, seed: int, index: int) -> float:
    """Zero-mean Gaussian shadowing draw keyed by ``(seed, index)``.

    Each draw comes from its own stream, so any sample can be reproduced
    alone and parallel evaluation order does not matter.
    """
    if sigma_db < 0:
        raise ValueError("sigma_db must be >= 0")
    if sigma_db == 0:
        return 0.0
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    return float(sigma_db * rng.standard_normal())


@dataclass(frozen=True)
class ProfilePoint:
    index: int
    x_m: float
    y_m: float
    distance_m: float
    rssi_dbm: float


def trajectory_rssi(traj: Trajectory, node, layout: OrchardLayout, model_id: str,
                    params: ModelParams, radio: RadioConfig, shadow_sigma_db: float = 0.0,
                    seed: int = 0, metric: str | None = None,
                    flog: FlogOptions | None = None) -> list[ProfilePoint]:
    """RSSI at each gateway waypoint from a fixed node.

    ``distance_m`` is the straight-line node-waypoint distance whatever metric
    the model uses.
    """
    node = as_point(node)
    out = []
    for k, wp in enumerate(traj.waypoints):
        geom = link_geometry(layout, node, wp)
        pl = evaluate_pl(model_id, params, radio, layout, node, wp, metric, flog, geom)
        rssi = predict_rssi(pl, radio) + shadowing_sample(shadow_sigma_db, seed, k)
        out.append(ProfilePoint(k, wp.x_m, wp.y_m, geom.d_euclid_m, float(rssi)))
    return out


# --- exports -------------------------------------------------------------

def heatmap_csv(hm: HeatmapGrid) -> str:
    """``x_m,y_m,value`` per valid cell (cell centers), full precision."""
    xs, ys = hm.spec.centers()
    lines = ["x_m,y_m,value"]
    for i in range(hm.ny):
        for j in range(hm.nx):
            if hm.mask[i, j]:
                lines.append(f"{float(xs[i, j])!r},{float(ys[i, j])!r},{float(hm.values[i, j])!r}")
    return "\n".join(lines) + "\n"


def heatmap_pgm(hm: HeatmapGrid, vmin: float | None = None, vmax: float | None = None) -> str:
    """ASCII P2 graymap, north up.

    Gray level ``round(255 * (v - vmin) / (vmax - vmin))`` clipped to 0..255,
    with vmin/vmax defaulting to the range of valid cells. Masked cells are 0.
    The header comment records the mapping.
    """
    valid = hm.valid_values()
    lo = float(vmin) if vmin is not None else (float(valid.min()) if valid.size else 0.0)
    hi = float(vmax) if vmax is not None else (float(valid.max()) if valid.size else lo)
    span = hi - lo
    if span > 0:
        g = np.rint(255.0 * (hm.values - lo) / span)
    else:
        g = np.full(hm.values.shape, 128.0)
    g = np.where(hm.mask, np.clip(g, 0, 255), 0).astype(int)[::-1]
    rows = [" ".join(str(v) for v in r) for r in g]
    header = ["P2", f"# {hm.value_kind}: gray = 255*(v - {lo!r})/({hi!r} - {lo!r})",
              f"{hm.nx} {hm.ny}", "255"]
    return "\n".join(header + rows) + "\n"


def profile_csv(profile: list[ProfilePoint]) -> str:
    lines = ["index,x_m,y_m,distance_m,rssi_dbm"]
    lines += [f"{p.index},{p.x_m!r},{p.y_m!r},{p.distance_m!r},{p.rssi_dbm!r}" for p in profile]
    return "\n".join(lines) + "\n"
