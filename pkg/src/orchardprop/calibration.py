"""Fitting orchard path-loss parameters to measured RSSI, and error statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import OrchardLayout, link_geometry
from .models import D0_M, ModelParams, RadioConfig, reference_pl0

# Relative determinant threshold for the 2x2 normal equations.
SINGULAR_RTOL = 1e-12


class CalibrationError(ValueError):
    pass


class RankDeficientError(CalibrationError):
    pass


class InsufficientDataError(CalibrationError):
    pass


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    residuals_db: tuple[float, ...]
    mse_db2: float
    rmse_db: float
    n_points: int


def one_slope_exponent(pr_d0_dbm: float, pr_d_dbm: float, d_m: float) -> float:
    """Path-loss exponent from received power at 1 m and at ``d_m`` meters."""
    if not d_m > D0_M:
        raise CalibrationError(f"need d_m > {D0_M} m, got {d_m}")
    return (pr_d0_dbm - pr_d_dbm) / (10.0 * math.log10(d_m / D0_M))


def error_stats(measured_dbm, modeled_dbm) -> tuple[float, float]:
    """Mean squared and root-mean-squared difference of paired values."""
    m = np.asarray(measured_dbm, dtype=float).ravel()
    p = np.asarray(modeled_dbm, dtype=float).ravel()
    if m.size != p.size:
        raise ValueError(f"length mismatch: {m.size} measured vs {p.size} modeled")
    if m.size == 0:
        raise ValueError("no values to compare")
    mse = float(np.mean((m - p) ** 2))
    return mse, math.sqrt(mse)


def design_matrix(dataset, layout: OrchardLayout, metric: str):
    """Per-waypoint ``(log10 d, N_can)`` columns, with d clamped to 1 m."""
    tx = dataset.tx
    logd, ncan = [], []
    for wp in dataset.waypoints:
        g = link_geometry(layout, tx, wp.position)
        logd.append(math.log10(max(g.distance(metric), D0_M)))
        ncan.append(g.n_canopies)
    return np.array(logd), np.array(ncan, dtype=float)


def _result(params: ModelParams, y, logd, ncan) -> FitResult:
    # Residuals are measured minus modeled RSSI, i.e. modeled minus measured loss.
    model = params.pl0_db + 10.0 * params.exponent * logd + params.canopy_loss_db * ncan
    res = model - y
    mse = float(np.mean(res ** 2))
    return FitResult(params, tuple(float(r) for r in res), mse, math.sqrt(mse), len(res))


def measured_path_loss(dataset, radio: RadioConfig | None = None) -> np.ndarray:
    radio = radio or dataset.radio
    return np.array([radio.tx_power_dbm - wp.mean_rssi_dbm for wp in dataset.waypoints])


def fit_canopy_model(dataset, layout: OrchardLayout, radio: RadioConfig | None = None,
                     metric: str = "manhattan", fit_exponent: bool = True,
                     exponent: float = 2.0, base: ModelParams | None = None) -> FitResult:
    """Least-squares fit of the one-slope-plus-canopy model.

    Solves ``PL_i - PL0 = 10 n log10(d_i) + L_can N_i`` with PL0 fixed at the
    1 m free-space loss. With ``fit_exponent=False`` only ``L_can`` is fitted
    and ``exponent`` is held. ``L_can`` is projected onto ``>= 0``; when the
    projection triggers, the exponent is re-solved alone.

    ``metric="manhattan"`` fits the direction-dependent model, ``"euclid"``
    the plantation multi-wall one.
    """
    radio = radio or dataset.radio
    base = base or ModelParams()
    if len(dataset.waypoints) < 2:
        raise InsufficientDataError(f"need >= 2 waypoints, got {len(dataset.waypoints)}")
    pl0 = reference_pl0(radio.freq_mhz)
    y = measured_path_loss(dataset, radio)
    logd, ncan = design_matrix(dataset, layout, metric)
    x1 = 10.0 * logd
    z = y - pl0

    if fit_exponent:
        a11, a12, a22 = x1 @ x1, x1 @ ncan, ncan @ ncan
        b1, b2 = x1 @ z, ncan @ z
        det = a11 * a22 - a12 * a12
        if a11 == 0 or a22 == 0 or det <= SINGULAR_RTOL * a11 * a22:
            raise RankDeficientError(
                "design matrix is singular: distances and canopy counts do not "
                "separate the exponent from the per-canopy loss")
        n = (a22 * b1 - a12 * b2) / det
        l_can = (a11 * b2 - a12 * b1) / det
        if l_can < 0:
            l_can = 0.0
            n = b1 / a11
    else:
        a22 = ncan @ ncan
        if a22 == 0:
            raise RankDeficientError("no waypoint crosses a canopy; per-canopy loss is undetermined")
        n = exponent
        l_can = max(0.0, float(ncan @ (z - n * x1)) / a22)

    params = base.with_(pl0_db=pl0, exponent=float(n), canopy_loss_db=float(l_can))
    return _result(params, y, logd, ncan)


def evaluate_fit(dataset, layout: OrchardLayout, params: ModelParams,
                 radio: RadioConfig | None = None, metric: str = "manhattan") -> FitResult:
    """Residual report for fixed parameters (no fitting)."""
    if not dataset.waypoints:
        raise InsufficientDataError("dataset has no waypoints")
    y = measured_path_loss(dataset, radio)
    logd, ncan = design_matrix(dataset, layout, metric)
    return _result(params, y, logd, ncan)
