"""Path-loss models for row-structured orchards and the RSSI link budget.

Every deterministic model returns path loss in dB. Distances below the
1 m reference distance are clamped to 1 m unless ``clamp=False`` is passed,
in which case they raise :class:`DomainError`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import LinkGeometry, OrchardLayout, as_point, link_geometry

D0_M = 1.0
SPEED_OF_LIGHT_M_S = 299_792_458.0
ITU_MAX_DISTANCE_M = 400.0
MODEL_IDS = ("fspl", "itu", "multiwall", "pmw", "flog", "proposed")

# Distance metric each model uses unless the caller overrides it.
DEFAULT_METRIC = {
    "fspl": "euclid",
    "itu": "euclid",
    "multiwall": "euclid",
    "pmw": "euclid",
    "flog": "euclid",
    "proposed": "manhattan",
}


class DomainError(ValueError):
    """Input outside the domain a model is defined on."""


class ItuRangeWarning(UserWarning):
    """Vegetation loss evaluated beyond its reported 400 m validity range."""


def reference_pl0(freq_mhz: float) -> float:
    """Free-space loss at the 1 m reference distance, in dB."""
    if not freq_mhz > 0:
        raise DomainError(f"freq_mhz must be positive, got {freq_mhz}")
    return 20.0 * math.log10(freq_mhz) - 27.55


@dataclass(frozen=True)
class RadioConfig:
    """Radio link settings. ``tx_power_dbm`` is the effective transmit power
    with fixed antenna and front-end offsets folded in."""

    freq_mhz: float = 868.0
    tx_power_dbm: float = 21.0
    sensitivity_dbm: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.freq_mhz) and self.freq_mhz > 0):
            raise ValueError(f"freq_mhz must be positive, got {self.freq_mhz}")
        if not math.isfinite(self.tx_power_dbm):
            raise ValueError("tx_power_dbm must be finite")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / (self.freq_mhz * 1e6)


@dataclass(frozen=True)
class ModelParams:
    pl0_db: float = field(default_factory=lambda: reference_pl0(868.0))
    exponent: float = 2.0
    canopy_loss_db: float = 0.0
    wall_losses_db: tuple[float, ...] = ()
    flog_alpha: float = 2.0
    flog_beta: float = 2.0
    flog_gamma: float = 2.0
    shadow_sigma_db: float = 0.0
    d0_m: float = D0_M

    def __post_init__(self):
        object.__setattr__(self, "wall_losses_db", tuple(float(w) for w in self.wall_losses_db))
        if self.d0_m != D0_M:
            raise ValueError("reference distance d0_m is fixed at 1 m")
        if self.canopy_loss_db < 0:
            raise ValueError("canopy_loss_db must be >= 0")
        if self.shadow_sigma_db < 0:
            raise ValueError("shadow_sigma_db must be >= 0")
        vals = (self.pl0_db, self.exponent, self.canopy_loss_db, self.flog_alpha,
                self.flog_beta, self.flog_gamma, self.shadow_sigma_db, *self.wall_losses_db)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("model parameters must be finite")

    def with_(self, **changes) -> ModelParams:
        return replace(self, **changes)


@dataclass(frozen=True)
class FfzFractions:
    p_open: float
    p_foliage: float
    p_ground: float

    def __post_init__(self):
        ps = (self.p_open, self.p_foliage, self.p_ground)
        if any(not (0.0 <= p <= 1.0) for p in ps):
            raise ValueError(f"fractions must lie in [0, 1], got {ps}")
        if abs(sum(ps) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {sum(ps)!r}")


def _distance(d_m, clamp: bool, floor: float = D0_M):
    d = np.asarray(d_m, dtype=float)
    if not np.all(np.isfinite(d)):
        raise DomainError("distance must be finite")
    if clamp:
        d = np.maximum(d, floor)
    elif np.any(d < floor):
        raise DomainError(f"distance below {floor} m with clamping disabled")
    return d if d.ndim else float(d)


def _log10(d):
    return np.log10(d) if isinstance(d, np.ndarray) else math.log10(d)


def fspl(freq_mhz: float, d_m, clamp: bool = True):
    """Free-space path loss (dB) with frequency in MHz and distance in m."""
    if not freq_mhz > 0:
        raise DomainError(f"freq_mhz must be positive, got {freq_mhz}")
    d = _distance(d_m, clamp)
    return -27.55 + 20.0 * math.log10(freq_mhz) + 20.0 * _log10(d)


def itu_vegetation_loss(freq_mhz: float, d_m):
    """Excess foliage loss 0.2 f^0.3 d^0.6 (dB).

    Not clamped: zero distance gives zero loss. Issues
    :class:`ItuRangeWarning` for d >= 400 m.
    """
    d = np.asarray(d_m, dtype=float)
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise DomainError("vegetation depth must be finite and >= 0")
    if np.any(d >= ITU_MAX_DISTANCE_M):
        warnings.warn("ITU-R vegetation term used beyond 400 m", ItuRangeWarning, stacklevel=2)
    loss = 0.2 * freq_mhz ** 0.3 * d ** 0.6
    return loss if loss.ndim else float(loss)


def itu_total(freq_mhz: float, d_m, clamp: bool = True):
    d = _distance(d_m, clamp)
    return fspl(freq_mhz, d, clamp) + itu_vegetation_loss(freq_mhz, d)


def multiwall(params: ModelParams, d_m, wall_losses_db=None, clamp: bool = True):
    """Log-distance loss at 20 dB/decade plus the sum of discrete obstacle losses.

    ``wall_losses_db`` defaults to ``params.wall_losses_db``.
    """
    walls = params.wall_losses_db if wall_losses_db is None else wall_losses_db
    walls = np.asarray(walls, dtype=float)
    if not np.all(np.isfinite(walls)):
        raise DomainError("wall losses must be finite")
    d = _distance(d_m, clamp)
    return params.pl0_db + 20.0 * _log10(d) + float(walls.sum())


def pmw(params: ModelParams, d_m, n_canopies, clamp: bool = True):
    """Plantation multi-wall: one-slope loss plus a fixed loss per crossed canopy."""
    n = np.asarray(n_canopies)
    if np.any(n < 0):
        raise DomainError("n_canopies must be >= 0")
    d = _distance(d_m, clamp)
    out = params.pl0_db + 10.0 * params.exponent * _log10(d) + params.canopy_loss_db * n
    return out if np.ndim(out) else float(out)


def proposed_pl(params: ModelParams, geom: LinkGeometry, metric: str = "manhattan",
                clamp: bool = True) -> float:
    """Direction-dependent orchard loss.

    The distance term runs over the grid-aligned (Manhattan) separation, so two
    links of equal straight-line length but different orientation differ; the
    canopy term counts crowns cut by the straight Tx-Rx segment. ``metric`` is
    swappable for experimentation.
    """
    return pmw(params, geom.distance(metric), geom.n_canopies, clamp)


def flog_exponent(fr: FfzFractions, alpha: float, beta: float, gamma: float) -> float:
    return fr.p_open * alpha + fr.p_foliage * beta + fr.p_ground * gamma


def flog_pl(params: ModelParams, fr: FfzFractions, d_m, shadow_db: float = 0.0,
            clamp: bool = True):
    n = flog_exponent(fr, params.flog_alpha, params.flog_beta, params.flog_gamma)
    d = _distance(d_m, clamp, params.d0_m)
    return params.pl0_db + 10.0 * n * _log10(d / params.d0_m) + shadow_db


def ffz_fractions(layout: OrchardLayout, tx, tx_h_m: float, rx, rx_h_m: float,
                  freq_mhz: float, n_samples: int = 2000, seed: int = 0,
                  canopy_center_height_m: float = 2.5) -> FfzFractions:
    """Monte-Carlo share of the first Fresnel ellipsoid in open air, foliage and ground.

    Points are drawn uniformly over the ellipsoid volume: the axial position
    follows the cross-section area, which is proportional to s(D - s), i.e. a
    Beta(2, 2) law, and the radial offset is uniform over the local disc.
    Canopies are spheres of radius r_c centred ``canopy_center_height_m`` above
    each tree. Ground takes precedence over foliage.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if tx_h_m < 0 or rx_h_m < 0:
        raise ValueError("antenna heights must be >= 0")
    tx, rx = as_point(tx), as_point(rx)
    a = np.array([tx.x_m, tx.y_m, tx_h_m], dtype=float)
    b = np.array([rx.x_m, rx.y_m, rx_h_m], dtype=float)
    axis = b - a
    length = float(np.linalg.norm(axis))
    if length == 0.0:
        raise DomainError("degenerate link: tx and rx coincide")
    u = axis / length
    # Any two unit vectors orthogonal to the link axis.
    helper = np.array([0.0, 0.0, 1.0]) if abs(u[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(u, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)

    lam = SPEED_OF_LIGHT_M_S / (freq_mhz * 1e6)
    rng = np.random.default_rng(seed)
    s = rng.beta(2.0, 2.0, n_samples) * length
    r_f = np.sqrt(lam * s * (length - s) / length)
    rho = r_f * np.sqrt(rng.random(n_samples))
    phi = rng.random(n_samples) * 2.0 * np.pi
    pts = (a + s[:, None] * u
           + (rho * np.cos(phi))[:, None] * e1
           + (rho * np.sin(phi))[:, None] * e2)

    ground = pts[:, 2] <= 0.0
    trees = layout.tree_array()
    centers = np.column_stack([trees, np.full(len(trees), canopy_center_height_m)])
    r2 = layout.canopy_radius_m ** 2
    foliage = np.zeros(n_samples, dtype=bool)
    for c in centers:
        foliage |= np.sum((pts - c) ** 2, axis=1) <= r2
    foliage &= ~ground
    n_ground = int(ground.sum())
    n_foliage = int(foliage.sum())
    n_open = n_samples - n_ground - n_foliage
    return FfzFractions(n_open / n_samples, n_foliage / n_samples, n_ground / n_samples)


def predict_rssi(model_pl_db, radio: RadioConfig):
    return radio.tx_power_dbm - model_pl_db


@dataclass(frozen=True)
class FlogOptions:
    """Vertical geometry for the FLog model; the other models ignore it."""

    tx_height_m: float = 1.2
    rx_height_m: float = 1.2
    canopy_center_height_m: float = 2.5
    n_samples: int = 1000
    seed: int = 0


def evaluate_pl(model_id: str, params: ModelParams, radio: RadioConfig,
                layout: OrchardLayout, tx, rx, metric: str | None = None,
                flog: FlogOptions | None = None, geom: LinkGeometry | None = None,
                clamp: bool = True) -> float:
    """Path loss of one link under the named model (deterministic, no shadowing).

    ``multiwall`` treats every intercepted canopy as one wall of
    ``canopy_loss_db`` on top of ``params.wall_losses_db``.
    """
    if model_id not in MODEL_IDS:
        raise ValueError(f"unknown model {model_id!r}; expected one of {', '.join(MODEL_IDS)}")
    metric = metric or DEFAULT_METRIC[model_id]
    if geom is None:
        geom = link_geometry(layout, tx, rx)
    d = geom.distance(metric)
    if model_id == "fspl":
        return float(fspl(radio.freq_mhz, d, clamp))
    if model_id == "itu":
        return float(itu_total(radio.freq_mhz, d, clamp))
    if model_id == "multiwall":
        walls = list(params.wall_losses_db) + [params.canopy_loss_db] * geom.n_canopies
        return float(multiwall(params, d, walls, clamp))
    if model_id == "pmw":
        return float(pmw(params, d, geom.n_canopies, clamp))
    if model_id == "proposed":
        return float(proposed_pl(params, geom, metric, clamp))
    flog = flog or FlogOptions()
    if d <= params.d0_m:
        # log term vanishes; the Fresnel volume is irrelevant.
        return float(flog_pl(params, FfzFractions(1.0, 0.0, 0.0), d, 0.0, clamp))
    fr = ffz_fractions(layout, tx, flog.tx_height_m, rx, flog.rx_height_m, radio.freq_mhz,
                       flog.n_samples, flog.seed, flog.canopy_center_height_m)
    return float(flog_pl(params, fr, d, 0.0, clamp))
