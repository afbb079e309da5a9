"""Receiver log ingestion and per-waypoint RSSI aggregation.

Packet log CSV: ``waypoint_id,timestamp,rssi_dbm``. Positions CSV:
``waypoint_id,x_m,y_m``. Malformed lines are reported, never silently dropped.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Mapping

from .geometry import OrchardLayout, Point2D, as_point
from .models import RadioConfig

LOG_HEADER = ("waypoint_id", "timestamp", "rssi_dbm")
POSITIONS_HEADER = ("waypoint_id", "x_m", "y_m")
RSSI_RANGE_DBM = (-160.0, 10.0)
DEFAULT_MIN_SAMPLES = 30


class LogFormatError(ValueError):
    pass


class UnknownWaypointError(KeyError):
    def __init__(self, ids):
        self.ids = sorted(ids)
        super().__init__(f"waypoints without a position: {', '.join(self.ids)}")


@dataclass(frozen=True)
class PacketRecord:
    waypoint_id: str
    timestamp: datetime
    rssi_dbm: float

    def __post_init__(self):
        if not self.waypoint_id:
            raise ValueError("empty waypoint_id")
        lo, hi = RSSI_RANGE_DBM
        if not (lo <= self.rssi_dbm <= hi):
            raise ValueError(f"rssi {self.rssi_dbm} dBm outside [{lo}, {hi}]")


@dataclass(frozen=True)
class Diagnostic:
    line: int | None
    message: str
    waypoint_id: str | None = None
    n_records: int = 0

    def __str__(self):
        where = f"line {self.line}: " if self.line is not None else ""
        return where + self.message


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text)


def _check_header(row, expected, what):
    if row is None or tuple(c.strip() for c in row) != expected:
        raise LogFormatError(f"{what}: expected header {','.join(expected)!r}, got {row!r}")


def parse_log(stream: Iterable[str]) -> tuple[list[PacketRecord], list[Diagnostic]]:
    """Parse a packet log. Returns records in input order and per-line diagnostics.

    Raises :class:`LogFormatError` when the header is missing or wrong.
    """
    reader = csv.reader(stream)
    _check_header(next(reader, None), LOG_HEADER, "packet log")
    records, diags = [], []
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            diags.append(Diagnostic(lineno, f"expected 3 fields, got {len(row)}"))
            continue
        wp, ts, rssi = (c.strip() for c in row)
        try:
            value = float(rssi)
            if not math.isfinite(value):
                raise ValueError(f"non-finite rssi {rssi!r}")
            records.append(PacketRecord(wp, parse_timestamp(ts), value))
        except ValueError as exc:
            diags.append(Diagnostic(lineno, str(exc), wp or None))
    return records, diags


def read_positions(stream: Iterable[str]) -> dict[str, Point2D]:
    reader = csv.reader(stream)
    _check_header(next(reader, None), POSITIONS_HEADER, "positions file")
    out = {}
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        try:
            wp, x, y = (c.strip() for c in row)
            if not wp:
                raise ValueError("empty waypoint_id")
            if wp in out:
                raise ValueError(f"duplicate waypoint {wp!r}")
            out[wp] = Point2D(float(x), float(y))
        except ValueError as exc:
            raise LogFormatError(f"positions file line {reader.line_num}: {exc}") from exc
    return out


def round_half_away(x: float) -> float:
    return math.copysign(math.floor(abs(x) + 0.5), x)


@dataclass(frozen=True)
class Waypoint:
    waypoint_id: str
    position: Point2D
    mean_rssi_dbm: float
    n_samples: int
    raw_min_dbm: float
    raw_max_dbm: float


@dataclass
class MeasurementDataset:
    waypoints: list[Waypoint]
    radio: RadioConfig = field(default_factory=RadioConfig)
    layout_ref: OrchardLayout | None = None
    tx: Point2D | None = None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def positions(self) -> list[Point2D]:
        return [w.position for w in self.waypoints]

    def rssi(self) -> list[float]:
        return [w.mean_rssi_dbm for w in self.waypoints]


def aggregate_waypoints(records: Iterable[PacketRecord], positions: Mapping[str, Point2D],
                        min_samples: int = DEFAULT_MIN_SAMPLES,
                        radio: RadioConfig | None = None,
                        layout: OrchardLayout | None = None,
                        tx=None) -> MeasurementDataset:
    """Average the packets of each waypoint into one RSSI value.

    The mean is rounded half away from zero to whole dBm. If non-integer raw
    samples push the rounded value outside the raw envelope it is clipped back
    into ``[raw_min, raw_max]``. Waypoints with fewer than ``min_samples``
    packets are left out and reported. Waypoints are ordered by id.
    """
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    groups: dict[str, list[float]] = defaultdict(list)
    for r in records:
        groups[r.waypoint_id].append(r.rssi_dbm)
    missing = set(groups) - set(positions)
    if missing:
        raise UnknownWaypointError(missing)

    waypoints, diags = [], []
    for wp_id in sorted(groups):
        vals = sorted(groups[wp_id])
        if len(vals) < min_samples:
            diags.append(Diagnostic(None, f"waypoint {wp_id} has {len(vals)} samples "
                                          f"(< {min_samples}); excluded", wp_id, len(vals)))
            continue
        lo, hi = vals[0], vals[-1]
        mean = math.fsum(vals) / len(vals)
        rounded = min(max(round_half_away(mean), lo), hi)
        waypoints.append(Waypoint(wp_id, as_point(positions[wp_id]), rounded, len(vals), lo, hi))
    return MeasurementDataset(waypoints, radio or RadioConfig(), layout,
                              as_point(tx) if tx is not None else None, diags)


def dataset_from_rssi(points, rssi_dbm, radio: RadioConfig | None = None,
                      layout: OrchardLayout | None = None, tx=None,
                      n_samples: int = 1) -> MeasurementDataset:
    """Build a dataset straight from per-waypoint values (synthetic studies)."""
    wps = [Waypoint(f"wp{i:04d}", as_point(p), float(v), n_samples, float(v), float(v))
           for i, (p, v) in enumerate(zip(points, rssi_dbm))]
    return MeasurementDataset(wps, radio or RadioConfig(), layout,
                              as_point(tx) if tx is not None else None)
