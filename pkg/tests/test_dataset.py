import io
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from orchardprop.dataset import (LogFormatError, PacketRecord, UnknownWaypointError,
                                 aggregate_waypoints, parse_log, parse_timestamp, read_positions,
                                 round_half_away)
from orchardprop.geometry import Point2D

HEADER = "waypoint_id,timestamp,rssi_dbm\n"
TS = parse_timestamp("2025-10-02T10:15:00Z")
POS = {"wp01": Point2D(1, 2), "wp02": Point2D(3, 4)}


def recs(wp, values):
    return [PacketRecord(wp, TS, v) for v in values]


def test_parse_one_line():
    records, diags = parse_log(io.StringIO(HEADER + "wp01,2025-10-02T10:15:00Z,-87\n"))
    assert diags == []
    assert len(records) == 1
    r = records[0]
    assert (r.waypoint_id, r.rssi_dbm) == ("wp01", -87)
    assert r.timestamp.isoformat() == "2025-10-02T10:15:00+00:00"


def test_parse_empty_body():
    assert parse_log(io.StringIO(HEADER)) == ([], [])


def test_parse_bad_rssi_reports_line():
    records, diags = parse_log(io.StringIO(HEADER + "wp01,2025-10-02T10:15:00Z,abc\n"))
    assert records == []
    assert len(diags) == 1 and diags[0].line == 2
    assert "line 2" in str(diags[0])


@pytest.mark.parametrize("line", [
    "wp01,not-a-time,-80", "wp01,2025-10-02T10:15:00Z,-200", ",2025-10-02T10:15:00Z,-80",
    "wp01,2025-10-02T10:15:00Z", "wp01,2025-10-02T10:15:00Z,nan",
])
def test_parse_rejections(line):
    records, diags = parse_log(io.StringIO(HEADER + line + "\n"))
    assert records == [] and len(diags) == 1


def test_parse_keeps_order_and_good_lines():
    text = HEADER + "b,2025-10-02T10:15:00Z,-80\nbad\na,2025-10-02T10:15:01Z,-81\n"
    records, diags = parse_log(io.StringIO(text))
    assert [r.waypoint_id for r in records] == ["b", "a"]
    assert [d.line for d in diags] == [3]


def test_missing_header_is_fatal():
    with pytest.raises(LogFormatError):
        parse_log(io.StringIO("wp01,2025-10-02T10:15:00Z,-87\n"))
    with pytest.raises(LogFormatError):
        parse_log(io.StringIO(""))


def test_read_positions():
    pos = read_positions(io.StringIO("waypoint_id,x_m,y_m\nwp01,1.5,2\n"))
    assert pos == {"wp01": Point2D(1.5, 2.0)}
    with pytest.raises(LogFormatError):
        read_positions(io.StringIO("waypoint_id,x_m,y_m\nwp01,1.5,2\nwp01,3,3\n"))


def test_constant_thirty():
    ds = aggregate_waypoints(recs("wp01", [-80] * 30), POS)
    (w,) = ds.waypoints
    assert (w.mean_rssi_dbm, w.n_samples, w.raw_min_dbm, w.raw_max_dbm) == (-80, 30, -80, -80)


def test_split_samples():
    ds = aggregate_waypoints(recs("wp01", [-80] * 15 + [-82] * 15), POS)
    assert ds.waypoints[0].mean_rssi_dbm == -81


def test_rounding_half_away_from_zero():
    assert round_half_away(-80.5) == -81
    assert round_half_away(-80.49) == -80
    assert round_half_away(2.5) == 3
    ds = aggregate_waypoints(recs("wp01", [-80, -81] * 15), POS)  # mean -80.5
    assert ds.waypoints[0].mean_rssi_dbm == -81


def test_below_min_samples_excluded():
    ds = aggregate_waypoints(recs("wp01", [-80] * 29) + recs("wp02", [-70] * 30), POS)
    assert [w.waypoint_id for w in ds.waypoints] == ["wp02"]
    assert len(ds.diagnostics) == 1
    assert ds.diagnostics[0].waypoint_id == "wp01" and ds.diagnostics[0].n_records == 29


def test_unknown_waypoint():
    with pytest.raises(UnknownWaypointError) as exc:
        aggregate_waypoints(recs("wpX", [-80] * 30) + recs("wpY", [-80]), POS)
    assert exc.value.ids == ["wpX", "wpY"]


def test_envelope_clip_for_fractional_samples():
    ds = aggregate_waypoints(recs("wp01", [-80.4] * 30), POS)
    w = ds.waypoints[0]
    assert w.raw_min_dbm <= w.mean_rssi_dbm <= w.raw_max_dbm


samples = st.lists(st.integers(-140, 0), min_size=1, max_size=60)


@given(samples, samples, st.randoms(use_true_random=False))
def test_permutation_invariance_and_accounting(a, b, rnd):
    records = recs("wp01", a) + recs("wp02", b)
    shuffled = records[:]
    rnd.shuffle(shuffled)
    d1 = aggregate_waypoints(records, POS, min_samples=5)
    d2 = aggregate_waypoints(shuffled, POS, min_samples=5)
    assert d1.waypoints == d2.waypoints
    for w in d1.waypoints:
        assert w.raw_min_dbm <= w.mean_rssi_dbm <= w.raw_max_dbm
    kept = sum(w.n_samples for w in d1.waypoints)
    excluded = sum(d.n_records for d in d1.diagnostics)
    assert kept + excluded == len(records)


def test_total_record_accounting_with_parse_rejects():
    lines = [HEADER.strip()]
    lines += [f"wp01,2025-10-02T10:15:{i:02d}Z,-80" for i in range(30)]
    lines += [f"wp02,2025-10-02T10:16:{i:02d}Z,-75" for i in range(10)]
    lines += ["wp01,2025-10-02T10:17:00Z,oops", "wp02,bad,-70"]
    records, diags = parse_log(io.StringIO("\n".join(lines) + "\n"))
    ds = aggregate_waypoints(records, POS)
    total = len(lines) - 1
    assert total == (sum(w.n_samples for w in ds.waypoints) + len(diags)
                     + sum(d.n_records for d in ds.diagnostics))


def test_permutation_100_shuffles():
    rng = random.Random(3)
    records = [PacketRecord(f"wp0{1 + i % 2}", TS, rng.randint(-95, -60)) for i in range(60)]
    ref = aggregate_waypoints(records, POS).waypoints
    for _ in range(100):
        rng.shuffle(records)
        assert aggregate_waypoints(records, POS).waypoints == ref
