"""Command-line front end.

Every run is fixed by a JSON config file plus flags (flags win). The config
path defaults to ``$ORCHARDPROP_CONFIG`` when ``--config`` is not given.

Config schema (all sections optional)::

    {
      "layout": {"preset": "palermo"}
              | {"rows": 6, "cols": 7, "row_spacing_m": 7.12, "col_spacing_m": 7.12,
                 "canopy_radius_m": 4.16, "origin": [0.14, 1.2]},
      "radio":  {"freq_mhz": 868, "tx_power_dbm": 21, "sensitivity_dbm": null},
      "model":  {"id": "proposed", "metric": null,
                 "params": {"pl0_db": 31.22, "exponent": 2.0, "canopy_loss_db": 0.0,
                            "wall_losses_db": [], "flog_alpha": 2.0, "flog_beta": 2.0,
                            "flog_gamma": 2.0, "shadow_sigma_db": 0.0}},
      "grid":   {"preset": "palermo"} | {"nx": 43, "ny": 38, "cell_size_m": 1.0, "origin": [0, 0]}
              | {"cover": true, "cell_size_m": 1.0, "margin_m": 0.0},
      "flog":   {"tx_height_m": 1.2, "rx_height_m": 1.2, "canopy_center_height_m": 2.5,
                 "n_samples": 1000},
      "tx":     [3.7, 4.76],
      "seed":   0
    }

Failures print ``error: <CODE>: <message>`` on stderr and exit 1; files the
run had already written are removed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from . import calibration, dataset, geometry, models, simulate
from .geometry import OrchardLayout, Point2D

CONFIG_ENV = "ORCHARDPROP_CONFIG"
SYNTHETIC_START = datetime(2025, 10, 1, 10, 0, 0, tzinfo=timezone.utc)


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    layout: OrchardLayout = field(default_factory=geometry.palermo_layout)
    radio: models.RadioConfig = field(default_factory=models.RadioConfig)
    model_id: str = "proposed"
    params: models.ModelParams = field(default_factory=models.ModelParams)
    metric: str | None = None
    grid: simulate.GridSpec | None = None
    flog: models.FlogOptions = field(default_factory=models.FlogOptions)
    tx: Point2D | None = None
    seed: int = 0

    def grid_spec(self) -> simulate.GridSpec:
        return self.grid or simulate.GridSpec.covering(self.layout)


def _layout_from(d: dict) -> OrchardLayout:
    if d.get("preset") == "palermo":
        return geometry.palermo_layout()
    if "preset" in d:
        raise CliError("E_CONFIG", f"unknown layout preset {d['preset']!r}")
    return OrchardLayout(int(d["rows"]), int(d["cols"]), float(d["row_spacing_m"]),
                         float(d["col_spacing_m"]), float(d["canopy_radius_m"]),
                         Point2D(*d.get("origin", (0.0, 0.0))))


def _grid_from(d: dict, layout: OrchardLayout) -> simulate.GridSpec:
    if d.get("preset") == "palermo":
        return simulate.palermo_grid(float(d.get("cell_size_m", 1.0)))
    if d.get("cover"):
        return simulate.GridSpec.covering(layout, float(d.get("cell_size_m", 1.0)),
                                          float(d.get("margin_m", 0.0)))
    return simulate.GridSpec(int(d["nx"]), int(d["ny"]), float(d.get("cell_size_m", 1.0)),
                             Point2D(*d.get("origin", (0.0, 0.0))))


def load_config(path: str | None) -> RunConfig:
    raw: dict = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise CliError("E_CONFIG", f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise CliError("E_CONFIG", f"config {path} is not valid JSON: {exc}") from None
    try:
        cfg = RunConfig()
        if "layout" in raw:
            cfg.layout = _layout_from(raw["layout"])
        if "radio" in raw:
            cfg.radio = models.RadioConfig(**raw["radio"])
        m = raw.get("model", {})
        cfg.model_id = m.get("id", cfg.model_id)
        cfg.metric = m.get("metric")
        p = dict(m.get("params", {}))
        if "pl0_db" not in p:
            p["pl0_db"] = models.reference_pl0(cfg.radio.freq_mhz)
        cfg.params = models.ModelParams(**p)
        if "grid" in raw:
            cfg.grid = _grid_from(raw["grid"], cfg.layout)
        elif raw.get("layout", {"preset": "palermo"}).get("preset") == "palermo":
            cfg.grid = simulate.palermo_grid()
        if "flog" in raw:
            cfg.flog = models.FlogOptions(**raw["flog"])
        if raw.get("tx") is not None:
            cfg.tx = Point2D(*raw["tx"])
        cfg.seed = int(raw.get("seed", 0))
    except CliError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError("E_CONFIG", f"invalid config: {exc}") from None
    return cfg


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "metric", None):
        cfg.metric = args.metric
    if getattr(args, "model", None):
        cfg.model_id = args.model
    if getattr(args, "tx", None):
        cfg.tx = Point2D(*args.tx)
    cfg.flog = replace(cfg.flog, seed=cfg.seed)
    if cfg.model_id not in models.MODEL_IDS:
        raise CliError("E_MODEL", f"unknown model {cfg.model_id!r}")
    return cfg


def _require_tx(cfg: RunConfig) -> Point2D:
    if cfg.tx is None:
        raise CliError("E_CONFIG", "transmitter position missing: give --tx X Y or 'tx' in config")
    return cfg.tx


class Outputs:
    """Collects output files and writes them together; rolls back on failure."""

    def __init__(self):
        self.pending: list[tuple[Path, str]] = []
        self.written: list[Path] = []

    def add(self, path, text: str):
        if path:
            self.pending.append((Path(path), text))

    def commit(self):
        for path, text in self.pending:
            path.parent.mkdir(parents=True, exist_ok=True)
            self.written.append(path)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)

    def rollback(self):
        for path in self.written:
            try:
                path.unlink()
            except FileNotFoundError:
                pass


def _db(v: float) -> str:
    return f"{v:.2f}"


# --- subcommands ---------------------------------------------------------

def cmd_predict(cfg: RunConfig, args, out: Outputs):
    tx = _require_tx(cfg)
    rx = Point2D(*args.rx)
    geom = geometry.link_geometry(cfg.layout, tx, rx)
    pl = models.evaluate_pl(cfg.model_id, cfg.params, cfg.radio, cfg.layout, tx, rx,
                            cfg.metric, cfg.flog, geom)
    rssi = models.predict_rssi(pl, cfg.radio)
    print(f"model: {cfg.model_id}")
    print(f"metric: {cfg.metric or models.DEFAULT_METRIC[cfg.model_id]}")
    print(f"tx: {tx.x_m:.2f} {tx.y_m:.2f}")
    print(f"rx: {rx.x_m:.2f} {rx.y_m:.2f}")
    print(f"dx_m: {geom.dx_m:.2f}")
    print(f"dy_m: {geom.dy_m:.2f}")
    print(f"d_euclid_m: {geom.d_euclid_m:.2f}")
    print(f"d_manhattan_m: {geom.d_manhattan_m:.2f}")
    print(f"row_offset: {geom.row_offset}")
    print(f"col_offset: {geom.col_offset}")
    print(f"n_canopies: {geom.n_canopies}")
    print(f"pl_db: {_db(pl)}")
    print(f"rssi_dbm: {_db(rssi)}")


def cmd_heatmap(cfg: RunConfig, args, out: Outputs):
    if not (args.csv or args.pgm):
        raise CliError("E_USAGE", "heatmap needs --csv and/or --pgm")
    kind = "pl_db" if args.kind == "pl" else "rssi_dbm"
    hm = simulate.model_heatmap(cfg.layout, cfg.model_id, cfg.params, cfg.radio, _require_tx(cfg),
                                cfg.grid_spec(), cfg.metric, cfg.flog, kind, args.workers)
    out.add(args.csv, simulate.heatmap_csv(hm))
    out.add(args.pgm, simulate.heatmap_pgm(hm))
    v = hm.valid_values()
    print(f"{cfg.model_id} heatmap {hm.nx}x{hm.ny}: min {_db(v.min())} max {_db(v.max())} {kind}")


def _load_dataset(cfg: RunConfig, args) -> dataset.MeasurementDataset:
    try:
        with open(args.log, encoding="utf-8") as fh:
            records, diags = dataset.parse_log(fh)
        with open(args.positions, encoding="utf-8") as fh:
            positions = dataset.read_positions(fh)
        ds = dataset.aggregate_waypoints(records, positions, args.min_samples, cfg.radio,
                                         cfg.layout, _require_tx(cfg))
    except FileNotFoundError as exc:
        raise CliError("E_IO", f"cannot read {exc.filename}") from None
    except dataset.LogFormatError as exc:
        raise CliError("E_INPUT", str(exc)) from None
    except dataset.UnknownWaypointError as exc:
        raise CliError("E_INPUT", exc.args[0]) from None
    ds.diagnostics[:0] = diags
    for d in ds.diagnostics:
        print(f"warning: {d}", file=sys.stderr)
    if not ds.waypoints:
        raise CliError("E_INPUT", "no waypoint has enough samples")
    return ds


FIT_METRIC = {"proposed": "manhattan", "pmw": "euclid", "multiwall": "euclid"}


def cmd_evaluate(cfg: RunConfig, args, out: Outputs):
    ds = _load_dataset(cfg, args)
    model_ids = [m.strip() for m in args.models.split(",") if m.strip()]
    for m in model_ids:
        if m not in models.MODEL_IDS:
            raise CliError("E_MODEL", f"unknown model {m!r}")
    report = {"n_waypoints": len(ds.waypoints), "models": {}}
    print(f"{'model':<10} {'MSE (dB^2)':>11} {'RMSE (dB)':>10}")
    for m in model_ids:
        params = cfg.params
        model_id = m
        if args.fit and m in FIT_METRIC:
            fit = calibration.fit_canopy_model(ds, cfg.layout, cfg.radio, FIT_METRIC[m],
                                               base=cfg.params)
            params = fit.params
            # The fitted multi-wall is the free-exponent plantation form.
            model_id = "pmw" if m == "multiwall" else m
        metric = cfg.metric if m == cfg.model_id else None
        hm = simulate.model_heatmap(cfg.layout, model_id, params, cfg.radio, ds.tx,
                                    cfg.grid_spec(), metric, cfg.flog, workers=args.workers)
        err = simulate.error_heatmap(ds, hm)
        report["models"][m] = {"mse_db2": err.mse_db2, "rmse_db": err.rmse_db,
                               "params": _params_dict(params)}
        print(f"{m:<10} {_db(err.mse_db2):>11} {_db(err.rmse_db):>10}")
        if args.out_dir:
            out.add(Path(args.out_dir) / f"error_{m}.csv", simulate.heatmap_csv(err.grid))
            out.add(Path(args.out_dir) / f"error_{m}.pgm", simulate.heatmap_pgm(err.grid))
    if args.out_dir:
        out.add(Path(args.out_dir) / "report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")


def _params_dict(p: models.ModelParams) -> dict:
    d = asdict(p)
    d["wall_losses_db"] = list(p.wall_losses_db)
    return d


def cmd_calibrate(cfg: RunConfig, args, out: Outputs):
    ds = _load_dataset(cfg, args)
    metric = cfg.metric or "manhattan"
    fit_exp = args.exponent is None
    fit = calibration.fit_canopy_model(ds, cfg.layout, cfg.radio, metric, fit_exp,
                                       args.exponent if args.exponent is not None else 2.0,
                                       base=cfg.params)
    print(f"metric: {metric}")
    print(f"pl0_db: {_db(fit.params.pl0_db)}")
    print(f"exponent: {fit.params.exponent:.4f}")
    print(f"canopy_loss_db: {_db(fit.params.canopy_loss_db)}")
    print(f"mse_db2: {_db(fit.mse_db2)}")
    print(f"rmse_db: {_db(fit.rmse_db)}")
    print(f"n_points: {fit.n_points}")
    report = {"metric": metric, "fit_exponent": fit_exp, "params": _params_dict(fit.params),
              "mse_db2": fit.mse_db2, "rmse_db": fit.rmse_db, "n_points": fit.n_points,
              "residuals_db": {w.waypoint_id: r for w, r in zip(ds.waypoints, fit.residuals_db)}}
    out.add(args.out, json.dumps(report, indent=2, sort_keys=True) + "\n")


def cmd_trajectory(cfg: RunConfig, args, out: Outputs):
    node = Point2D(*args.node) if args.node else _require_tx(cfg)
    traj = simulate.zigzag_path(cfg.layout, args.per_corridor)
    sigma = cfg.params.shadow_sigma_db if args.sigma is None else args.sigma
    prof = simulate.trajectory_rssi(traj, node, cfg.layout, cfg.model_id, cfg.params, cfg.radio,
                                    sigma, cfg.seed, cfg.metric, cfg.flog)
    out.add(args.out, simulate.profile_csv(prof))
    best = max(prof, key=lambda p: p.rssi_dbm)
    worst = min(prof, key=lambda p: p.rssi_dbm)
    print(f"{len(prof)} waypoints; max {_db(best.rssi_dbm)} dBm at #{best.index}, "
          f"min {_db(worst.rssi_dbm)} dBm at #{worst.index}")


def synthetic_waypoints(cfg: RunConfig, mode: str, per_corridor: int) -> list[Point2D]:
    if mode == "zigzag":
        return list(simulate.zigzag_path(cfg.layout, per_corridor).waypoints)
    xs, ys = cfg.grid_spec().centers()
    return [Point2D(float(x), float(y)) for x, y in zip(xs.ravel(), ys.ravel())]


def cmd_gen_synthetic(cfg: RunConfig, args, out: Outputs):
    tx = _require_tx(cfg)
    pts = synthetic_waypoints(cfg, args.waypoints, args.per_corridor)
    sigma = cfg.params.shadow_sigma_db if args.sigma is None else args.sigma
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    log = ["waypoint_id,timestamp,rssi_dbm"]
    pos = ["waypoint_id,x_m,y_m"]
    t = 0
    width = max(3, len(str(len(pts))))
    for k, p in enumerate(pts):
        wp = f"wp{k:0{width}d}"
        pos.append(f"{wp},{p.x_m!r},{p.y_m!r}")
        pl = models.evaluate_pl(cfg.model_id, cfg.params, cfg.radio, cfg.layout, tx, p,
                                cfg.metric, cfg.flog)
        mean = models.predict_rssi(pl, cfg.radio) + simulate.shadowing_sample(sigma, cfg.seed, k)
        jitter = rng.normal(0.0, args.packet_jitter, args.packets) if args.packet_jitter > 0 \
            else np.zeros(args.packets)
        for j in jitter:
            rssi = int(dataset.round_half_away(float(np.clip(mean + j, *dataset.RSSI_RANGE_DBM))))
            ts = (SYNTHETIC_START + timedelta(seconds=t)).strftime("%Y-%m-%dT%H:%M:%SZ")
            log.append(f"{wp},{ts},{rssi}")
            t += args.interval
    out.add(args.out_log, "\n".join(log) + "\n")
    out.add(args.out_positions, "\n".join(pos) + "\n")
    print(f"{len(pts)} waypoints x {args.packets} packets from {cfg.model_id} "
          f"(sigma {_db(sigma)} dB, seed {cfg.seed})")


# --- parser --------------------------------------------------------------

def _pair(name):
    return dict(nargs=2, type=float, metavar=("X", "Y"), help=f"{name} position in meters")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON run config (default: ${CONFIG_ENV})")
    common.add_argument("--seed", type=int)
    common.add_argument("--metric", choices=("euclid", "manhattan"))
    common.add_argument("--model", choices=models.MODEL_IDS)
    common.add_argument("--workers", type=int, default=1)

    p = argparse.ArgumentParser(prog="orchardprop",
                                description="LoRa path-loss modeling for row-structured orchards")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True

    s = sub.add_parser("predict", parents=[common], help="path loss and RSSI of one link")
    s.add_argument("--tx", **_pair("transmitter"))
    s.add_argument("--rx", required=True, **_pair("receiver"))
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("heatmap", parents=[common], help="model RSSI heatmap over the field")
    s.add_argument("--tx", **_pair("transmitter"))
    s.add_argument("--csv")
    s.add_argument("--pgm")
    s.add_argument("--kind", choices=("rssi", "pl"), default="rssi")
    s.set_defaults(func=cmd_heatmap)

    for name, func, hlp in (("evaluate", cmd_evaluate, "error maps and MSE/RMSE per model"),
                            ("calibrate", cmd_calibrate, "fit exponent and per-canopy loss")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--log", required=True, help="packet log CSV")
        s.add_argument("--positions", required=True, help="waypoint positions CSV")
        s.add_argument("--tx", **_pair("transmitter"))
        s.add_argument("--min-samples", type=int, default=dataset.DEFAULT_MIN_SAMPLES)
        s.set_defaults(func=func)
        if name == "evaluate":
            s.add_argument("--models", default="itu,multiwall,proposed")
            s.add_argument("--fit", action="store_true",
                           help="fit canopy models to the data before comparing")
            s.add_argument("--out-dir")
        else:
            s.add_argument("--exponent", type=float, help="hold the exponent, fit canopy loss only")
            s.add_argument("--out", help="JSON report path")

    s = sub.add_parser("trajectory", parents=[common], help="RSSI along the zigzag gateway path")
    s.add_argument("--node", **_pair("fixed node"))
    s.add_argument("--tx", **_pair("transmitter (used when --node is absent)"))
    s.add_argument("--per-corridor", type=int, default=8)
    s.add_argument("--sigma", type=float, help="shadowing std-dev in dB")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_trajectory)

    s = sub.add_parser("gen-synthetic", parents=[common], help="synthetic packet log from a model")
    s.add_argument("--tx", **_pair("transmitter"))
    s.add_argument("--out-log", required=True)
    s.add_argument("--out-positions", required=True)
    s.add_argument("--sigma", type=float, help="per-waypoint shadowing std-dev in dB")
    s.add_argument("--packet-jitter", type=float, default=1.0, help="per-packet std-dev in dB")
    s.add_argument("--packets", type=int, default=30)
    s.add_argument("--interval", type=int, default=2, help="seconds between packets")
    s.add_argument("--waypoints", choices=("zigzag", "grid"), default="zigzag")
    s.add_argument("--per-corridor", type=int, default=8)
    s.set_defaults(func=cmd_gen_synthetic)
    return p


_ERROR_CODES = (
    (dataset.LogFormatError, "E_INPUT"),
    (calibration.CalibrationError, "E_CALIBRATION"),
    (models.DomainError, "E_DOMAIN"),
    (OSError, "E_IO"),
    (ValueError, "E_VALUE"),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Outputs()
    try:
        cfg = apply_overrides(load_config(args.config or os.environ.get(CONFIG_ENV)), args)
        args.func(cfg, args, out)
        out.commit()
    except Exception as exc:
        out.rollback()
        if isinstance(exc, CliError):
            code = exc.code
        else:
            code = next((c for t, c in _ERROR_CODES if isinstance(exc, t)), None)
            if code is None:
                raise
        msg = " ".join(str(exc).split())
        print(f"error: {code}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
