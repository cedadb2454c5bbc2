"""Command-line frontend: ``gvdlink <command> --config run.yaml --out dir``.

Commands:

* ``channel``   transfer function CSV and phase Taylor report per distance
* ``weights``   ISI weight vectors and composite impulse responses
* ``predict``   analytical SER-vs-SNR curves (default engine ``model``)
* ``simulate``  Monte Carlo SER-vs-SNR curves (default engine ``mc``)
* ``sweep``     SER over distance, SNR or symbol rate (``sweep:`` section)
* ``limit``     bracketed dispersion-limit distance (``limit:`` section)

Every data file is deterministic for a given configuration and seed. Each
run also writes ``config.resolved.yaml`` (all defaults filled in; feeding it
back reproduces the outputs) and ``manifest.json`` (inputs, output digests,
version and a timestamp that honours ``SOURCE_DATE_EPOCH``).

Exit codes: 0 ok, 2 configuration error, 3 numeric error, 4 I/O or format
error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from typing import Any, Callable, Optional, Sequence

import numpy as np
import yaml

from gvdlink import __version__
from gvdlink.channel import AtmosphericChannel, ChannelTransferFunction, FrequencyGrid, bundled_catalog_path
from gvdlink.channel import export_transfer_function, fit_taylor_coefficients
from gvdlink.config import channel_from, link_from, load_document, resolve, simulation_from, snr_point
from gvdlink.errors import ConfigError, FormatError, NumericError
from gvdlink.link import Link
from gvdlink.montecarlo import curve_from_results, point_seed, run_simulation
from gvdlink.sermodel import SerCurve, model_waterfall
from gvdlink.shaping import extract_weights
from gvdlink.sweep import SweepSpec, find_dispersion_limit, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("channel", "weights", "predict", "simulate", "sweep", "limit")
ENGINE_NAMES = {"model": "analytical", "mc": "montecarlo"}


def _label(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:g}"


def _canonical(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """Output directory bookkeeping for one command invocation."""

    def __init__(self, command: str, cfg: dict, out: str, engine: str):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.engine = engine
        self.outputs: list[str] = []
        os.makedirs(out, exist_ok=True)

    @property
    def info(self) -> dict:
        """Run block embedded in every JSON sidecar (no timestamp, so it is reproducible)."""
        return {
            "command": self.command,
            "engine": self.engine,
            "tool_version": __version__,
            "rng_seed": self.cfg["seed"],
            "config_sha256": hashlib.sha256(_canonical(self.cfg).encode()).hexdigest(),
        }

    def path(self, name: str) -> str:
        self.outputs.append(name)
        return os.path.join(self.out, name)

    def write_json(self, name: str, obj: Any) -> None:
        with open(self.path(name), "w", encoding="utf-8") as fh:
            fh.write(_canonical(obj))

    def write_curve(self, stem: str, curve: SerCurve) -> None:
        curve.to_csv(self.path(stem + ".csv"))
        self.write_json(stem + ".json", {**curve.sidecar(), "run": self.info})

    def finish(self, inputs: dict[str, str]) -> None:
        with open(self.path("config.resolved.yaml"), "w", encoding="utf-8") as fh:
            yaml.safe_dump(self.cfg, fh, sort_keys=True)
        epoch = os.environ.get("SOURCE_DATE_EPOCH")
        now = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch else _dt.datetime.now(_dt.timezone.utc)
        manifest = {
            **self.info,
            "timestamp": now.isoformat(timespec="seconds"),
            "config": self.cfg,
            "inputs": inputs,
            "outputs": {n: _sha256(os.path.join(self.out, n)) for n in sorted(set(self.outputs))},
        }
        with open(os.path.join(self.out, "manifest.json"), "w", encoding="utf-8") as fh:
            fh.write(_canonical(manifest))


def _engines(run: Run) -> list[str]:
    return ["analytical", "montecarlo"] if run.engine == "both" else [ENGINE_NAMES[run.engine]]


def _export_grid(cfg: dict, link: Link) -> FrequencyGrid:
    half = cfg["channel_report"]["export_half_span_ghz"]
    half = half * 1e9 if half else 0.75 * link.pulse.occupied_bandwidth
    n = int(math.ceil(half / link.grid.step))
    return FrequencyGrid.centered(link.carrier, link.grid.step, 2 * n + 1)


def cmd_channel(run: Run, link: Link) -> None:
    cfg = run.cfg
    grid = _export_grid(cfg, link)
    rep = cfg["channel_report"]
    window = rep["fit_half_window_ghz"]
    window = window * 1e9 if window else link.pulse.occupied_bandwidth / 2
    paths = []
    for d_km in cfg["distances_km"]:
        d = d_km * 1e3
        tf = ChannelTransferFunction(grid, link.channel.response(grid.frequencies, d), d)
        stem = f"channel_L{_label(d_km)}km"
        export_transfer_function(tf, run.path(stem + ".csv"))
        taylor = fit_taylor_coefficients(tf, 2 * math.pi * link.carrier, rep["taylor_order"], half_window_hz=window)
        k0 = grid.index_of(link.carrier)
        paths.append({
            "distance_km": d_km,
            "csv": stem + ".csv",
            "attenuation_db_at_carrier": float(tf.attenuation_db[k0]) + 0.0,
            "phase_taylor_rad_s_n": list(taylor.coefficients),
            "gdd_s2": taylor.gdd,
        })
    report = {"run": run.info, "channel": link.channel.describe(), "carrier_hz": link.carrier, "paths": paths}
    if isinstance(link.channel, AtmosphericChannel):
        a = link.channel.atmosphere
        report["atmosphere"] = {
            "temperature_k": a.temperature,
            "pressure_pa": a.pressure,
            "water_vapor_density_gm3": a.water_vapor_density,
        }
    run.write_json("channel.json", report)


def cmd_weights(run: Run, link: Link) -> None:
    summary = []
    for d_km in run.cfg["distances_km"]:
        h = link.impulse_response(d_km * 1e3)
        w = extract_weights(h, link.pulse, link.span)
        stem = f"weights_L{_label(d_km)}km"
        with open(run.path(stem + ".csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write("offset_symbols,real,imag,magnitude\n")
            for off, v in zip(w.offsets, w.weights):
                fh.write(f"{int(off)},{float(v.real)!r},{float(v.imag)!r},{float(abs(v))!r}\n")
        h.export_csv(run.path(f"impulse_L{_label(d_km)}km.csv"))
        summary.append({
            "distance_km": d_km,
            "csv": stem + ".csv",
            "alignment_time_s": w.alignment_time,
            "center_tap": [w.center_tap.real, w.center_tap.imag],
            "error_floor": link.floor(d_km * 1e3),
        })
    run.write_json("weights.json", {"run": run.info, "link": link.describe(), "distances": summary})


def _mc_waterfall(run: Run, link: Link, d_km: float) -> tuple[SerCurve, list]:
    snrs = run.cfg["snr_db"]
    template = simulation_from(run.cfg, link, d_km * 1e3, snr_point(snrs[0]))
    results = [
        run_simulation(template.replace(snr=snr_point(x), rng_seed=point_seed(run.cfg["seed"], i)))
        for i, x in enumerate(snrs)
    ]
    xs = [math.inf if x == "inf" else float(x) for x in snrs]
    meta = {"engine": "montecarlo", "distance_km": d_km, "link": link.describe(),
            "simulation": run.cfg["simulation"]}
    return curve_from_results("snr", "dB", xs, results, meta), results


def cmd_waterfalls(run: Run, link: Link) -> None:
    cfg = run.cfg
    xs = [math.inf if x == "inf" else float(x) for x in cfg["snr_db"]]
    for d_km in cfg["distances_km"]:
        if "analytical" in _engines(run):
            for p in cfg["spans"] or [link.span]:
                dset = link.displacements(d_km * 1e3, span=p)
                meta = {"engine": "analytical", "distance_km": d_km, "span": p, "link": link.describe()}
                run.write_curve(f"predict_L{_label(d_km)}km_p{p}", model_waterfall(dset, xs, meta))
        if "montecarlo" in _engines(run):
            curve, results = _mc_waterfall(run, link, d_km)
            stem = f"simulate_L{_label(d_km)}km"
            run.write_curve(stem, curve)
            run.write_json(stem + "_runs.json", {"run": run.info, "points": [r.to_dict() for r in results]})


def _family(cfg: dict) -> list[tuple[str, dict]]:
    """(file label, sweep overrides) per family member; one unnamed member without a family."""
    fam = cfg["sweep"]["family"]
    if not fam:
        return [("", {})]
    (key, values), = fam.items()
    if key == "distances_km":
        return [(f"_L{_label(v)}km", {"distance_km": v}) for v in values]
    if key == "snr_db":
        return [(f"_snr{_label(snr_point(v).db)}db", {"snr_db": v}) for v in values]
    return [(f"_rs{_label(v)}gbd", {"symbol_rate_gbd": v}) for v in values]


def cmd_sweep(run: Run, link: Link) -> None:
    cfg = run.cfg
    sw = cfg["sweep"]
    if sw is None:
        raise ConfigError("the sweep command needs a sweep section", "sweep")
    variable = sw["variable"]
    raw = sw[{"distance": "values_km", "snr": "values_db", "symbol_rate": "values_gbd"}[variable]]
    scale = {"distance": 1e3, "snr": 1.0, "symbol_rate": 1e9}[variable]
    values = [math.inf if v == "inf" else v * scale for v in raw]
    engine = "both" if run.engine == "both" else ENGINE_NAMES[run.engine]
    for label, over in _family(cfg):
        fixed = {**sw, **over}
        member = link.with_symbol_rate(over["symbol_rate_gbd"] * 1e9) if "symbol_rate_gbd" in over else link
        spec = SweepSpec(
            variable,
            tuple(values),
            member,
            snr=snr_point(fixed["snr_db"]),
            path_length=fixed["distance_km"] * 1e3,
            engine=engine,
            simulation=simulation_from(cfg, member, 0.0, snr_point(fixed["snr_db"])),
        )
        for name, curve in run_sweep(spec).items():
            run.write_curve(f"sweep_{name}{label}", curve)


def cmd_limit(run: Run, link: Link) -> None:
    if run.engine != "model":
        raise ConfigError("the dispersion limit is found on the analytical floor; use --engine model", "engine")
    lim = run.cfg["limit"]
    rates = lim["symbol_rates_gbd"] or [run.cfg["link"]["symbol_rate_gbd"]]
    results = []
    for rate in rates:
        member = link.with_symbol_rate(rate * 1e9)
        res = find_dispersion_limit(
            member,
            lim["threshold_ser"],
            lim["start_km"] * 1e3,
            lim["stop_km"] * 1e3,
            lim["coarse_step_km"] * 1e3,
            lim["bracket_m"],
        )
        stem = f"limit_rs{_label(rate)}gbd"
        run.write_curve(stem, res.curve)
        results.append({"symbol_rate_gbd": rate, "curve": stem + ".csv", **res.to_dict()})
    run.write_json("limit.json", {"run": run.info, "results": results})


HANDLERS: dict[str, tuple[Callable[[Run, Link], None], str]] = {
    "channel": (cmd_channel, "model"),
    "weights": (cmd_weights, "model"),
    "predict": (cmd_waterfalls, "model"),
    "simulate": (cmd_waterfalls, "mc"),
    "sweep": (cmd_sweep, "model"),
    "limit": (cmd_limit, "model"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gvdlink", description="Dispersion-limited symbol error rates of broadband atmospheric links."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} command")
        p.add_argument("--config", required=True, help="YAML or JSON configuration file")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit RNG seed (overrides the config)")
        p.add_argument("--engine", choices=("model", "mc", "both"), default=None,
                       help="SER engine (default: mc for simulate, model otherwise)")
    return parser


def _inputs(config_path: str, cfg: dict) -> dict[str, str]:
    inputs = {config_path: _sha256(config_path)}
    ch = cfg["channel"]
    if ch["kind"] == "catalog":
        cat = ch["catalog_path"] or bundled_catalog_path()
        inputs[cat if ch["catalog_path"] else "bundled:" + os.path.basename(cat)] = _sha256(cat)
    elif ch["kind"] == "tabulated":
        inputs[ch["table_path"]] = _sha256(ch["table_path"])
    return inputs


def run_command(command: str, config_path: str, out: str, seed: Optional[int] = None,
                engine: Optional[str] = None) -> None:
    """Library entry point behind :func:`main`; raises instead of exiting."""
    with open(config_path, encoding="utf-8") as fh:
        doc = load_document(fh.read(), config_path)
    if seed is not None:
        doc["seed"] = seed
    cfg = resolve(doc)
    handler, default_engine = HANDLERS[command]
    run = Run(command, cfg, out, engine or default_engine)
    link = link_from(cfg, channel_from(cfg))
    handler(run, link)
    run.finish(_inputs(config_path, cfg))


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run_command(args.command, args.config, args.out, args.seed, args.engine)
    except ConfigError as exc:
        print(f"gvdlink: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"gvdlink: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, OSError) as exc:
        print(f"gvdlink: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
