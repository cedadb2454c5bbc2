"""Run configuration files.

A configuration is one YAML (or JSON) document. Every physical quantity
carries its unit in the key name, e.g. ``carrier_ghz`` or ``distance_km``.
:func:`resolve` merges a user document onto :data:`DEFAULTS`, rejects unknown
keys and bad values with the offending key path, and returns the fully
materialized configuration. Feeding a resolved configuration back in
reproduces it exactly.
"""

from __future__ import annotations

import copy
import math
import re
from typing import Any, Optional

import yaml

from gvdlink.channel import (
    AtmosphereState,
    AtmosphericChannel,
    ChannelModel,
    PhaseTaylorCoefficients,
    PolynomialChannel,
    TabulatedChannel,
    identity_channel,
    import_transfer_function,
    load_bundled_catalog,
    load_line_catalog,
)
from gvdlink.errors import ConfigError
from gvdlink.link import Link
from gvdlink.montecarlo import SimulationConfig
from gvdlink.sermodel import SnrPoint
from gvdlink.shaping import SPLITS, PulseShapeSpec

CHANNEL_KINDS = ("catalog", "identity", "polynomial", "tabulated")
SWEEP_UNITS = {"distance": "km", "snr": "db", "symbol_rate": "gbd"}
FAMILY_KEYS = {"distances_km": "distance", "snr_db": "snr", "symbol_rates_gbd": "symbol_rate"}

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "link": {
        "carrier_ghz": 250.0,
        "symbol_rate_gbd": 30.0,
        "rolloff": 0.5,
        "split": "matched-root-pair",
        "span": 3,
        "grid_oversample": 1024,
        "grid_span_factor": 8.0,
    },
    "channel": {
        "kind": "catalog",
        "catalog_path": None,
        "temperature_c": 20.0,
        "pressure_hpa": 1013.25,
        "water_vapor_density_gm3": None,
        "relative_humidity_pct": None,
        "gdd_ps2_per_km": 0.0,
        "tod_ps3_per_km": 0.0,
        "attenuation_db_per_km": 0.0,
        "table_path": None,
        "table_path_length_km": None,
    },
    "distances_km": [0.0],
    "snr_db": [10.0],
    "spans": None,
    "simulation": {
        "frame_bits": 4000,
        "frame_count": 2000,
        "samples_per_symbol": 8,
        "calibration_symbols": 10000,
        "workers": 1,
    },
    "channel_report": {
        "taylor_order": 4,
        "fit_half_window_ghz": None,
        "export_half_span_ghz": None,
    },
    "sweep": {
        "variable": "distance",
        "values": None,
        "snr_db": "inf",
        "distance_km": 0.0,
        "family": None,
    },
    "limit": {
        "threshold_ser": 1e-6,
        "start_km": 0.0,
        "stop_km": 50.0,
        "coarse_step_km": 1.0,
        "bracket_m": 50.0,
        "symbol_rates_gbd": None,
    },
}

_SWEEP_RANGE = re.compile(r"^(values|start|stop|step)_(km|db|gbd)$")


def load_document(text: str, source: str = "<config>") -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source} is not valid YAML/JSON: {exc}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{source} must hold a mapping at the top level")
    return doc


def _merge(defaults: dict, user: dict, path: str) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in defaults:
            raise ConfigError("unknown key", where)
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError("expected a mapping", where)
            out[key] = _merge(defaults[key], value, where)
        else:
            out[key] = value
    return out


def _number(value: Any, key: str, *, positive=False, nonneg=False, allow_inf=False) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity") and allow_inf:
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key)
    v = float(value)
    if math.isnan(v) or (math.isinf(v) and not (allow_inf and v > 0)):
        raise ConfigError(f"expected a finite number, got {value!r}", key)
    if positive and not v > 0:
        raise ConfigError(f"must be positive, got {value!r}", key)
    if nonneg and not v >= 0:
        raise ConfigError(f"must be non-negative, got {value!r}", key)
    return v


def _integer(value: Any, key: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"expected an integer >= {minimum}, got {value!r}", key)
    return value


def _number_list(value: Any, key: str, **kw) -> list[float]:
    if not isinstance(value, list):
        value = [value]
    if not value:
        raise ConfigError("list must not be empty", key)
    return [_number(v, f"{key}[{i}]", **kw) for i, v in enumerate(value)]


def _increasing(values: list[float], key: str) -> None:
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("values must be strictly increasing", key)


def _plain(v: float) -> Any:
    return "inf" if math.isinf(v) else v


def _resolve_sweep(s: dict) -> dict:
    variable = s.get("variable", "distance")
    if variable not in SWEEP_UNITS:
        raise ConfigError(f"must be one of {sorted(SWEEP_UNITS)}", "sweep.variable")
    unit = SWEEP_UNITS[variable]
    ranges, fixed = {}, {}
    for key, value in s.items():
        m = _SWEEP_RANGE.match(key)
        if m:
            if m.group(2) != unit:
                raise ConfigError(f"unit does not match sweep variable {variable!r} (expected _{unit})", f"sweep.{key}")
            ranges[m.group(1)] = value
        elif key in DEFAULTS["sweep"]:
            fixed[key] = value
        else:
            raise ConfigError("unknown key", f"sweep.{key}")
    out = _merge({k: v for k, v in DEFAULTS["sweep"].items() if k != "values"}, fixed, "sweep")
    key = f"sweep.values_{unit}"
    allow_inf = variable == "snr"
    if "values" in ranges:
        if set(ranges) != {"values"}:
            raise ConfigError("give either values or start/stop/step, not both", key)
        values = _number_list(ranges["values"], key, allow_inf=allow_inf)
    elif {"start", "stop", "step"} <= set(ranges):
        start = _number(ranges["start"], f"sweep.start_{unit}")
        stop = _number(ranges["stop"], f"sweep.stop_{unit}")
        step = _number(ranges["step"], f"sweep.step_{unit}", positive=True)
        if stop < start:
            raise ConfigError("range is empty", f"sweep.stop_{unit}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [start + i * step for i in range(n)]
    else:
        raise ConfigError(f"missing values_{unit} or start/stop/step_{unit}", "sweep")
    if variable == "distance" and min(values) < 0:
        raise ConfigError("distances must be non-negative", key)
    if variable == "symbol_rate" and min(values) <= 0:
        raise ConfigError("symbol rates must be positive", key)
    _increasing(values, key)
    out[f"values_{unit}"] = [_plain(v) for v in values]
    out["snr_db"] = _plain(_number(out["snr_db"], "sweep.snr_db", allow_inf=True))
    out["distance_km"] = _number(out["distance_km"], "sweep.distance_km", nonneg=True)
    fam = out["family"]
    if fam is not None:
        if not isinstance(fam, dict) or len(fam) != 1 or next(iter(fam)) not in FAMILY_KEYS:
            raise ConfigError(f"must be a mapping with one of {sorted(FAMILY_KEYS)}", "sweep.family")
        (fkey, fvals), = fam.items()
        if FAMILY_KEYS[fkey] == variable:
            raise ConfigError("family must differ from the swept variable", f"sweep.family.{fkey}")
        vals = _number_list(fvals, f"sweep.family.{fkey}", allow_inf=fkey == "snr_db",
                            nonneg=fkey == "distances_km", positive=fkey == "symbol_rates_gbd")
        out["family"] = {fkey: [_plain(v) for v in vals]}
    return out


def resolve(user: dict) -> dict:
    """Materialize defaults and validate; raises :class:`ConfigError`."""
    user = dict(user)
    sweep_user = user.pop("sweep", None)
    cfg = _merge({k: v for k, v in DEFAULTS.items() if k != "sweep"}, user, "")
    cfg["seed"] = _integer(cfg["seed"], "seed", 0)
    if cfg["seed"] >= 2**64:
        raise ConfigError("must fit in 64 bits", "seed")

    ln = cfg["link"]
    for k in ("carrier_ghz", "symbol_rate_gbd", "grid_span_factor"):
        ln[k] = _number(ln[k], f"link.{k}", positive=True)
    ln["rolloff"] = _number(ln["rolloff"], "link.rolloff")
    if not 0 <= ln["rolloff"] <= 1:
        raise ConfigError("must lie in [0, 1]", "link.rolloff")
    if ln["split"] not in SPLITS:
        raise ConfigError(f"must be one of {list(SPLITS)}", "link.split")
    ln["span"] = _integer(ln["span"], "link.span", 1)
    ln["grid_oversample"] = _integer(ln["grid_oversample"], "link.grid_oversample", 16)

    ch = cfg["channel"]
    if ch["kind"] not in CHANNEL_KINDS:
        raise ConfigError(f"must be one of {list(CHANNEL_KINDS)}", "channel.kind")
    ch["temperature_c"] = _number(ch["temperature_c"], "channel.temperature_c")
    if ch["temperature_c"] <= -273.15:
        raise ConfigError("below absolute zero", "channel.temperature_c")
    ch["pressure_hpa"] = _number(ch["pressure_hpa"], "channel.pressure_hpa", positive=True)
    for k in ("gdd_ps2_per_km", "tod_ps3_per_km", "attenuation_db_per_km"):
        ch[k] = _number(ch[k], f"channel.{k}")
    if ch["kind"] == "catalog":
        rho, rh = ch["water_vapor_density_gm3"], ch["relative_humidity_pct"]
        if (rho is None) == (rh is None):
            raise ConfigError("set exactly one of water_vapor_density_gm3 and relative_humidity_pct", "channel")
        if rho is not None:
            ch["water_vapor_density_gm3"] = _number(rho, "channel.water_vapor_density_gm3", nonneg=True)
        else:
            ch["relative_humidity_pct"] = _number(rh, "channel.relative_humidity_pct", nonneg=True)
            if ch["relative_humidity_pct"] > 100:
                raise ConfigError("must not exceed 100", "channel.relative_humidity_pct")
    if ch["kind"] == "tabulated" and not ch["table_path"]:
        raise ConfigError("required for a tabulated channel", "channel.table_path")
    if ch["table_path_length_km"] is not None:
        ch["table_path_length_km"] = _number(ch["table_path_length_km"], "channel.table_path_length_km", positive=True)

    cfg["distances_km"] = _number_list(cfg["distances_km"], "distances_km", nonneg=True)
    _increasing(cfg["distances_km"], "distances_km")
    snr = _number_list(cfg["snr_db"], "snr_db", allow_inf=True)
    _increasing(snr, "snr_db")
    cfg["snr_db"] = [_plain(v) for v in snr]
    if cfg["spans"] is not None:
        spans = cfg["spans"] if isinstance(cfg["spans"], list) else [cfg["spans"]]
        cfg["spans"] = [_integer(p, f"spans[{i}]", 1) for i, p in enumerate(spans)]

    sim = cfg["simulation"]
    sim["frame_bits"] = _integer(sim["frame_bits"], "simulation.frame_bits", 2)
    if sim["frame_bits"] % 2:
        raise ConfigError("must be a multiple of 2 bits per 4-QAM symbol", "simulation.frame_bits")
    sim["frame_count"] = _integer(sim["frame_count"], "simulation.frame_count", 1)
    sim["samples_per_symbol"] = _integer(sim["samples_per_symbol"], "simulation.samples_per_symbol", 4)
    sim["calibration_symbols"] = _integer(sim["calibration_symbols"], "simulation.calibration_symbols", 1)
    sim["workers"] = _integer(sim["workers"], "simulation.workers", 1)

    rep = cfg["channel_report"]
    rep["taylor_order"] = _integer(rep["taylor_order"], "channel_report.taylor_order", 2)
    for k in ("fit_half_window_ghz", "export_half_span_ghz"):
        if rep[k] is not None:
            rep[k] = _number(rep[k], f"channel_report.{k}", positive=True)

    lim = cfg["limit"]
    lim["threshold_ser"] = _number(lim["threshold_ser"], "limit.threshold_ser")
    if not 0 < lim["threshold_ser"] < 1:
        raise ConfigError("must lie in (0, 1)", "limit.threshold_ser")
    lim["start_km"] = _number(lim["start_km"], "limit.start_km", nonneg=True)
    lim["stop_km"] = _number(lim["stop_km"], "limit.stop_km", positive=True)
    if lim["stop_km"] <= lim["start_km"]:
        raise ConfigError("must exceed start_km", "limit.stop_km")
    lim["coarse_step_km"] = _number(lim["coarse_step_km"], "limit.coarse_step_km", positive=True)
    lim["bracket_m"] = _number(lim["bracket_m"], "limit.bracket_m", positive=True)
    if lim["symbol_rates_gbd"] is not None:
        lim["symbol_rates_gbd"] = _number_list(lim["symbol_rates_gbd"], "limit.symbol_rates_gbd", positive=True)

    cfg["sweep"] = _resolve_sweep(sweep_user or {}) if sweep_user is not None else None
    return cfg


# --- building library objects ----------------------------------------------


def atmosphere_from(ch: dict) -> AtmosphereState:
    temperature = ch["temperature_c"] + 273.15
    pressure = ch["pressure_hpa"] * 100.0
    if ch["relative_humidity_pct"] is not None:
        return AtmosphereState.from_relative_humidity(ch["relative_humidity_pct"], temperature, pressure)
    return AtmosphereState(temperature, pressure, ch["water_vapor_density_gm3"] or 0.0)


def channel_from(cfg: dict) -> ChannelModel:
    """Channel model for a resolved configuration (may read catalog/table files)."""
    ch = cfg["channel"]
    carrier = cfg["link"]["carrier_ghz"] * 1e9
    if ch["kind"] == "identity":
        return identity_channel(carrier)
    if ch["kind"] == "polynomial":
        coeffs = (0.0, 0.0, ch["gdd_ps2_per_km"] * 1e-24 / 1e3, ch["tod_ps3_per_km"] * 1e-36 / 1e3)
        return PolynomialChannel(
            PhaseTaylorCoefficients.from_hz(carrier, coeffs), ch["attenuation_db_per_km"] / 1e3, reference_length=1.0
        )
    if ch["kind"] == "tabulated":
        length = ch["table_path_length_km"]
        return TabulatedChannel(import_transfer_function(ch["table_path"], None if length is None else length * 1e3))
    lines = load_line_catalog(ch["catalog_path"]) if ch["catalog_path"] else load_bundled_catalog()
    return AtmosphericChannel(lines, atmosphere_from(ch))


def link_from(cfg: dict, channel: Optional[ChannelModel] = None, symbol_rate_gbd: Optional[float] = None,
              span: Optional[int] = None) -> Link:
    ln = cfg["link"]
    pulse = PulseShapeSpec((symbol_rate_gbd or ln["symbol_rate_gbd"]) * 1e9, ln["rolloff"], ln["split"])
    return Link(
        channel if channel is not None else channel_from(cfg),
        ln["carrier_ghz"] * 1e9,
        pulse,
        span or ln["span"],
        ln["grid_oversample"],
        ln["grid_span_factor"],
    )


def snr_point(value: Any) -> SnrPoint:
    return SnrPoint.infinite() if value == "inf" or value == math.inf else SnrPoint.from_db(float(value))


def simulation_from(cfg: dict, link: Link, distance_m: float, snr: SnrPoint) -> SimulationConfig:
    sim = cfg["simulation"]
    return SimulationConfig(
        carrier=link.carrier,
        pulse=link.pulse,
        path_length=distance_m,
        channel=link.channel,
        snr=snr,
        frame_bits=sim["frame_bits"],
        frame_count=sim["frame_count"],
        rng_seed=cfg["seed"],
        samples_per_symbol=sim["samples_per_symbol"],
        span=link.span,
        calibration_symbols=sim["calibration_symbols"],
        workers=sim["workers"],
    )
