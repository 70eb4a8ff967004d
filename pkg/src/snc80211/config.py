"""INI-style configuration for the CLI.

Four sections, all optional, every key optional (defaults are the standard
802.11b setup):

  [mac]      Params80211 fields: basic_rate, data_rate, phy_header,
             ack_header, mac_header, sifs, difs, idle_slot, cw_min, cw_max,
             retry_limit, payload, n_nodes
  [traffic]  mode (poisson | saturated), rate (packets per slot)
  [grid]     theta_points, theta_min, theta_max, r_points
  [sim]      duration, replications, sample_time, collision_mode, seed

Unknown sections or keys are errors, not silently ignored. The config path
can also come from the SNC80211_CONFIG environment variable; an explicit
--config flag wins.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace

from .bounds import GridOptions
from .dcf import Params80211
from .sim import COLLISION_MODES, TRAFFIC_MODES

__all__ = ["ConfigError", "RunConfig", "load_run_config", "ENV_CONFIG"]

ENV_CONFIG = "SNC80211_CONFIG"


class ConfigError(Exception):
    """Bad configuration file: unreadable, unknown key, or invalid value."""


@dataclass(frozen=True)
class RunConfig:
    params: Params80211 = field(default_factory=Params80211)
    grid: GridOptions = field(default_factory=GridOptions)
    traffic_mode: str = "poisson"
    rate: float = 0.0
    duration: float = 100.0
    replications: int = 100
    sample_time: float = 50.0
    collision_mode: str = "same-as-success"
    seed: int = 0


_MAC_INT = {"phy_header", "ack_header", "mac_header", "cw_min", "cw_max",
            "retry_limit", "payload", "n_nodes"}
_MAC_FLOAT = {"basic_rate", "data_rate", "sifs", "difs", "idle_slot"}
_GRID_INT = {"theta_points", "r_points"}
_GRID_FLOAT = {"theta_min", "theta_max"}
_SIM_KEYS = {"duration", "replications", "sample_time", "collision_mode", "seed"}
_TRAFFIC_KEYS = {"mode", "rate"}
_SECTIONS = ("mac", "traffic", "grid", "sim")


def _cast(section, key, raw, typ):
    try:
        return typ(raw)
    except ValueError as e:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from e


def load_run_config(path: str | None = None) -> RunConfig:
    """Build a RunConfig from a file, the SNC80211_CONFIG path, or defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        return RunConfig()
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e}") from e
    except configparser.Error as e:
        raise ConfigError(f"cannot parse config {path!r}: {e}") from e

    unknown = set(cp.sections()) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")

    out = RunConfig()
    if cp.has_section("mac"):
        overrides = {}
        for key, raw in cp.items("mac"):
            if key in _MAC_INT:
                overrides[key] = _cast("mac", key, raw, int)
            elif key in _MAC_FLOAT:
                overrides[key] = _cast("mac", key, raw, float)
            else:
                raise ConfigError(f"unknown [mac] key {key!r}")
        try:
            out = replace(out, params=replace(out.params, **overrides))
        except ValueError as e:
            raise ConfigError(f"invalid [mac] values: {e}") from e

    if cp.has_section("grid"):
        overrides = {}
        for key, raw in cp.items("grid"):
            if key in _GRID_INT:
                overrides[key] = _cast("grid", key, raw, int)
            elif key in _GRID_FLOAT:
                overrides[key] = _cast("grid", key, raw, float)
            else:
                raise ConfigError(f"unknown [grid] key {key!r}")
        out = replace(out, grid=replace(out.grid, **overrides))

    if cp.has_section("traffic"):
        for key, raw in cp.items("traffic"):
            if key == "mode":
                if raw not in TRAFFIC_MODES:
                    raise ConfigError(f"[traffic] mode must be one of {TRAFFIC_MODES}")
                out = replace(out, traffic_mode=raw)
            elif key == "rate":
                out = replace(out, rate=_cast("traffic", key, raw, float))
            else:
                raise ConfigError(f"unknown [traffic] key {key!r}")

    if cp.has_section("sim"):
        for key, raw in cp.items("sim"):
            if key == "duration":
                out = replace(out, duration=_cast("sim", key, raw, float))
            elif key == "replications":
                out = replace(out, replications=_cast("sim", key, raw, int))
            elif key == "sample_time":
                out = replace(out, sample_time=_cast("sim", key, raw, float))
            elif key == "collision_mode":
                if raw not in COLLISION_MODES:
                    raise ConfigError(f"[sim] collision_mode must be one of {COLLISION_MODES}")
                out = replace(out, collision_mode=raw)
            elif key == "seed":
                out = replace(out, seed=_cast("sim", key, raw, int))
            else:
                raise ConfigError(f"unknown [sim] key {key!r}")
    return out
