"""Run configuration: defaults, file loading, and unit conversion.

Configuration is a nested JSON-compatible mapping.  Boundary units are
human-scale (MHz, kHz, mT, degrees, microseconds); conversion to the internal
angular units happens in exactly one place, here.  Every output artifact
embeds the fully resolved configuration so a run can be reproduced
bit-identically from its own snapshot.
"""

import copy
import json
import math

from .errors import InputError
from .hamiltonian import HamiltonianParams
from .sequence import EngineConfig, Frame

TWO_PI = 2.0 * math.pi

DEFAULT_CONFIG = {
    "physics": {
        "field_mt": 4.0,
        "theta_deg": 0.0,
        "phi_deg": 0.0,
        "zero_field_splitting_mhz": 2870.0,
        "gamma_e_mhz_per_mt": 28.0,
        "gamma_n_khz_per_mt": -4.32,
        "hyperfine_par_mhz": 3.03,
        "hyperfine_perp_mhz": 3.65,
    },
    "sequence": {
        "mw_pi2_ns": 10.0,
        "rf_rabi_khz": 4.30,
        "mw_frequency_mhz": None,
        "rf_frequency_mhz": None,
        "ramsey_free_ns": None,
        "ramsey_axis2_deg": 90.0,
        "contrast_min": 0.7,
        "contrast_max": 1.0,
        "frame": "rwa",
        "lab_steps_per_period": 100,
        "min_steps_per_period": 20,
        "readouts": 4,
        "noise_sigma": 0.0,
        "coherence_decay_per_s": 0.0,
        "laser_depolarization": 0.0,
    },
    "trace": {
        "duration_max_us": 600.0,
        "stride": 3,
        "oversample": 0,
    },
    "sweep": {
        "angles_deg": [0.0, 2.5, 5.0, 7.5, 10.0],
    },
    "sensitivity": {
        "t2n_star_ms": 9.0,
        "t2_star_us": 1.0,
        "theta_grid_deg": [0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5,
                           20.0, 22.5, 25.0, 27.5, 30.0],
    },
    "odmr": {
        "span_mhz": 8.0,
        "step_khz": 50.0,
        "pi_pulse_us": 1.0,
    },
    "fit": {
        "rabi_hint_khz": None,
    },
    "seed": 1,
    "threads": 1,
}


def _deep_merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise InputError(f"unknown config key: {where}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise InputError(f"config key {where} must be a mapping")
            out[key] = _deep_merge(base[key], value, where)
        else:
            out[key] = value
    return out


def load_config(path: str | None) -> dict:
    """Defaults merged with an optional JSON config file."""
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("config file must hold a JSON object")
    # a previously emitted snapshot may carry provenance keys; ignore them
    data = {k: v for k, v in data.items() if k not in ("version", "command")}
    return _deep_merge(DEFAULT_CONFIG, data)


def apply_overrides(cfg: dict, overrides: dict) -> dict:
    """Apply dotted-path overrides (CLI flags win over file values)."""
    out = copy.deepcopy(cfg)
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = out
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value
    return out


def params_from_config(cfg: dict) -> HamiltonianParams:
    ph = cfg["physics"]
    return HamiltonianParams(
        d=TWO_PI * ph["zero_field_splitting_mhz"] * 1e6,
        gamma_e=TWO_PI * ph["gamma_e_mhz_per_mt"] * 1e6,
        gamma_n=TWO_PI * ph["gamma_n_khz_per_mt"] * 1e3,
        a_par=TWO_PI * ph["hyperfine_par_mhz"] * 1e6,
        a_perp=TWO_PI * ph["hyperfine_perp_mhz"] * 1e6,
        b=ph["field_mt"],
        theta=math.radians(ph["theta_deg"]),
        phi=math.radians(ph["phi_deg"]),
    )


def engine_config_from_config(cfg: dict) -> EngineConfig:
    sq = cfg["sequence"]
    tr = cfg["trace"]
    frame = sq["frame"].lower()
    if frame not in ("rwa", "lab"):
        raise InputError(f"sequence.frame must be 'rwa' or 'lab', got {sq['frame']!r}")
    return EngineConfig(
        mw_pi2=sq["mw_pi2_ns"] * 1e-9,
        rf_rabi=TWO_PI * sq["rf_rabi_khz"] * 1e3,
        mw_frequency=None if sq["mw_frequency_mhz"] is None else sq["mw_frequency_mhz"] * 1e6,
        rf_frequency=None if sq["rf_frequency_mhz"] is None else sq["rf_frequency_mhz"] * 1e6,
        ramsey_free=None if sq["ramsey_free_ns"] is None else sq["ramsey_free_ns"] * 1e-9,
        ramsey_axis2=math.radians(sq["ramsey_axis2_deg"]),
        contrast_min=sq["contrast_min"],
        contrast_max=sq["contrast_max"],
        frame=Frame.RWA if frame == "rwa" else Frame.LAB,
        lab_steps_per_period=int(sq["lab_steps_per_period"]),
        min_steps_per_period=int(sq["min_steps_per_period"]),
        readouts=int(sq["readouts"]),
        noise_sigma=sq["noise_sigma"],
        seed=int(cfg["seed"]),
        coherence_decay=sq["coherence_decay_per_s"],
        laser_depolarization=sq["laser_depolarization"],
        duration_max=tr["duration_max_us"] * 1e-6,
        stride=int(tr["stride"]),
        oversample=int(tr["oversample"]),
    )
