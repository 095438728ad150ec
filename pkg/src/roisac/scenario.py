"""Scenario files: JSON with one section per module, presets, and dotted-key overrides."""

from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from pathlib import Path
from typing import Any

from .channel import ChannelParams, NoiseParams
from .waveform import HybridConfig, MlsConfig, OfdmConfig


class ConfigError(ValueError):
    """Malformed or invalid scenario configuration."""


DEFAULT_SCENARIO: dict[str, Any] = {
    "preset": "indoor",
    "seed": 1,
    "geometry": {
        "tx_position": [0.0, 0.0, 0.0],
        "tx_boresight": [0.0, 0.0, 1.0],
        "targets": [{"position": [0.0, 0.0, 3.0], "boresight": [0.0, 0.0, -1.0]}],
        "anchors": [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]],
    },
    "channel": {
        "m_p": 1.0,
        "m_a": 1.0,
        "A_s": 1e-4,
        "rho_s": 0.5,
        "Phi_s_deg": 60.0,
        "k": 0.9,
        "Phi_r_deg": 45.0,
        "xi0": 0.5,
    },
    "noise": {"mode": "direct-snr", "snr_db": 10.0, "ambient_power": 0.0, "bandwidth": 0.0, "thermal_variance": 0.0},
    "waveform": {
        "sample_rate": 100e6,
        "n_subcarriers": 64,
        "qam_order": 4,
        "cp_len": 16,
        "clip_level": None,
        "n_symbols": 16,
        "mls_degree": 7,
        "mls_seed": 1,
        "alpha": 0.5,
    },
    "sensing": {"upsample": 4, "mls_reference": True, "max_targets": 3, "stop_threshold": 0.05},
    "duplexing": {"d_max": 15.0, "guard_len": None, "epsilon": [0.0, 1e-3, 1e-2, 1e-1], "echo_amplitude": 0.8, "uplink_gain": 1.0},
    "multiaccess": {"scheme": "oma", "subcarrier_groups": [[1, 2, 3, 4, 5, 6, 7, 8], [9, 10, 11, 12, 13, 14, 15, 16]], "power_shares": [0.8, 0.2]},
    "localization": {"truth": [3.0, 4.0], "range_sigma": 0.05},
    "experiment": {
        "trials": 50,
        "alphas": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        "distance_range": [1.0, 12.0],
        "distances": [1.0, 2.0, 4.0, 8.0],
        "angles_deg": [0.0, 15.0, 30.0, 45.0],
        "offsets": [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0],
        "standoff": 2.0,
        "reflectors": [
            {"name": "ccr", "model": "point", "k": 0.9, "xi0": 0.5, "Phi_r_deg": 45.0},
            {"name": "sheeting_small", "model": "area", "k": 0.5, "xi0": 0.3, "Phi_r_deg": 60.0},
            {"name": "sheeting_large", "model": "area", "k": 0.5, "xi0": 0.6, "Phi_r_deg": 60.0},
        ],
        "ebn0_db": [0.0, 4.0, 8.0],
        "min_bits": 1000000,
        "target_errors": 4000,
        "amplitudes": [1.0, 0.2],
        "delays_samples": [20, 45],
    },
}

# Parameter sets for the deployment settings; geometry and scale only, no extra physics.
PRESETS: dict[str, dict[str, Any]] = {
    "indoor": {},
    "uav": {
        "channel": {"m_p": 20.0, "Phi_s_deg": 20.0, "Phi_r_deg": 30.0},
        "duplexing": {"d_max": 100.0},
        "experiment": {"distance_range": [10.0, 90.0], "distances": [10.0, 25.0, 50.0, 100.0], "standoff": 30.0},
    },
    "underwater": {
        "channel": {"m_p": 5.0, "k": 0.6},
        "noise": {"snr_db": 5.0},
        "duplexing": {"d_max": 30.0},
        "experiment": {"distance_range": [2.0, 25.0], "distances": [2.0, 5.0, 10.0, 20.0]},
    },
    "satellite": {
        "channel": {"m_p": 1000.0, "Phi_s_deg": 2.0, "Phi_r_deg": 20.0, "A_s": 1e-2},
        "waveform": {"mls_degree": 10, "n_symbols": 24},
        "duplexing": {"d_max": 1000.0},
        "experiment": {"distance_range": [100.0, 900.0], "distances": [100.0, 300.0, 1000.0], "angles_deg": [0.0, 0.5, 1.0]},
    },
}


def deep_merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in out:
            raise ConfigError(f"unknown key '{here}'")
        if isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = deep_merge(out[key], value, here)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(sc: dict, assignment: str) -> dict:
    """Apply one ``dotted.key=value`` override (value parsed as JSON when possible)."""
    if "=" not in assignment:
        raise ConfigError(f"override '{assignment}' is not of the form key=value")
    key, text = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = sc
    for i, part in enumerate(parts[:-1]):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown key '{'.'.join(parts[: i + 1])}'")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigError(f"unknown key '{key.strip()}'")
    node[parts[-1]] = _parse_value(text)
    return sc


def load_scenario(path=None, overrides=(), preset: str | None = None) -> dict:
    """Defaults, then the named preset, then the file, then ``--set`` overrides."""
    raw: dict = {}
    text = None
    if path is not None:
        text = Path(path).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: JSON parse error: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
    name = preset or raw.get("preset", DEFAULT_SCENARIO["preset"])
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown preset '{name}' (choose from {', '.join(sorted(PRESETS))})")
    sc = deep_merge(DEFAULT_SCENARIO, PRESETS[name])
    try:
        sc = deep_merge(sc, raw)
    except ConfigError as exc:
        raise ConfigError(_with_line(str(exc), text, path)) from None
    sc["preset"] = name
    for item in overrides:
        apply_override(sc, item)
    sc["_source"] = {"path": str(path) if path else None, "text": text}
    validate(sc)
    return sc


def _with_line(message: str, text: str | None, path) -> str:
    m = re.search(r"'([^']+)'", message)
    if not text or not m:
        return message
    leaf = m.group(1).split(".")[-1]
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{leaf}"' in line:
            return f"{path}:{i}: {message}"
    return message


def _section_error(sc: dict, key: str, exc: Exception) -> ConfigError:
    src = sc.get("_source") or {}
    return ConfigError(_with_line(f"'{key}': {exc}", src.get("text"), src.get("path")))


def channel_params(sc: dict, **changes) -> ChannelParams:
    c = dict(sc["channel"])
    c.update(changes)
    try:
        return ChannelParams(
            m_p=float(c["m_p"]),
            m_a=float(c["m_a"]),
            A_s=float(c["A_s"]),
            rho_s=float(c["rho_s"]),
            Phi_s=math.radians(float(c["Phi_s_deg"])),
            k=float(c["k"]),
            Phi_r=math.radians(float(c["Phi_r_deg"])),
            xi0=float(c["xi0"]),
        )
    except (TypeError, ValueError) as exc:
        raise _section_error(sc, "channel", exc) from None


def noise_params(sc: dict, snr_db: float | None = None) -> NoiseParams:
    n = sc["noise"]
    try:
        if n["mode"] == "physical":
            return NoiseParams(
                mode="physical",
                ambient_power=float(n["ambient_power"]),
                bandwidth=float(n["bandwidth"]),
                thermal_variance=float(n["thermal_variance"]),
                responsivity=float(sc["channel"]["rho_s"]),
            )
        snr = n["snr_db"] if snr_db is None else snr_db
        return NoiseParams(mode=n["mode"], snr_db=math.inf if snr is None else float(snr))
    except (TypeError, ValueError) as exc:
        raise _section_error(sc, "noise", exc) from None


def ofdm_config(sc: dict) -> OfdmConfig:
    w = sc["waveform"]
    try:
        return OfdmConfig(int(w["n_subcarriers"]), int(w["qam_order"]), int(w["cp_len"]), w["clip_level"])
    except (TypeError, ValueError) as exc:
        raise _section_error(sc, "waveform", exc) from None


def mls_config(sc: dict) -> MlsConfig:
    w = sc["waveform"]
    try:
        return MlsConfig(int(w["mls_degree"]), seed=int(w["mls_seed"]))
    except (TypeError, ValueError) as exc:
        raise _section_error(sc, "waveform", exc) from None


def hybrid_config(sc: dict, alpha: float | None = None) -> HybridConfig:
    a = sc["waveform"]["alpha"] if alpha is None else alpha
    try:
        return HybridConfig(float(a), ofdm_config(sc), mls_config(sc))
    except (TypeError, ValueError) as exc:
        raise _section_error(sc, "waveform.alpha", exc) from None


def validate(sc: dict) -> None:
    channel_params(sc)
    noise_params(sc)
    hybrid_config(sc)
    exp = sc["experiment"]
    if not isinstance(exp["trials"], int) or exp["trials"] < 1:
        raise _section_error(sc, "experiment.trials", ValueError("trials must be an integer >= 1"))
    if not isinstance(sc["seed"], int) or sc["seed"] < 0:
        raise _section_error(sc, "seed", ValueError("root seed must be a nonnegative integer"))
    w = sc["waveform"]
    if not float(w["sample_rate"]) > 0 or int(w["n_symbols"]) < 1:
        raise _section_error(sc, "waveform", ValueError("sample_rate must be > 0 and n_symbols >= 1"))
    frame = int(w["n_symbols"]) * (int(w["n_subcarriers"]) + int(w["cp_len"]))
    if frame < 2 ** int(w["mls_degree"]) - 1:
        raise _section_error(sc, "waveform.n_symbols", ValueError(f"frame of {frame} samples is shorter than one MLS period"))


def derive_seed(root_seed: int, command: str, index: int) -> int:
    """Per-trial seed: first 8 bytes of sha256("root:command:index"), big-endian."""
    digest = hashlib.sha256(f"{root_seed}:{command}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")
