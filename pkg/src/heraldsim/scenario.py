"""Scenario files: JSON descriptions of a source, channel, and detector.

A scenario pins everything a CLI run needs.  Field names carry explicit
units (``alpha_s_db``, ``deadtime_s``); transmittances may be given
either linear (``alpha_r``) or in dB (``alpha_r_db``), never both.
Validation reports the dotted path of the offending field so errors in
nested fragments stay findable.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .core import ChannelSpec, DetectorSpec, SourceSpec, Transmittance, db_to_linear
from .montecarlo import NOISE_MODELS, SimConfig

__all__ = ["ScenarioError", "Scenario", "SCENARIO_DEFAULTS", "load_scenario_dict",
           "build_scenario", "load_scenario", "numeric_leaf_paths", "set_path"]


class ScenarioError(ValueError):
    """Scenario content problem, tagged with the dotted field path."""

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


SCENARIO_DEFAULTS: dict = {
    "channel": {"alpha_r_db": 0.0, "alpha_d_db": 0.0, "p_noise": 0.0},
    "detector": {"pulse_rate_hz": 48.7e6, "deadtime_s": 10e-6, "gate_width_s": 2.5e-9},
    "simulation": {
        "n_slots": 1_000_000,
        "seed": 0,
        "noise_model": "bernoulli-per-gate",
        "apply_herald_deadtime": False,
        "hbt_enabled": False,
        "hbt_noise_coupling": False,
        "apply_receiver_deadtime": False,
    },
}

_SECTION_KEYS = {
    "source": {"kind", "mu", "alpha_s", "alpha_s_db", "beta", "beta_db"},
    "channel": {"alpha_r", "alpha_r_db", "alpha_d", "alpha_d_db", "p_noise"},
    "detector": {"pulse_rate_hz", "deadtime_s", "gate_width_s"},
    "simulation": set(SCENARIO_DEFAULTS["simulation"]),
}


def _require_object(path: str, value) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(path, f"must be an object, got {type(value).__name__}")
    return value


def _check_keys(path: str, section: dict, allowed: set) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ScenarioError(path, f"unknown fields {sorted(unknown)}; "
                                  f"allowed: {sorted(allowed)}")


def _number(path: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(path, f"must be a finite number, got {value!r}")
    return float(value)


def _integer(path: str, value) -> int:
    if isinstance(value, bool):
        raise ScenarioError(path, f"must be an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise ScenarioError(path, f"must be an integer, got {value!r}")


def _boolean(path: str, value) -> bool:
    if not isinstance(value, bool):
        raise ScenarioError(path, f"must be true or false, got {value!r}")
    return value


def _transmittance(section: dict, section_path: str, name: str,
                   required: bool) -> Transmittance | None:
    """Resolve a linear-or-dB transmittance pair like alpha_r / alpha_r_db."""
    has_lin, has_db = name in section, f"{name}_db" in section
    if has_lin and has_db:
        raise ScenarioError(f"{section_path}.{name}",
                            f"give either {name} or {name}_db, not both")
    if not has_lin and not has_db:
        if required:
            raise ScenarioError(f"{section_path}.{name}",
                                f"missing; give {name} or {name}_db")
        return None
    if has_db:
        path = f"{section_path}.{name}_db"
        value = db_to_linear(_number(path, section[f"{name}_db"]))
    else:
        path = f"{section_path}.{name}"
        value = _number(path, section[name])
    try:
        return Transmittance(value)
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from exc


@dataclass(frozen=True)
class Scenario:
    """Validated scenario: built domain objects plus the simulation fragment."""

    source: SourceSpec
    channel: ChannelSpec
    detector: DetectorSpec
    simulation: dict
    plan_path: Path | None

    def sim_config(self, **overrides) -> SimConfig:
        params = {**self.simulation, **overrides}
        return SimConfig(source=self.source, channel=self.channel,
                         detector=self.detector, **params)


def load_scenario_dict(path: "str | Path") -> dict:
    """Parse a scenario file and merge in defaults; no semantic validation yet.

    The returned dict is what sweeps mutate: every numeric leaf is a
    valid sweep parameter path.
    """
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioError("", f"cannot read scenario {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"scenario {p} is not valid JSON: {exc}") from exc
    raw = _require_object("", raw)
    merged = copy.deepcopy(SCENARIO_DEFAULTS)
    for key, value in raw.items():
        if key in ("source", "channel", "detector", "simulation"):
            section = _require_object(key, value)
            merged.setdefault(key, {})
            merged[key].update(copy.deepcopy(section))
            if key == "channel":
                # a linear transmittance replaces the defaulted dB form
                for name in ("alpha_r", "alpha_d"):
                    if name in section and f"{name}_db" not in section:
                        merged[key].pop(f"{name}_db", None)
        elif key == "plan":
            merged["plan"] = value
        else:
            raise ScenarioError(key, "unknown top-level section; expected "
                                     "source, channel, detector, simulation, plan")
    if "source" not in merged:
        raise ScenarioError("source", "missing; a scenario must define its source")
    merged["_dir"] = str(p.parent)
    return merged


def build_scenario(merged: dict) -> Scenario:
    """Validate a merged scenario dict and construct the domain objects."""
    src_raw = _require_object("source", merged.get("source"))
    _check_keys("source", src_raw, _SECTION_KEYS["source"])
    kind = src_raw.get("kind")
    if kind not in ("wcs", "hps"):
        raise ScenarioError("source.kind", f"must be 'wcs' or 'hps', got {kind!r}")
    if "mu" not in src_raw:
        raise ScenarioError("source.mu", "missing")
    mu = _number("source.mu", src_raw["mu"])
    if mu < 0.0:
        raise ScenarioError("source.mu", f"must be >= 0, got {mu}")
    if kind == "wcs":
        for name in ("alpha_s", "alpha_s_db", "beta", "beta_db"):
            if name in src_raw:
                raise ScenarioError(f"source.{name}", "not allowed for a WCS")
        source = SourceSpec.wcs(mu)
    else:
        alpha_s = _transmittance(src_raw, "source", "alpha_s", required=True)
        beta = _transmittance(src_raw, "source", "beta", required=True)
        source = SourceSpec.hps(mu, alpha_s, beta)

    ch_raw = _require_object("channel", merged.get("channel", {}))
    _check_keys("channel", ch_raw, _SECTION_KEYS["channel"])
    if "alpha_r" not in ch_raw and "alpha_r_db" not in ch_raw:
        ch_raw = {**ch_raw, "alpha_r_db": SCENARIO_DEFAULTS["channel"]["alpha_r_db"]}
    if "alpha_d" not in ch_raw and "alpha_d_db" not in ch_raw:
        ch_raw = {**ch_raw, "alpha_d_db": SCENARIO_DEFAULTS["channel"]["alpha_d_db"]}
    alpha_r = _transmittance(ch_raw, "channel", "alpha_r", required=True)
    alpha_d = _transmittance(ch_raw, "channel", "alpha_d", required=True)
    p_noise = _number("channel.p_noise", ch_raw.get("p_noise", 0.0))
    if not 0.0 <= p_noise < 1.0:
        raise ScenarioError("channel.p_noise", f"must be in [0, 1), got {p_noise}")
    channel = ChannelSpec(alpha_r, alpha_d, p_noise)

    det_raw = _require_object("detector", merged.get("detector", {}))
    _check_keys("detector", det_raw, _SECTION_KEYS["detector"])
    det_raw = {**SCENARIO_DEFAULTS["detector"], **det_raw}
    try:
        detector = DetectorSpec(
            pulse_rate_hz=_number("detector.pulse_rate_hz", det_raw["pulse_rate_hz"]),
            deadtime_s=_number("detector.deadtime_s", det_raw["deadtime_s"]),
            gate_width_s=_number("detector.gate_width_s", det_raw["gate_width_s"]),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError("detector", str(exc)) from exc

    sim_raw = _require_object("simulation", merged.get("simulation", {}))
    _check_keys("simulation", sim_raw, _SECTION_KEYS["simulation"])
    sim_raw = {**SCENARIO_DEFAULTS["simulation"], **sim_raw}
    n_slots = _integer("simulation.n_slots", sim_raw["n_slots"])
    if n_slots <= 0:
        raise ScenarioError("simulation.n_slots", f"must be > 0, got {n_slots}")
    seed = _integer("simulation.seed", sim_raw["seed"])
    if not 0 <= seed < 2 ** 64:
        raise ScenarioError("simulation.seed", f"must fit in 64 unsigned bits, got {seed}")
    noise_model = sim_raw["noise_model"]
    if noise_model not in NOISE_MODELS:
        raise ScenarioError("simulation.noise_model",
                            f"must be one of {list(NOISE_MODELS)}, got {noise_model!r}")
    simulation = {
        "n_slots": n_slots,
        "seed": seed,
        "noise_model": noise_model,
        "apply_herald_deadtime": _boolean("simulation.apply_herald_deadtime",
                                          sim_raw["apply_herald_deadtime"]),
        "hbt_enabled": _boolean("simulation.hbt_enabled", sim_raw["hbt_enabled"]),
        "hbt_noise_coupling": _boolean("simulation.hbt_noise_coupling",
                                       sim_raw["hbt_noise_coupling"]),
        "apply_receiver_deadtime": _boolean("simulation.apply_receiver_deadtime",
                                            sim_raw["apply_receiver_deadtime"]),
    }
    if simulation["apply_herald_deadtime"] and kind == "wcs":
        raise ScenarioError("simulation.apply_herald_deadtime",
                            "requires an HPS source; a WCS has no herald detector")
    if simulation["hbt_noise_coupling"] and not simulation["hbt_enabled"]:
        raise ScenarioError("simulation.hbt_noise_coupling", "requires hbt_enabled")

    plan_path = None
    if merged.get("plan") is not None:
        if not isinstance(merged["plan"], str):
            raise ScenarioError("plan", f"must be a path string, got {merged['plan']!r}")
        plan_path = Path(merged.get("_dir", ".")) / merged["plan"]

    return Scenario(source, channel, detector, simulation, plan_path)


def load_scenario(path: "str | Path") -> Scenario:
    return build_scenario(load_scenario_dict(path))


def numeric_leaf_paths(merged: dict) -> list[str]:
    """Dotted paths of every sweepable (numeric, non-boolean) leaf."""
    paths = []
    for section in ("source", "channel", "detector", "simulation"):
        fragment = merged.get(section)
        if not isinstance(fragment, dict):
            continue
        for key in sorted(fragment):
            value = fragment[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                continue
            paths.append(f"{section}.{key}")
    return paths


def set_path(merged: dict, dotted: str, value: float) -> dict:
    """Copy of the merged dict with one numeric leaf replaced."""
    if dotted not in numeric_leaf_paths(merged):
        raise ScenarioError(dotted, "not a sweepable parameter; valid paths: "
                                    + ", ".join(numeric_leaf_paths(merged)))
    section, key = dotted.split(".", 1)
    out = copy.deepcopy(merged)
    if key in ("n_slots", "seed"):
        out[section][key] = _integer(dotted, value)
    else:
        out[section][key] = value
    return out
