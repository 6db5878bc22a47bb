"""Scenario files: a flat, versioned JSON document mirroring the Scenario type.

Unknown keys are rejected so typos fail loudly.  Units: every duration/period
is seconds, bandwidth and carrier_freq are Hz, packet_size is bytes, control
signals are per-unit.  See the README for the full schema.
"""

from __future__ import annotations

import dataclasses
import json
from importlib import resources
from pathlib import Path
from typing import Optional

from .control import Event
from .engine import (
    CentralConfig,
    ChannelConfig,
    DerSpec,
    EngineConfig,
    FIVE_G,
    IDEAL,
    Scenario,
)
from .errors import ScenarioError
from .ran import RanConfig

SCHEMA_VERSION = 1

_TOP_KEYS = {
    "schema_version", "name", "duration", "seed", "sample_period", "mode",
    "ran", "channel", "central", "engine", "ders", "topology", "events",
}
_RAN_KEYS = {
    "aggregated_carriers", "modulation_orders", "max_layers", "scaling_factor",
    "max_code_rate", "numerology", "total_rbs", "rbs_per_der", "overhead",
    "tti", "bsr_period", "packet_size", "bandwidth", "carrier_freq",
}
_CHANNEL_KEYS = {"model", "markov_stay_prob", "shared_across_carriers", "infinite_budget"}
_CENTRAL_KEYS = {"enabled", "cutoff_hz"}
_ENGINE_KEYS = {"substeps_per_tti", "queue_cap", "plant_discretization"}
_DER_KEYS = {"id", "gain", "pred_horizon", "tau_p", "x0", "setpoint0"}
_EVENT_KEYS = {"t", "kind", "ders", "value", "direction"}


class _Collector:
    def __init__(self):
        self.problems: list[str] = []

    def add(self, path: str, message: str) -> None:
        self.problems.append(f"{path}: {message}")

    def check_keys(self, obj: dict, allowed: set, path: str) -> None:
        for key in obj:
            if key not in allowed:
                self.add(f"{path}.{key}", "unknown key")

    def num(self, obj: dict, key: str, path: str, default):
        value = obj.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.add(f"{path}.{key}", f"expected a number, got {value!r}")
            return default
        return value

    def integer(self, obj: dict, key: str, path: str, default):
        value = obj.get(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            self.add(f"{path}.{key}", f"expected an integer, got {value!r}")
            return default
        return value

    def boolean(self, obj: dict, key: str, path: str, default):
        value = obj.get(key, default)
        if not isinstance(value, bool):
            self.add(f"{path}.{key}", f"expected true/false, got {value!r}")
            return default
        return value

    def string(self, obj: dict, key: str, path: str, default):
        value = obj.get(key, default)
        if not isinstance(value, str):
            self.add(f"{path}.{key}", f"expected a string, got {value!r}")
            return default
        return value


def parse_scenario(document: dict) -> tuple[Optional[Scenario], list[str]]:
    """Build a Scenario from a parsed document, returning every diagnostic."""
    c = _Collector()
    if not isinstance(document, dict):
        return None, ["$: scenario document must be a JSON object"]
    c.check_keys(document, _TOP_KEYS, "$")
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        c.add("$.schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    name = c.string(document, "name", "$", "")
    duration = c.num(document, "duration", "$", 0.0)
    if "duration" not in document:
        c.add("$.duration", "required")
    seed = c.integer(document, "seed", "$", 1)
    sample_period = c.num(document, "sample_period", "$", 1e-3)
    mode = c.string(document, "mode", "$", FIVE_G)
    if mode not in (IDEAL, FIVE_G):
        c.add("$.mode", f"must be '{IDEAL}' or '{FIVE_G}', got {mode!r}")
        mode = FIVE_G

    ran_obj = document.get("ran", {})
    ran = RanConfig()
    if not isinstance(ran_obj, dict):
        c.add("$.ran", "expected an object")
    else:
        c.check_keys(ran_obj, _RAN_KEYS, "$.ran")
        mods = ran_obj.get("modulation_orders", list(ran.modulation_orders))
        if not isinstance(mods, list) or not all(
            isinstance(m, int) and not isinstance(m, bool) for m in mods
        ):
            c.add("$.ran.modulation_orders", "expected a list of integers")
            mods = list(ran.modulation_orders)
        ran = RanConfig(
            aggregated_carriers=c.integer(ran_obj, "aggregated_carriers", "$.ran", ran.aggregated_carriers),
            modulation_orders=tuple(mods),
            max_layers=c.integer(ran_obj, "max_layers", "$.ran", ran.max_layers),
            scaling_factor=c.num(ran_obj, "scaling_factor", "$.ran", ran.scaling_factor),
            max_code_rate=c.num(ran_obj, "max_code_rate", "$.ran", ran.max_code_rate),
            numerology=c.integer(ran_obj, "numerology", "$.ran", ran.numerology),
            total_rbs=c.integer(ran_obj, "total_rbs", "$.ran", ran.total_rbs),
            rbs_per_der=c.integer(ran_obj, "rbs_per_der", "$.ran", ran.rbs_per_der),
            overhead=c.num(ran_obj, "overhead", "$.ran", ran.overhead),
            tti=c.num(ran_obj, "tti", "$.ran", ran.tti),
            bsr_period=c.num(ran_obj, "bsr_period", "$.ran", ran.bsr_period),
            packet_size=c.integer(ran_obj, "packet_size", "$.ran", ran.packet_size),
            bandwidth=c.num(ran_obj, "bandwidth", "$.ran", ran.bandwidth),
            carrier_freq=c.num(ran_obj, "carrier_freq", "$.ran", ran.carrier_freq),
        )

    chan_obj = document.get("channel", {})
    channel = ChannelConfig()
    if not isinstance(chan_obj, dict):
        c.add("$.channel", "expected an object")
    else:
        c.check_keys(chan_obj, _CHANNEL_KEYS, "$.channel")
        channel = ChannelConfig(
            model=c.string(chan_obj, "model", "$.channel", channel.model),
            markov_stay_prob=c.num(chan_obj, "markov_stay_prob", "$.channel", channel.markov_stay_prob),
            shared_across_carriers=c.boolean(chan_obj, "shared_across_carriers", "$.channel", False),
            infinite_budget=c.boolean(chan_obj, "infinite_budget", "$.channel", False),
        )

    central_obj = document.get("central", {})
    central = CentralConfig()
    if not isinstance(central_obj, dict):
        c.add("$.central", "expected an object")
    else:
        c.check_keys(central_obj, _CENTRAL_KEYS, "$.central")
        central = CentralConfig(
            enabled=c.boolean(central_obj, "enabled", "$.central", False),
            cutoff_hz=c.num(central_obj, "cutoff_hz", "$.central", central.cutoff_hz),
        )

    engine_obj = document.get("engine", {})
    engine = EngineConfig()
    if not isinstance(engine_obj, dict):
        c.add("$.engine", "expected an object")
    else:
        c.check_keys(engine_obj, _ENGINE_KEYS, "$.engine")
        engine = EngineConfig(
            substeps_per_tti=c.integer(engine_obj, "substeps_per_tti", "$.engine", engine.substeps_per_tti),
            queue_cap=c.integer(engine_obj, "queue_cap", "$.engine", engine.queue_cap),
            plant_discretization=c.string(
                engine_obj, "plant_discretization", "$.engine", engine.plant_discretization
            ),
        )

    ders = []
    ders_obj = document.get("ders")
    if not isinstance(ders_obj, list) or not ders_obj:
        c.add("$.ders", "expected a non-empty list of DER objects")
    else:
        for i, entry in enumerate(ders_obj):
            path = f"$.ders[{i}]"
            if not isinstance(entry, dict):
                c.add(path, "expected an object")
                continue
            c.check_keys(entry, _DER_KEYS, path)
            if "id" not in entry:
                c.add(f"{path}.id", "required")
            spec = DerSpec(der_id=1)
            ders.append(
                DerSpec(
                    der_id=c.integer(entry, "id", path, 0),
                    gain=c.num(entry, "gain", path, spec.gain),
                    pred_horizon=c.num(entry, "pred_horizon", path, spec.pred_horizon),
                    tau_p=c.num(entry, "tau_p", path, spec.tau_p),
                    x0=c.num(entry, "x0", path, spec.x0),
                    setpoint0=c.num(entry, "setpoint0", path, spec.setpoint0),
                )
            )

    adjacency = document.get("topology")
    if not isinstance(adjacency, list) or not all(isinstance(r, list) for r in adjacency or []):
        c.add("$.topology", "expected the full adjacency matrix (list of rows)")
        adjacency = [[0] * len(ders) for _ in ders]

    events = []
    events_obj = document.get("events", [])
    if not isinstance(events_obj, list):
        c.add("$.events", "expected a list")
    else:
        for i, entry in enumerate(events_obj):
            path = f"$.events[{i}]"
            if not isinstance(entry, dict):
                c.add(path, "expected an object")
                continue
            c.check_keys(entry, _EVENT_KEYS, path)
            targets = entry.get("ders")
            if not isinstance(targets, list) or not all(
                isinstance(d, int) and not isinstance(d, bool) for d in targets or []
            ):
                c.add(f"{path}.ders", "expected a list of DER ids")
                targets = []
            events.append(
                Event(
                    t=c.num(entry, "t", path, 0.0),
                    kind=c.string(entry, "kind", path, ""),
                    ders=tuple(targets),
                    value=c.num(entry, "value", path, 0.0),
                    direction=c.string(entry, "direction", path, "both"),
                )
            )

    scenario = Scenario(
        duration=duration,
        ders=ders,
        adjacency=adjacency,
        events=events,
        seed=seed,
        ran=ran,
        channel=channel,
        central=central,
        engine=engine,
        sample_period=sample_period,
        mode=mode,
        name=name,
    )
    problems = c.problems + [f"$: {p}" for p in scenario.validate()]
    return (None, problems) if problems else (scenario, [])


def list_presets() -> list[str]:
    root = resources.files("grid5g").joinpath("presets")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario_bytes(path_or_preset: str) -> tuple[bytes, str]:
    """Read a scenario file, falling back to a bundled preset name."""
    path = Path(path_or_preset)
    if path.exists():
        return path.read_bytes(), str(path)
    preset = resources.files("grid5g").joinpath("presets", f"{path_or_preset}.json")
    if preset.is_file():
        return preset.read_bytes(), f"preset:{path_or_preset}"
    raise ScenarioError(
        [f"$: no such file or preset {path_or_preset!r} (presets: {', '.join(list_presets())})"]
    )


def load_scenario(
    path_or_preset: str,
    seed: Optional[int] = None,
    mode: Optional[str] = None,
) -> tuple[Scenario, bytes, str]:
    """Load and fully validate a scenario, applying seed/mode overrides.

    Raises ScenarioError carrying every diagnostic found.
    """
    raw, source = resolve_scenario_bytes(path_or_preset)
    try:
        document = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            [f"$: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"]
        ) from exc
    scenario, problems = parse_scenario(document)
    if problems or scenario is None:
        raise ScenarioError(problems or ["$: unparseable scenario"])
    if seed is not None:
        scenario = dataclasses.replace(scenario, seed=seed)
    if mode is not None:
        scenario = dataclasses.replace(scenario, mode=mode)
    return scenario, raw, source
