"""Run configuration and scenario scripts.

Both are JSON files with a strict schema: unknown keys are rejected so
a typo in an experiment setup fails loudly at startup instead of being
silently ignored.  Error messages carry the JSON line for syntax errors
and the dotted key path for schema errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .daps import FilterKind, FilterSpec, Registry, SampleStore, SensorDescriptor, SensorKind, SyntheticSource
from .deadreckoning import BEARING_ENCODINGS, TripLogWriter
from .kinematics import ChassisParams
from .simulation import ScenarioStep, Simulation, parse_command


class ConfigError(ValueError):
    """Configuration file rejected; message states where and why."""


class ScenarioError(ValueError):
    """Scenario script rejected; message states which step and why."""


def _require(obj: dict, path: str, known: set[str]) -> None:
    extra = set(obj) - known
    if extra:
        raise ConfigError(f"{path}: unknown key(s) {sorted(extra)}")


def _number(obj: dict, key: str, path: str, default: float) -> float:
    v = obj.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _integer(obj: dict, key: str, path: str, default: int) -> int:
    v = obj.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    return v


@dataclass
class RunConfig:
    """Validated launch parameters for one simulator run."""

    chassis: ChassisParams = field(default_factory=ChassisParams)
    sensors: list[SensorDescriptor] = field(default_factory=list)
    listen_addr: str | None = None
    tick_ms: int = 10
    seed: int = 0
    bearing_encoding: str = "byte"
    compass_noise: bool = False


def _parse_filter(obj: object, path: str) -> FilterSpec:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    _require(obj, path, {"kind", "window"})
    kind_name = obj.get("kind", "None")
    try:
        kind = FilterKind(kind_name)
    except ValueError:
        raise ConfigError(f"{path}.kind: unknown filter kind {kind_name!r}") from None
    window = _integer(obj, "window", path, 1)
    if window < 1:
        raise ConfigError(f"{path}.window: must be >= 1")
    return FilterSpec(kind, window)


def _parse_sensor(obj: object, path: str, tick_ms: int) -> SensorDescriptor:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    _require(obj, path, {"id", "kind", "unit", "sample_period_ms", "filter"})
    sensor_id = obj.get("id")
    if not isinstance(sensor_id, str) or not sensor_id:
        raise ConfigError(f"{path}.id: expected a non-empty string")
    kind_name = obj.get("kind", "Custom")
    try:
        kind = SensorKind(kind_name)
    except ValueError:
        raise ConfigError(f"{path}.kind: unknown sensor kind {kind_name!r}") from None
    unit = obj.get("unit", "")
    if not isinstance(unit, str):
        raise ConfigError(f"{path}.unit: expected a string")
    period = _integer(obj, "sample_period_ms", path, 100)
    if period < tick_ms:
        raise ConfigError(f"{path}.sample_period_ms: must be >= tick_ms ({tick_ms})")
    filt = _parse_filter(obj.get("filter", {}), f"{path}.filter")
    try:
        return SensorDescriptor(sensor_id, kind, unit, period, filt)
    except Exception as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config document."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config: expected a JSON object at top level")
    _require(
        obj,
        "config",
        {"chassis", "sensors", "listen_addr", "tick_ms", "seed", "bearing_encoding", "compass_noise"},
    )

    tick_ms = _integer(obj, "tick_ms", "config", 10)
    if tick_ms < 1:
        raise ConfigError("config.tick_ms: must be >= 1")

    chassis_obj = obj.get("chassis", {})
    if not isinstance(chassis_obj, dict):
        raise ConfigError("config.chassis: expected an object")
    _require(chassis_obj, "config.chassis", {"wheel_circumference_m", "track_width_m", "wheel_speed_mps"})
    try:
        chassis = ChassisParams(
            wheel_circumference_m=_number(chassis_obj, "wheel_circumference_m", "config.chassis", 0.2),
            track_width_m=_number(chassis_obj, "track_width_m", "config.chassis", 0.2),
            wheel_speed_mps=_number(chassis_obj, "wheel_speed_mps", "config.chassis", 0.1),
            tick_s=tick_ms / 1000.0,
        )
    except ValueError as exc:
        raise ConfigError(f"config.chassis: {exc}") from exc

    encoding = obj.get("bearing_encoding", "byte")
    if encoding not in ("byte", "word"):
        raise ConfigError(f"config.bearing_encoding: expected 'byte' or 'word', got {encoding!r}")

    noise = obj.get("compass_noise", False)
    if not isinstance(noise, bool):
        raise ConfigError("config.compass_noise: expected true or false")

    listen = obj.get("listen_addr")
    if listen is not None and not isinstance(listen, str):
        raise ConfigError("config.listen_addr: expected a 'host:port' string")

    sensors_obj = obj.get("sensors", [])
    if not isinstance(sensors_obj, list):
        raise ConfigError("config.sensors: expected an array")
    sensors = [
        _parse_sensor(item, f"config.sensors[{i}]", tick_ms) for i, item in enumerate(sensors_obj)
    ]
    ids = [s.sensor_id for s in sensors]
    if len(set(ids)) != len(ids):
        raise ConfigError("config.sensors: duplicate sensor id")
    if len(sensors) > 6:
        raise ConfigError("config.sensors: at most 6 sensors")

    return RunConfig(
        chassis=chassis,
        sensors=sensors,
        listen_addr=listen,
        tick_ms=tick_ms,
        seed=_integer(obj, "seed", "config", 0),
        bearing_encoding=encoding,
        compass_noise=noise,
    )


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def parse_scenario(text: str) -> list[ScenarioStep]:
    """Parse and validate a scenario script: [{"at_ms": n, "command": {...}}]."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, list):
        raise ScenarioError("scenario: expected a JSON array of steps")
    steps: list[ScenarioStep] = []
    last_at = 0
    for i, item in enumerate(obj):
        where = f"scenario[{i}]"
        if not isinstance(item, dict):
            raise ScenarioError(f"{where}: expected an object")
        extra = set(item) - {"at_ms", "command"}
        if extra:
            raise ScenarioError(f"{where}: unknown key(s) {sorted(extra)}")
        at_ms = item.get("at_ms")
        if isinstance(at_ms, bool) or not isinstance(at_ms, int) or at_ms < 0:
            raise ScenarioError(f"{where}.at_ms: expected a non-negative integer")
        if at_ms < last_at:
            raise ScenarioError(f"{where}.at_ms: timestamps must be non-decreasing")
        last_at = at_ms
        try:
            cmd = parse_command(item.get("command"))
        except ValueError as exc:
            raise ScenarioError(f"{where}.command: {exc}") from exc
        steps.append(ScenarioStep(at_ms, cmd))
    return steps


def load_scenario(path) -> list[ScenarioStep]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text)


def assemble(config: RunConfig, out_dir: Path | None) -> Simulation:
    """Build a Simulation from a config: sample store, synthetic sensors
    seeded from the run seed, and the trip log under out_dir."""
    store = None
    trip_log = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        store = SampleStore(out_dir / "samples")
        trip_log = TripLogWriter(out_dir / "trip.jsonl")
    registry = Registry(store)
    for desc in config.sensors:
        source = SyntheticSource(desc.kind, f"{config.seed}:{desc.sensor_id}")
        registry.register_sensor(desc, source.sample)
    return Simulation(
        params=config.chassis,
        tick_ms=config.tick_ms,
        bearing_encoding=config.bearing_encoding,
        compass_noise=config.compass_noise,
        seed=config.seed,
        registry=registry,
        trip_log=trip_log,
    )
