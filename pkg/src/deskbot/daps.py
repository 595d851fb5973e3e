"""Modular data acquisition and processing.

Sensors plug into a registry as descriptors (what to sample, how often,
which software filter), with synthetic random-walk sources standing in
for physical hardware; a real driver would implement the same one-method
sample interface.  Raw signals are filtered in software, and every
accepted sample is appended to a local JSON-lines log before it is
acknowledged, so stored data survives a process restart with no external
database involved.

Capacity is six sensors and six actuators, enforced symmetrically.
"""

from __future__ import annotations

import json
import os
import random
import statistics
import threading
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

MAX_SENSORS = 6
MAX_ACTUATORS = 6


class DapsError(Exception):
    """Base class for acquisition-subsystem errors."""


class CapacityError(DapsError):
    """Registry already holds the maximum number of devices."""


class DuplicateIdError(DapsError):
    """Device id already registered."""


class UnknownSensorError(DapsError, KeyError):
    """Sensor id never registered and absent from the store."""


class FilterError(DapsError, ValueError):
    """Filter applied to input it cannot handle."""


class SensorKind(Enum):
    CO = "CO"
    NO = "NO"
    TEMPERATURE = "Temperature"
    HUMIDITY = "Humidity"
    SMOKE = "Smoke"
    CUSTOM = "Custom"


class FilterKind(Enum):
    NONE = "None"
    MOVING_AVERAGE = "MovingAverage"


@dataclass(frozen=True)
class FilterSpec:
    kind: FilterKind = FilterKind.NONE
    window: int = 1

    def __post_init__(self) -> None:
        if self.window < 1:
            raise FilterError(f"window must be >= 1, got {self.window}")


@dataclass(frozen=True)
class SensorDescriptor:
    """Registry entry: identity, kind, cadence and filtering of a sensor."""

    sensor_id: str
    kind: SensorKind
    unit: str
    sample_period_ms: int
    filter: FilterSpec = field(default_factory=FilterSpec)

    def __post_init__(self) -> None:
        if not self.sensor_id or not all(c.isalnum() or c in "-_" for c in self.sensor_id):
            raise DapsError(f"sensor id must be [A-Za-z0-9_-]+, got {self.sensor_id!r}")
        if self.sample_period_ms < 1:
            raise DapsError("sample_period_ms must be >= 1")


@dataclass(frozen=True)
class SensorSample:
    sensor_id: str
    t_ms: int
    raw: float
    filtered: float


def filter_apply(spec: FilterSpec, history: Sequence[float]) -> float:
    """Filter the newest reading given the raw history (newest last).

    The moving average covers the last min(window, len) raws; shorter
    histories average what exists instead of padding.  The mean is
    computed exactly and rounded once, so a constant series filters to
    exactly that constant for any window.
    """
    if len(history) == 0:
        raise FilterError("cannot filter an empty history")
    if spec.kind == FilterKind.NONE:
        return history[-1]
    tail = list(history)[-spec.window:]
    return statistics.mean(tail)


# Plausible value ranges for the synthetic stand-in sources, by kind.
SYNTHETIC_RANGES: dict[SensorKind, tuple[float, float]] = {
    SensorKind.CO: (0.0, 50.0),
    SensorKind.NO: (0.0, 30.0),
    SensorKind.TEMPERATURE: (15.0, 35.0),
    SensorKind.HUMIDITY: (20.0, 90.0),
    SensorKind.SMOKE: (0.0, 100.0),
    SensorKind.CUSTOM: (0.0, 1.0),
}


class SyntheticSource:
    """Deterministic bounded random walk standing in for a physical sensor.

    The walk is a pure function of (kind, seed, call sequence): the same
    seed always reproduces the same series.  Values are clamped to the
    per-kind range.
    """

    def __init__(self, kind: SensorKind, seed: int | str) -> None:
        self.kind = kind
        lo, hi = SYNTHETIC_RANGES[kind]
        self.lo = lo
        self.hi = hi
        self._rng = random.Random(f"{kind.value}:{seed}")
        self._value = lo + (hi - lo) * self._rng.random()
        self._step = (hi - lo) / 50.0

    def sample(self, t_ms: int) -> float:
        self._value += self._rng.uniform(-self._step, self._step)
        self._value = min(max(self._value, self.lo), self.hi)
        return self._value


class SampleStore:
    """Append-only sample persistence: one JSON-lines file per sensor.

    Lines are flushed before a sample is acknowledged, and the in-memory
    index is rebuilt from the files on startup, so a restart loses
    nothing.  Writes are serialized by a lock; queries copy a snapshot
    and never block appends for long.
    """

    def __init__(self, directory) -> None:
        self.directory = str(directory)
        os.makedirs(self.directory, exist_ok=True)
        self._lock = threading.Lock()
        self._samples: dict[str, list[SensorSample]] = {}
        self._files: dict[str, object] = {}
        for name in sorted(os.listdir(self.directory)):
            if name.endswith(".jsonl"):
                self._load(name[: -len(".jsonl")])

    def _path(self, sensor_id: str) -> str:
        return os.path.join(self.directory, f"{sensor_id}.jsonl")

    def _load(self, sensor_id: str) -> None:
        samples: list[SensorSample] = []
        with open(self._path(sensor_id), "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                samples.append(
                    SensorSample(obj["id"], int(obj["t"]), float(obj["raw"]), float(obj["filt"]))
                )
        self._samples[sensor_id] = samples

    def track(self, sensor_id: str) -> None:
        """Make a sensor id known to the store before its first sample."""
        with self._lock:
            self._samples.setdefault(sensor_id, [])

    def append(self, sample: SensorSample) -> None:
        """Durably append one sample; raises on I/O failure, never drops."""
        line = json.dumps(
            {"id": sample.sensor_id, "t": sample.t_ms, "raw": sample.raw, "filt": sample.filtered},
            separators=(",", ":"),
        )
        with self._lock:
            fh = self._files.get(sample.sensor_id)
            if fh is None:
                fh = open(self._path(sample.sensor_id), "a", encoding="utf-8")
                self._files[sample.sensor_id] = fh
            fh.write(line + "\n")
            fh.flush()
            self._samples.setdefault(sample.sensor_id, []).append(sample)

    def query(
        self, sensor_id: str, t_from: int | None = None, t_to: int | None = None
    ) -> list[SensorSample]:
        """Samples for a sensor in [t_from, t_to], time-ordered."""
        with self._lock:
            if sensor_id not in self._samples:
                raise UnknownSensorError(sensor_id)
            snapshot = list(self._samples[sensor_id])
        lo = t_from if t_from is not None else -1
        hi = t_to if t_to is not None else float("inf")
        return [s for s in snapshot if lo <= s.t_ms <= hi]

    def known_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._samples)

    def close(self) -> None:
        with self._lock:
            for fh in self._files.values():
                fh.close()
            self._files.clear()


class ActiveSensor:
    """A registered sensor bound to its source, filter window and history."""

    def __init__(self, descriptor: SensorDescriptor, source: Callable[[int], float]) -> None:
        self.descriptor = descriptor
        self.source = source
        window = max(descriptor.filter.window, 1)
        self.history: deque[float] = deque(maxlen=window)
        self.next_due_ms = 0
        self.last_t_ms = -1
        self.last_filtered: float | None = None

    def due(self, t_ms: int) -> bool:
        return t_ms >= self.next_due_ms

    def sample(self, t_ms: int) -> SensorSample:
        if t_ms <= self.last_t_ms:
            raise DapsError(f"sample times must increase, got {t_ms} after {self.last_t_ms}")
        raw = self.source(t_ms)
        self.history.append(raw)
        filtered = filter_apply(self.descriptor.filter, self.history)
        self.last_t_ms = t_ms
        self.last_filtered = filtered
        self.next_due_ms = t_ms + self.descriptor.sample_period_ms
        return SensorSample(self.descriptor.sensor_id, t_ms, raw, filtered)


@dataclass(frozen=True)
class ActuatorDescriptor:
    actuator_id: str
    channel: int

    def __post_init__(self) -> None:
        if not (0 <= self.channel < MAX_ACTUATORS):
            raise DapsError(f"actuator channel must be 0..{MAX_ACTUATORS - 1}")


class Registry:
    """Holds the active sensors and actuators, enforcing the capacity of
    six each.  Register/unregister may be called from request handlers;
    the tick thread iterates a snapshot."""

    def __init__(self, store: SampleStore | None = None) -> None:
        self.store = store
        self._lock = threading.Lock()
        self._sensors: dict[str, ActiveSensor] = {}
        self._actuators: dict[str, ActuatorDescriptor] = {}

    def register_sensor(
        self, descriptor: SensorDescriptor, source: Callable[[int], float] | None = None, seed: int = 0
    ) -> ActiveSensor:
        with self._lock:
            if descriptor.sensor_id in self._sensors:
                raise DuplicateIdError(descriptor.sensor_id)
            if len(self._sensors) >= MAX_SENSORS:
                raise CapacityError(f"registry is full ({MAX_SENSORS} sensors)")
            if source is None:
                source = SyntheticSource(descriptor.kind, seed).sample
            active = ActiveSensor(descriptor, source)
            self._sensors[descriptor.sensor_id] = active
        if self.store is not None:
            self.store.track(descriptor.sensor_id)
        return active

    def unregister_sensor(self, sensor_id: str) -> None:
        with self._lock:
            if sensor_id not in self._sensors:
                raise UnknownSensorError(sensor_id)
            del self._sensors[sensor_id]

    def register_actuator(self, descriptor: ActuatorDescriptor) -> None:
        with self._lock:
            if descriptor.actuator_id in self._actuators:
                raise DuplicateIdError(descriptor.actuator_id)
            if len(self._actuators) >= MAX_ACTUATORS:
                raise CapacityError(f"registry is full ({MAX_ACTUATORS} actuators)")
            self._actuators[descriptor.actuator_id] = descriptor

    def unregister_actuator(self, actuator_id: str) -> None:
        with self._lock:
            if actuator_id not in self._actuators:
                raise DapsError(f"unknown actuator {actuator_id!r}")
            del self._actuators[actuator_id]

    def sensors(self) -> list[ActiveSensor]:
        with self._lock:
            return list(self._sensors.values())

    def actuators(self) -> list[ActuatorDescriptor]:
        with self._lock:
            return list(self._actuators.values())

    def sample_due(self, t_ms: int) -> list[SensorSample]:
        """Sample every sensor whose period has elapsed; store and return.

        Runs on the tick thread.  Storage errors surface to the caller,
        they are never swallowed.
        """
        out: list[SensorSample] = []
        for active in self.sensors():
            if active.due(t_ms):
                sample = active.sample(t_ms)
                if self.store is not None:
                    self.store.append(sample)
                out.append(sample)
        return out

    def latest_filtered(self) -> dict[str, float]:
        values: dict[str, float] = {}
        for active in self.sensors():
            if active.last_filtered is not None:
                values[active.descriptor.sensor_id] = active.last_filtered
        return values
