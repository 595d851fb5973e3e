"""The authoritative simulation tick loop.

One thread owns all mutable world state: the ground-truth pose, the
emulated peripherals, the dead-reckoning recorder and the sensor
registry.  Everything else talks to it through two narrow channels:

  * commands go in through a serialized queue and take effect at the
    next tick boundary (the acknowledgment carries that tick number);
  * state comes out as immutable TelemetryFrame snapshots, one per
    tick, fanned out to listeners that must never block.

Stepping is pure sim time.  The interactive runner paces ticks against
the wall clock; scenario replay steps as fast as it can, which is why
two runs with the same seed produce byte-identical traces.
"""

from __future__ import annotations

import json
import math
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable

from . import deadreckoning, kinematics, peripherals
from .daps import MAX_ACTUATORS, Registry
from .deadreckoning import TripRecorder
from .kinematics import ChassisParams, DriveCommand, Pose, TRACE_FIELDS

COMMAND_KINDS = ("Drive", "TripReset", "ActuatorSet", "Subscribe")


class CommandError(ValueError):
    """Command message is malformed or out of range."""


@dataclass(frozen=True)
class CommandMessage:
    """One decoded control-plane command."""

    kind: str
    drive: DriveCommand | None = None
    channel: int | None = None
    value: int | None = None


def parse_command(obj: object) -> CommandMessage:
    """Validate a decoded JSON body into a CommandMessage.

    Strict: exactly the fields for the kind must be present (plus the
    optional session envelope, which the service strips before this).
    Unknown kinds, missing or extra fields, wrong types and actuator
    channels outside 0..5 are all rejected here, before queueing, so a
    queued command can never fail to apply.
    """
    if not isinstance(obj, dict):
        raise CommandError("command must be a JSON object")
    kind = obj.get("kind")
    if kind not in COMMAND_KINDS:
        raise CommandError(f"unknown command kind {kind!r}")
    allowed = {"kind"}
    if kind == "Drive":
        allowed.add("drive")
    elif kind == "ActuatorSet":
        allowed.update(("channel", "value"))
    extra = set(obj) - allowed
    if extra:
        raise CommandError(f"unexpected fields for {kind}: {sorted(extra)}")

    if kind == "Drive":
        name = obj.get("drive")
        try:
            drive = DriveCommand(name)
        except ValueError:
            raise CommandError(f"unknown drive direction {name!r}") from None
        return CommandMessage(kind, drive=drive)
    if kind == "ActuatorSet":
        channel = obj.get("channel")
        value = obj.get("value")
        if not isinstance(channel, int) or isinstance(channel, bool):
            raise CommandError("ActuatorSet needs an integer channel")
        if not (0 <= channel < MAX_ACTUATORS):
            raise CommandError(f"actuator channel out of range 0..{MAX_ACTUATORS - 1}: {channel}")
        if not isinstance(value, int) or isinstance(value, bool):
            raise CommandError("ActuatorSet needs an integer value")
        return CommandMessage(kind, channel=channel, value=value)
    return CommandMessage(kind)


@dataclass(frozen=True)
class TelemetryFrame:
    """Consistent snapshot of one completed tick."""

    t_ms: int
    bearing_deg: float
    bearing_byte: int
    pose_est: tuple[float, float]
    footprints: tuple[tuple[float, float], ...]
    total_distance_m: float
    net_displacement_m: float
    sensors: dict[str, float]
    drive_state: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "t_ms": self.t_ms,
                "bearing_deg": self.bearing_deg,
                "bearing_byte": self.bearing_byte,
                "pose_est": list(self.pose_est),
                "footprints": [list(v) for v in self.footprints],
                "total_distance_m": self.total_distance_m,
                "net_displacement_m": self.net_displacement_m,
                "sensors": self.sensors,
                "drive_state": self.drive_state,
            },
            separators=(",", ":"),
        )


@dataclass
class PendingCommand:
    """A queued command waiting for its tick."""

    message: CommandMessage
    applied_tick: int | None = None
    done: threading.Event = field(default_factory=threading.Event)

    def wait(self, timeout: float = 5.0) -> int:
        if not self.done.wait(timeout):
            raise TimeoutError("command was never applied; is the tick loop running?")
        assert self.applied_tick is not None
        return self.applied_tick


class Simulation:
    """World state plus the estimator and sensor pipeline, advanced tick
    by tick.  step() must only ever be called from one thread."""

    def __init__(
        self,
        params: ChassisParams | None = None,
        tick_ms: int = 10,
        bearing_encoding: str = "byte",
        compass_noise: bool = False,
        seed: int = 0,
        registry: Registry | None = None,
        trip_log: deadreckoning.TripLogWriter | None = None,
    ) -> None:
        self.params = params or ChassisParams(tick_s=tick_ms / 1000.0)
        if not math.isclose(self.params.tick_s, tick_ms / 1000.0):
            raise kinematics.ChassisConfigError("tick_ms and params.tick_s disagree")
        self.tick_ms = tick_ms
        self.tick = 0  # completed ticks; tick n covers ((n-1)*dt, n*dt]
        self.pose = Pose()
        self.drive = DriveCommand.STOP
        self.registry = registry if registry is not None else Registry()
        self.recorder = TripRecorder(
            self.params,
            peripherals.SEGMENTS_PER_REV,
            encoding=bearing_encoding,
            log=trip_log,
        )
        self.enc_l = peripherals.EncoderState(peripherals.WHEEL_LEFT)
        self.enc_r = peripherals.EncoderState(peripherals.WHEEL_RIGHT)
        self.emit_l = kinematics.EdgeEmitter(
            self.params.wheel_circumference_m, peripherals.SEGMENTS_PER_REV
        )
        self.emit_r = kinematics.EdgeEmitter(
            self.params.wheel_circumference_m, peripherals.SEGMENTS_PER_REV
        )
        self.actuators: list[int | None] = [None] * MAX_ACTUATORS
        self._noise = random.Random(f"compass:{seed}") if compass_noise else None
        self._queue: list[PendingCommand] = []
        self._queue_lock = threading.Lock()
        self._frame_listeners: list[Callable[[TelemetryFrame], None]] = []
        self.last_frame: TelemetryFrame | None = None

    # -- command intake (any thread) --------------------------------

    def submit(self, message: CommandMessage) -> PendingCommand:
        """Queue a command for the next tick boundary."""
        pending = PendingCommand(message)
        with self._queue_lock:
            self._queue.append(pending)
        return pending

    def on_frame(self, listener: Callable[[TelemetryFrame], None]) -> None:
        """Register a per-tick snapshot listener; it must not block."""
        self._frame_listeners.append(listener)

    # -- tick thread -------------------------------------------------

    def compass_reading(self) -> peripherals.CompassReading:
        """Sample the compass at the current ground-truth heading."""
        heading = self.pose.heading_deg
        if self._noise is not None:
            heading += self._noise.uniform(-peripherals.BYTE_STEP_DEG / 2, peripherals.BYTE_STEP_DEG / 2)
        return peripherals.compass_sample(heading)

    def _apply(self, msg: CommandMessage, t_boundary_ms: int) -> None:
        if msg.kind == "Drive":
            assert msg.drive is not None
            if msg.drive != self.drive:
                self._segment_boundary(msg.drive, t_boundary_ms)
                self.drive = msg.drive
        elif msg.kind == "TripReset":
            self.recorder.reset(
                self.compass_reading(), self.enc_l.counts, self.enc_r.counts, t_boundary_ms
            )
        elif msg.kind == "ActuatorSet":
            assert msg.channel is not None
            self.actuators[msg.channel] = msg.value
        # Subscribe has no simulation effect; it is acked with the tick.

    def _segment_boundary(self, new_drive: DriveCommand, t_ms: int) -> None:
        """Close the running segment and open the next one on a drive change.

        The bearing recorded for the new leg is the compass value at
        motion start, as transmitted on the configured wire encoding.
        """
        if self.recorder.is_open:
            self.recorder.close_segment(self.enc_l.counts, self.enc_r.counts, t_ms)
        if new_drive != DriveCommand.STOP:
            self.recorder.open_segment(
                self.compass_reading(), self.enc_l.counts, self.enc_r.counts, t_ms
            )

    def step(self) -> TelemetryFrame:
        """Advance one tick: apply queued commands, move, sense, publish."""
        executing_tick = self.tick + 1
        t_start_ms = self.tick * self.tick_ms
        t_end_ms = executing_tick * self.tick_ms

        with self._queue_lock:
            batch = self._queue
            self._queue = []
        for pending in batch:
            self._apply(pending.message, t_start_ms)
            pending.applied_tick = executing_tick

        # command -> port bits -> H-bridge decode, the same path the MCU drives
        port = kinematics.drive_to_port_bits(self.drive)
        left, right = peripherals.port_to_motor_states(port)

        self.pose = kinematics.step(self.pose, left, right, self.params)
        edges_l, edges_r = kinematics.emit_encoder_edges(
            left, right, self.params, self.emit_l, self.emit_r
        )
        for level in edges_l:
            self.enc_l = peripherals.encoder_edge(self.enc_l, level)
        for level in edges_r:
            self.enc_r = peripherals.encoder_edge(self.enc_r, level)

        reading = self.compass_reading()
        self.registry.sample_due(t_end_ms)

        estimate = self.recorder.estimate(self.enc_l.counts, self.enc_r.counts, t_end_ms)
        frame = TelemetryFrame(
            t_ms=t_end_ms,
            bearing_deg=reading.bearing_deg,
            bearing_byte=reading.byte_form,
            pose_est=(estimate.x_m, estimate.y_m),
            footprints=tuple(deadreckoning.footprints(estimate)),
            total_distance_m=estimate.total_distance_m,
            net_displacement_m=estimate.net_displacement_m,
            sensors=self.registry.latest_filtered(),
            drive_state=self.drive.value,
        )
        self.tick = executing_tick
        self.last_frame = frame
        for pending in batch:
            pending.done.set()
        for listener in self._frame_listeners:
            listener(frame)
        return frame

    def finish_trip(self) -> None:
        """Close any open segment, as a real run does when the robot halts."""
        if self.recorder.is_open:
            self.recorder.close_segment(
                self.enc_l.counts, self.enc_r.counts, self.tick * self.tick_ms
            )

    def trace_row(self, frame: TelemetryFrame) -> list:
        """Ground-truth trace row for one completed tick (TRACE_FIELDS order)."""
        return [
            frame.t_ms,
            self.pose.x,
            self.pose.y,
            self.pose.heading_deg,
            self.enc_l.counts,
            self.enc_r.counts,
            frame.bearing_byte,
            self.drive.value,
        ]


class TickLoop:
    """Paces a Simulation against the wall clock for interactive serving."""

    def __init__(self, sim: Simulation) -> None:
        self.sim = sim
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._run, name="tick-loop", daemon=True)
        self._thread.start()

    def _run(self) -> None:
        period = self.sim.tick_ms / 1000.0
        next_t = time.monotonic() + period
        while not self._stop.is_set():
            self.sim.step()
            delay = next_t - time.monotonic()
            next_t += period
            if delay > 0:
                self._stop.wait(delay)

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None


@dataclass(frozen=True)
class ScenarioStep:
    at_ms: int
    command: CommandMessage


def run_scenario(
    sim: Simulation,
    steps: list[ScenarioStep],
    on_tick: Callable[[TelemetryFrame], None] | None = None,
) -> None:
    """Replay a scripted scenario deterministically.

    Each command is queued so it applies at the first tick starting at
    or after its timestamp; the run ends one tick after the last
    command, with any open trip segment closed as the robot halts.
    """
    for step_ in steps:
        while sim.tick * sim.tick_ms < step_.at_ms:
            frame = sim.step()
            if on_tick is not None:
                on_tick(frame)
        sim.submit(step_.command)
    if steps:
        frame = sim.step()
        if on_tick is not None:
            on_tick(frame)
    sim.finish_trip()
