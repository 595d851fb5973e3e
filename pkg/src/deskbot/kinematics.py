"""Ground-truth world model for the three-wheel chassis.

Two driven wheels, one free caster.  Each motor is either off or
turning at a fixed rate, so per-tick wheel speeds are in {-s, 0, +s}
and the chassis follows exact circular arcs: straight when the wheels
match, a pivot about the stopped wheel when only one drives (the turn
style the drive commands produce), and a spin about the centre when
they oppose.

Coordinates: x east, y north, heading in degrees clockwise from north,
always normalized to [0, 360).  All functions here are pure; the tick
loop owns the single mutable pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .peripherals import (
    PIN_DIR_LEFT,
    PIN_DIR_RIGHT,
    PIN_EN_LEFT,
    PIN_EN_RIGHT,
    PORT0,
    MotorState,
    PortBits,
    counts_to_distance,
)


class ChassisConfigError(ValueError):
    """Chassis geometry or timing parameter out of range."""


class DriveCommand(Enum):
    """Operator-level motion commands."""

    FORWARD = "Forward"
    BACKWARD = "Backward"
    TURN_LEFT = "TurnLeft"
    TURN_RIGHT = "TurnRight"
    STOP = "Stop"


@dataclass(frozen=True)
class ChassisParams:
    """Fixed geometry and timing of the simulated chassis.

    Defaults give one wheel revolution per 0.2 m and eight encoder
    counts per revolution, so desk-scale runs finish in seconds.
    """

    wheel_circumference_m: float = 0.2
    track_width_m: float = 0.2
    wheel_speed_mps: float = 0.1
    tick_s: float = 0.01

    def __post_init__(self) -> None:
        for name in ("wheel_circumference_m", "track_width_m", "wheel_speed_mps", "tick_s"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ChassisConfigError(f"{name} must be a positive number, got {v!r}")


@dataclass(frozen=True)
class Pose:
    """Planar position plus heading; heading normalized on construction."""

    x: float = 0.0
    y: float = 0.0
    heading_deg: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading_deg)):
            raise ChassisConfigError("pose fields must be finite")
        object.__setattr__(self, "heading_deg", self.heading_deg % 360.0)


def sind(angle_deg: float) -> float:
    """sin of an angle in degrees, exact at the four compass points."""
    r = angle_deg % 360.0
    if r == 0.0 or r == 180.0:
        return 0.0
    if r == 90.0:
        return 1.0
    if r == 270.0:
        return -1.0
    return math.sin(math.radians(r))


def cosd(angle_deg: float) -> float:
    """cos of an angle in degrees, exact at the four compass points."""
    r = angle_deg % 360.0
    if r == 0.0:
        return 1.0
    if r == 180.0:
        return -1.0
    if r == 90.0 or r == 270.0:
        return 0.0
    return math.cos(math.radians(r))


def drive_to_motor_states(cmd: DriveCommand) -> tuple[MotorState, MotorState]:
    """Map a drive command to (left, right) motor states.

    Turning stops the inner wheel and drives the outer one; forward and
    backward run both motors together.
    """
    table = {
        DriveCommand.FORWARD: (MotorState.FORWARD, MotorState.FORWARD),
        DriveCommand.BACKWARD: (MotorState.REVERSE, MotorState.REVERSE),
        DriveCommand.TURN_LEFT: (MotorState.STOP, MotorState.FORWARD),
        DriveCommand.TURN_RIGHT: (MotorState.FORWARD, MotorState.STOP),
        DriveCommand.STOP: (MotorState.STOP, MotorState.STOP),
    }
    return table[cmd]


def drive_to_port_bits(cmd: DriveCommand) -> PortBits:
    """Encode a drive command as the Port 0 bit pattern the MCU would write.

    Direction pins default high when a channel is disabled; only the
    enable bits make a channel stop.
    """
    left, right = drive_to_motor_states(cmd)
    bits = [1] * 4 + [0] * 4
    bits[PIN_DIR_LEFT] = 0 if left == MotorState.REVERSE else 1
    bits[PIN_DIR_RIGHT] = 0 if right == MotorState.REVERSE else 1
    bits[PIN_EN_LEFT] = 0 if left == MotorState.STOP else 1
    bits[PIN_EN_RIGHT] = 0 if right == MotorState.STOP else 1
    return PortBits(PORT0, tuple(bits))


def signed_wheel_speed(state: MotorState, params: ChassisParams) -> float:
    """Signed rim speed of one wheel for a motor state (m/s)."""
    if state == MotorState.FORWARD:
        return params.wheel_speed_mps
    if state == MotorState.REVERSE:
        return -params.wheel_speed_mps
    return 0.0


def wheel_arcs(left: MotorState, right: MotorState, params: ChassisParams) -> tuple[float, float]:
    """Unsigned arc length each wheel rolls in one tick (m)."""
    return (
        abs(signed_wheel_speed(left, params)) * params.tick_s,
        abs(signed_wheel_speed(right, params)) * params.tick_s,
    )


def step(pose: Pose, left: MotorState, right: MotorState, params: ChassisParams) -> Pose:
    """Advance the pose by one tick of the given motor states.

    Exact rigid-body arc: angular rate (clockwise positive) is
    (vL - vR) / track width, the centre speed is their mean, and the
    pose is rotated about the instantaneous centre of curvature.  A
    single driving wheel therefore pivots about the stopped wheel; a
    matched pair translates along the heading with no heading change.
    """
    v_l = signed_wheel_speed(left, params)
    v_r = signed_wheel_speed(right, params)
    dt = params.tick_s
    w = params.track_width_m

    omega = (v_l - v_r) / w  # rad/s, clockwise positive
    v_c = (v_l + v_r) / 2.0

    if omega == 0.0:
        if v_c == 0.0:
            return pose
        d = v_c * dt
        return Pose(
            pose.x + d * sind(pose.heading_deg),
            pose.y + d * cosd(pose.heading_deg),
            pose.heading_deg,
        )

    dtheta = omega * dt  # radians, clockwise positive
    # ICC sits along the right-hand axis at v_c / omega (signed).
    r_c = v_c / omega
    rx = cosd(pose.heading_deg)
    ry = -sind(pose.heading_deg)
    icc_x = pose.x + r_c * rx
    icc_y = pose.y + r_c * ry
    # rotate (pose - ICC) clockwise by dtheta in east/north coordinates
    ux = pose.x - icc_x
    uy = pose.y - icc_y
    c = math.cos(dtheta)
    s = math.sin(dtheta)
    return Pose(
        icc_x + ux * c + uy * s,
        icc_y - ux * s + uy * c,
        pose.heading_deg + math.degrees(dtheta),
    )


class EdgeEmitter:
    """Turns continuous wheel travel into opto-coupler edge pairs.

    Travel accumulates in an exact rational odometer so no distance is
    ever lost to rounding across ticks: at any instant the rolled arc
    equals counts_to_distance(counts) + residual, identically.  One
    rising+falling edge pair is emitted per disc sector consumed.
    """

    def __init__(self, wheel_circumference_m: float, segments_per_rev: int) -> None:
        if segments_per_rev < 1:
            raise ChassisConfigError("segments_per_rev must be >= 1")
        if not (math.isfinite(wheel_circumference_m) and wheel_circumference_m > 0):
            raise ChassisConfigError("circumference must be positive")
        self.circumference = Fraction(wheel_circumference_m)
        self.segments_per_rev = segments_per_rev
        self.segment_length = self.circumference / segments_per_rev
        self.arc_total = Fraction(0)
        self.counts = 0

    @property
    def residual(self) -> Fraction:
        """Arc rolled past the last emitted sector boundary (exact)."""
        return self.arc_total - counts_to_distance(
            self.counts, self.circumference, self.segments_per_rev
        )

    def advance(self, arc_m: float) -> list[int]:
        """Roll the wheel by arc_m metres; return the edge levels produced."""
        if arc_m < 0:
            raise ChassisConfigError("arc length cannot be negative")
        self.arc_total += Fraction(arc_m)
        pairs = 0
        while self.arc_total >= self.segment_length * (self.counts + 1):
            self.counts += 1
            pairs += 1
        return [1, 0] * pairs


def emit_encoder_edges(
    left: MotorState,
    right: MotorState,
    params: ChassisParams,
    emitter_left: EdgeEmitter,
    emitter_right: EdgeEmitter,
) -> tuple[list[int], list[int]]:
    """Feed one tick of wheel travel into both wheel encoders.

    Arc lengths come from the motor states (poses alone cannot separate
    the two wheels: a spin moves both wheels but not the centre).
    """
    arc_l, arc_r = wheel_arcs(left, right, params)
    return emitter_left.advance(arc_l), emitter_right.advance(arc_r)


# Column order of the per-tick ground-truth trace row.
TRACE_FIELDS = ("t_ms", "x", "y", "heading_deg", "counts_L", "counts_R", "bearing_byte", "cmd")
