"""Emulation of the microcontroller-facing hardware.

Three devices, modelled at the bit level rather than electrically:

  * an L293D-style dual H-bridge motor driver, two command lines per
    motor channel (IN1/IN2), with the inverter-reduced two-pin port
    scheme plus per-channel enable bits;
  * a CMPS03-style digital compass: bearing as an 8-bit byte (0..255
    over a full turn), a 16-bit register in tenths of a degree, or a
    PWM pulse (1 ms at 0 degrees, 36.99 ms at 359.9 degrees), read
    over an emulated I2C transaction at addresses 0xC0/0xC1;
  * opto-coupler wheel rotation counters: an eight-sector black/white
    disc produces one countable rising edge per sector.

Everything here is a pure function or a small immutable record, safe
to call from the simulation tick thread and to hand out as snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from numbers import Rational


class MotorState(Enum):
    """Decoded rotation state of one motor channel."""

    FORWARD = "Forward"
    REVERSE = "Reverse"
    STOP = "Stop"


class PeripheralError(Exception):
    """Base class for emulated-hardware faults."""


class InvalidInputError(PeripheralError, ValueError):
    """A value outside the device's physical input range."""


class PortConfigError(PeripheralError, ValueError):
    """Port wiring used in a way the board does not support."""


class I2CNack(PeripheralError):
    """Addressed register does not exist; the device would not ACK."""


class I2CProtocolError(PeripheralError):
    """Transaction framing does not match the register (wrong width)."""


def _check_bit(value: int, name: str) -> int:
    if value not in (0, 1):
        raise InvalidInputError(f"{name} must be 0 or 1, got {value!r}")
    return value


@dataclass(frozen=True)
class HBridgeInputs:
    """The two command lines of one H-bridge channel."""

    in1: int
    in2: int

    def __post_init__(self) -> None:
        _check_bit(self.in1, "in1")
        _check_bit(self.in2, "in2")


def hbridge_decode(inputs: HBridgeInputs) -> MotorState:
    """Decode IN1/IN2 into the motor rotation state.

    Convention: (1,0) drives clockwise, taken as Forward wheel motion;
    (0,1) is Reverse.  Equal levels put both half-bridges at the same
    potential, so no current flows and the motor stops.
    """
    if inputs.in1 == inputs.in2:
        return MotorState.STOP
    return MotorState.FORWARD if inputs.in1 == 1 else MotorState.REVERSE


PORT0 = "P0"

# Port 0 pin assignment: direction lines on pins 0 and 1 (one per motor,
# the inverter supplies each channel's complementary input), enables on
# pins 2 and 3.  The two-pin scheme alone can only express run states,
# so the enable lines are what make Stop reachable.
PIN_DIR_LEFT = 0
PIN_DIR_RIGHT = 1
PIN_EN_LEFT = 2
PIN_EN_RIGHT = 3


@dataclass(frozen=True)
class PortBits:
    """One 8-bit parallel port as seen by the motor driver board."""

    port_id: str
    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bits) != 8:
            raise InvalidInputError(f"port needs exactly 8 bits, got {len(self.bits)}")
        for i, b in enumerate(self.bits):
            _check_bit(b, f"bit {i}")


def port_to_motor_states(port: PortBits) -> tuple[MotorState, MotorState]:
    """Decode Port 0 into (left, right) motor states.

    Each direction pin feeds IN1 directly and IN2 through the inverter,
    so a channel is always driven Forward or Reverse while its enable
    is high; a low enable gates the channel off regardless of direction.
    """
    if port.port_id != PORT0:
        raise PortConfigError(f"motor driver is wired to {PORT0}, not {port.port_id!r}")

    def channel(dir_pin: int, en_pin: int) -> MotorState:
        if port.bits[en_pin] == 0:
            return MotorState.STOP
        d = port.bits[dir_pin]
        return hbridge_decode(HBridgeInputs(d, 1 - d))

    return (
        channel(PIN_DIR_LEFT, PIN_EN_LEFT),
        channel(PIN_DIR_RIGHT, PIN_EN_RIGHT),
    )


# CMPS03-style compass encodings.  The byte wraps a full turn into
# 0..255, the word register holds tenths of a degree, and the PWM pulse
# is 1 ms + 0.1 ms per degree (so 36.99 ms at the device max of 359.9).
BYTE_STEP_DEG = 360.0 / 256.0  # 1.40625, exact in binary
PWM_MIN_MS = 1.0
PWM_MAX_MS = 36.99


@dataclass(frozen=True)
class CompassReading:
    """One bearing sample with its three wire encodings."""

    bearing_deg: float
    byte_form: int
    word_form: int
    pwm_ms: float


def compass_sample(true_heading: float) -> CompassReading:
    """Sample the compass at a ground-truth heading (degrees).

    The heading is normalized into [0, 360).  byte_form truncates to
    the 256-step scale, word_form rounds half-up to tenths of a degree,
    pwm_ms is the exact linear pulse encoding.
    """
    if not math.isfinite(true_heading):
        raise InvalidInputError(f"heading must be finite, got {true_heading!r}")
    bearing = true_heading % 360.0
    if bearing >= 360.0:  # can only happen through rounding of tiny negatives
        bearing = 0.0
    byte_form = math.floor(bearing * 256.0 / 360.0) % 256
    word_form = int(bearing * 10.0 + 0.5) % 3600
    pwm_ms = 1.0 + bearing * 0.1
    return CompassReading(bearing, byte_form, word_form, pwm_ms)


def pwm_to_bearing(pulse_ms: float) -> float:
    """Invert the PWM encoding back to degrees.

    Accepts the full pulse range a sub-0.1-degree heading can produce,
    [1.0, 37.0); 36.99 ms is the nominal device maximum (359.9 deg).
    """
    if not math.isfinite(pulse_ms) or pulse_ms < PWM_MIN_MS or pulse_ms >= 37.0:
        raise InvalidInputError(f"pulse must be in [1.0, 37.0) ms, got {pulse_ms!r}")
    return (pulse_ms - 1.0) / 0.1


I2C_WRITE_ADDR = 0xC0
I2C_READ_ADDR = 0xC1

REG_REVISION = 0
REG_BEARING_BYTE = 1
REG_BEARING_WORD = 2  # 16-bit, occupies registers 2-3, big-endian

_REG_WIDTHS = {REG_REVISION: 8, REG_BEARING_BYTE: 8, REG_BEARING_WORD: 16}

SOFTWARE_REVISION = 9


@dataclass(frozen=True)
class I2CTransaction:
    """Trace of one register read: write address, register, read-back."""

    write_addr: int
    read_addr: int
    register: int
    payload: tuple[int, ...]

    def trace(self) -> str:
        """Debug line: start, addressed write, repeated start, read, stop."""
        data = " ".join(f"{b:02X}" for b in self.payload)
        return f"S W:{self.write_addr:02X} R:{self.register:02X} Sr R:{self.read_addr:02X} {data} P"


def i2c_read(reading: CompassReading, register: int, width: int | None = None) -> I2CTransaction:
    """Read a compass register, returning the framed transaction.

    width, if given, must match the register (8 or 16 bits); 16-bit
    payloads are big-endian.  Unknown registers raise I2CNack, a width
    mismatch raises I2CProtocolError.
    """
    if register not in _REG_WIDTHS:
        raise I2CNack(f"no register 0x{register:02X} on this device")
    reg_width = _REG_WIDTHS[register]
    if width is not None and width != reg_width:
        raise I2CProtocolError(
            f"register 0x{register:02X} is {reg_width}-bit, transaction asked for {width}"
        )
    if register == REG_REVISION:
        payload = (SOFTWARE_REVISION,)
    elif register == REG_BEARING_BYTE:
        payload = (reading.byte_form,)
    else:
        payload = (reading.word_form >> 8, reading.word_form & 0xFF)
    return I2CTransaction(I2C_WRITE_ADDR, I2C_READ_ADDR, register, payload)


WHEEL_LEFT = "Left"
WHEEL_RIGHT = "Right"

SEGMENTS_PER_REV = 8  # eight black/white sectors on the disc


@dataclass(frozen=True)
class EncoderState:
    """Rotation counter for one wheel's opto-coupler channel."""

    wheel_id: str
    counts: int = 0
    segments_per_rev: int = SEGMENTS_PER_REV
    last_edge: int = 0

    def __post_init__(self) -> None:
        if self.counts < 0:
            raise InvalidInputError("counts cannot be negative")
        if self.segments_per_rev < 1:
            raise InvalidInputError("segments_per_rev must be >= 1")
        _check_bit(self.last_edge, "last_edge")


def encoder_edge(state: EncoderState, new_level: int) -> EncoderState:
    """Advance the counter with a new opto-coupler output level.

    Counts rising edges only (the Schmitt-trigger-sharpened 0->1
    transition raises the interrupt); falling edges and steady levels
    leave the count unchanged.
    """
    _check_bit(new_level, "level")
    if state.last_edge == 0 and new_level == 1:
        return replace(state, counts=state.counts + 1, last_edge=1)
    if new_level != state.last_edge:
        return replace(state, last_edge=new_level)
    return state


def counts_to_distance(counts: int, wheel_circumference_m, segments_per_rev: int):
    """Distance rolled for a number of encoder counts.

    One full revolution is segments_per_rev counts.  The circumference
    may be a float or an exact Rational; the result carries the same
    type, which lets the edge accumulator do lossless bookkeeping.
    """
    if counts < 0:
        raise InvalidInputError("counts cannot be negative")
    if segments_per_rev < 1:
        raise InvalidInputError("segments_per_rev must be >= 1")
    if not (isinstance(wheel_circumference_m, Rational) or math.isfinite(wheel_circumference_m)):
        raise InvalidInputError("circumference must be finite")
    if wheel_circumference_m <= 0:
        raise InvalidInputError("circumference must be positive")
    return counts * wheel_circumference_m / segments_per_rev
