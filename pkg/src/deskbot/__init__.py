"""deskbot: a desk-scale networked robot simulator.

Emulated microcontroller peripherals drive a differential-drive world
model; a dead-reckoning estimator rebuilds the path from wheel counts
and compass bearings; a modular sensor pipeline filters and stores
measurements; and an HTTP control plane streams telemetry to any
browser-class client.
"""

__version__ = "0.1.0"

from .daps import FilterKind, FilterSpec, Registry, SampleStore, SensorDescriptor, SensorKind
from .deadreckoning import PathSegment, PositionEstimate, TripRecorder, footprints, integrate
from .kinematics import ChassisParams, DriveCommand, Pose, drive_to_motor_states, step
from .peripherals import (
    CompassReading,
    EncoderState,
    HBridgeInputs,
    MotorState,
    compass_sample,
    counts_to_distance,
    encoder_edge,
    hbridge_decode,
    pwm_to_bearing,
)
from .simulation import CommandMessage, Simulation, TelemetryFrame, parse_command
from .service import RobotService

__all__ = [
    "ChassisParams",
    "CommandMessage",
    "CompassReading",
    "DriveCommand",
    "EncoderState",
    "FilterKind",
    "FilterSpec",
    "HBridgeInputs",
    "MotorState",
    "PathSegment",
    "Pose",
    "PositionEstimate",
    "Registry",
    "RobotService",
    "SampleStore",
    "SensorDescriptor",
    "SensorKind",
    "Simulation",
    "TelemetryFrame",
    "TripRecorder",
    "compass_sample",
    "counts_to_distance",
    "drive_to_motor_states",
    "encoder_edge",
    "footprints",
    "hbridge_decode",
    "integrate",
    "parse_command",
    "pwm_to_bearing",
    "step",
]
