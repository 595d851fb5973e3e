"""Position estimation from the peripherals alone.

The estimator never sees the ground-truth pose.  It slices a trip into
straight path segments, one per stretch of uninterrupted motion: the
segment's bearing is the compass value captured when motion starts and
its length comes from the wheel counters (midpoint average of the two
wheels).  Integrating the segments as plane vectors yields the running
footprint trail, the total rolled distance and the net start-to-end
displacement.

Bearings are decoded from the wire encoding actually transmitted (the
8-bit byte by default), so its 1.40625-degree quantization propagates
into the estimate by design; the 16-bit word or the exact heading can
be selected instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .kinematics import ChassisParams, cosd, sind
from .peripherals import BYTE_STEP_DEG, CompassReading, counts_to_distance

BEARING_ENCODINGS = ("byte", "word", "exact")


class SegmentStateError(RuntimeError):
    """Segment opened while open, or closed while closed."""


class DataIntegrityError(ValueError):
    """Counter or timestamp values that cannot have come from the hardware."""


class TripLogError(ValueError):
    """Trip log file does not parse; carries the offending line number."""

    def __init__(self, message: str, line_no: int) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def decode_bearing(reading: CompassReading, encoding: str = "byte") -> float:
    """Bearing in degrees as reconstructed from one wire encoding."""
    if encoding == "byte":
        return reading.byte_form * BYTE_STEP_DEG
    if encoding == "word":
        return reading.word_form / 10.0
    if encoding == "exact":
        return reading.bearing_deg
    raise ValueError(f"unknown bearing encoding {encoding!r}")


@dataclass(frozen=True)
class PathSegment:
    """One dead-reckoning leg: a distance at a held bearing."""

    distance_m: float
    bearing_deg: float
    t_start_ms: int
    t_end_ms: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.distance_m) and self.distance_m >= 0):
            raise DataIntegrityError(f"segment distance must be >= 0, got {self.distance_m!r}")
        if not (0.0 <= self.bearing_deg < 360.0):
            raise DataIntegrityError(f"bearing must be in [0, 360), got {self.bearing_deg!r}")
        if self.t_end_ms < self.t_start_ms:
            raise DataIntegrityError("segment ends before it starts")


@dataclass(frozen=True)
class PositionEstimate:
    """Vector sum of a segment list, relative to the trip origin."""

    x_m: float
    y_m: float
    total_distance_m: float
    net_displacement_m: float
    segments: tuple[PathSegment, ...]


def integrate(segments: Sequence[PathSegment]) -> PositionEstimate:
    """Sum segments as plane vectors (x east, y north, bearing clockwise
    from north).

    Uses exact summation, so the result is independent of segment order
    and the triangle inequality net <= total holds without slack.
    """
    segs = tuple(segments)
    dx = [s.distance_m * sind(s.bearing_deg) for s in segs]
    dy = [s.distance_m * cosd(s.bearing_deg) for s in segs]
    x = math.fsum(dx)
    y = math.fsum(dy)
    total = math.fsum(s.distance_m for s in segs)
    # hypot can land one ulp above total when every bearing is equal
    net = min(math.hypot(x, y), total)
    return PositionEstimate(x, y, total, net, segs)


def footprints(estimate: PositionEstimate) -> list[tuple[float, float]]:
    """Vertices of the footprint trail: origin plus one per segment.

    Prefix sums use the same exact summation as integrate, so the last
    vertex coincides with the estimate bit for bit.
    """
    dx = [s.distance_m * sind(s.bearing_deg) for s in estimate.segments]
    dy = [s.distance_m * cosd(s.bearing_deg) for s in estimate.segments]
    verts = [(0.0, 0.0)]
    for i in range(1, len(estimate.segments) + 1):
        verts.append((math.fsum(dx[:i]), math.fsum(dy[:i])))
    return verts


@dataclass(frozen=True)
class OpenSegment:
    """Token for a segment in progress: baseline counts and the bearing."""

    bearing_deg: float
    counts_l: int
    counts_r: int
    t_start_ms: int


def segment_open(
    current: OpenSegment | None,
    bearing: CompassReading,
    counts_l: int,
    counts_r: int,
    t_ms: int,
    encoding: str = "byte",
) -> OpenSegment:
    """Start a segment at motion start, snapshotting counters and bearing."""
    if current is not None:
        raise SegmentStateError("a segment is already open")
    return OpenSegment(decode_bearing(bearing, encoding), counts_l, counts_r, t_ms)


def segment_close(
    token: OpenSegment,
    counts_l: int,
    counts_r: int,
    params: ChassisParams,
    t_ms: int,
    segments_per_rev: int = 8,
) -> PathSegment:
    """Close a segment at motion stop, measuring it from the count deltas."""
    if token is None:
        raise SegmentStateError("no segment is open")
    if counts_l < token.counts_l or counts_r < token.counts_r:
        raise DataIntegrityError("wheel counters ran backwards within a segment")
    d_l = counts_to_distance(counts_l - token.counts_l, params.wheel_circumference_m, segments_per_rev)
    d_r = counts_to_distance(counts_r - token.counts_r, params.wheel_circumference_m, segments_per_rev)
    return PathSegment((d_l + d_r) / 2.0, token.bearing_deg, token.t_start_ms, t_ms)


class TripRecorder:
    """Accumulates the segments of one trip and keeps the running estimate.

    Owned by the tick thread.  The origin is wherever the trip was last
    reset, not where the process started.  Closed segments can stream
    to a JSON-lines trip log as they complete.
    """

    def __init__(
        self,
        params: ChassisParams,
        segments_per_rev: int = 8,
        encoding: str = "byte",
        log: "TripLogWriter | None" = None,
    ) -> None:
        if encoding not in BEARING_ENCODINGS:
            raise ValueError(f"unknown bearing encoding {encoding!r}")
        self.params = params
        self.segments_per_rev = segments_per_rev
        self.encoding = encoding
        self.log = log
        self.segments: list[PathSegment] = []
        self.open_token: OpenSegment | None = None

    @property
    def is_open(self) -> bool:
        return self.open_token is not None

    def open_segment(self, bearing: CompassReading, counts_l: int, counts_r: int, t_ms: int) -> None:
        self.open_token = segment_open(
            self.open_token, bearing, counts_l, counts_r, t_ms, self.encoding
        )

    def close_segment(self, counts_l: int, counts_r: int, t_ms: int) -> PathSegment:
        seg = segment_close(
            self.open_token, counts_l, counts_r, self.params, t_ms, self.segments_per_rev
        )
        self.open_token = None
        self.segments.append(seg)
        if self.log is not None:
            self.log.append(seg)
        return seg

    def reset(self, bearing: CompassReading, counts_l: int, counts_r: int, t_ms: int) -> None:
        """Zero the trip origin and the segment log.

        If motion is in progress the current segment restarts here, so
        the new trip begins at the robot's present position.
        """
        was_open = self.is_open
        self.segments.clear()
        self.open_token = None
        if self.log is not None:
            self.log.reset()
        if was_open:
            self.open_segment(bearing, counts_l, counts_r, t_ms)

    def estimate(
        self, counts_l: int | None = None, counts_r: int | None = None, t_ms: int | None = None
    ) -> PositionEstimate:
        """Estimate over the closed segments, plus the in-progress leg when
        current counters are supplied (live telemetry view)."""
        segs: list[PathSegment] = list(self.segments)
        if self.open_token is not None and counts_l is not None and counts_r is not None:
            provisional = segment_close(
                self.open_token,
                counts_l,
                counts_r,
                self.params,
                self.open_token.t_start_ms if t_ms is None else t_ms,
                self.segments_per_rev,
            )
            if provisional.distance_m > 0:
                segs.append(provisional)
        return integrate(segs)


class TripLogWriter:
    """Append-only JSON-lines trip log, one PathSegment per line."""

    def __init__(self, path) -> None:
        self.path = path
        self._fh = open(path, "a", encoding="utf-8")

    def append(self, seg: PathSegment) -> None:
        line = json.dumps(
            {
                "t0": seg.t_start_ms,
                "t1": seg.t_end_ms,
                "d_m": seg.distance_m,
                "bearing_deg": seg.bearing_deg,
            },
            separators=(",", ":"),
        )
        self._fh.write(line + "\n")
        self._fh.flush()

    def reset(self) -> None:
        self._fh.close()
        self._fh = open(self.path, "w", encoding="utf-8")

    def close(self) -> None:
        self._fh.close()


def read_trip_log(path) -> list[PathSegment]:
    """Parse a trip log back into segments; errors carry line numbers."""
    segments: list[PathSegment] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TripLogError(f"bad JSON: {exc.msg}", line_no) from exc
            if not isinstance(obj, dict):
                raise TripLogError("expected an object", line_no)
            extra = set(obj) - {"t0", "t1", "d_m", "bearing_deg"}
            if extra:
                raise TripLogError(f"unknown keys {sorted(extra)}", line_no)
            try:
                seg = PathSegment(
                    float(obj["d_m"]), float(obj["bearing_deg"]), int(obj["t0"]), int(obj["t1"])
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise TripLogError(f"bad segment: {exc}", line_no) from exc
            segments.append(seg)
    return segments
