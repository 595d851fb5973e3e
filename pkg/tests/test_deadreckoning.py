import json
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deskbot.deadreckoning import (
    DataIntegrityError,
    OpenSegment,
    PathSegment,
    SegmentStateError,
    TripLogError,
    TripLogWriter,
    TripRecorder,
    decode_bearing,
    footprints,
    integrate,
    read_trip_log,
    segment_close,
    segment_open,
)
from deskbot.kinematics import ChassisParams
from deskbot.peripherals import compass_sample

PARAMS = ChassisParams()


def seg(d, bearing, t0=0, t1=1000):
    return PathSegment(d, bearing, t0, t1)


def oracle_micro_step(segments, steps=10_000):
    """Re-walk each leg in tiny straight increments (radian trig, numpy
    summation): independent of the closed-form integration under test."""
    x = y = 0.0
    for s in segments:
        b = math.radians(s.bearing_deg)
        x += np.full(steps, s.distance_m / steps * math.sin(b)).sum()
        y += np.full(steps, s.distance_m / steps * math.cos(b)).sum()
    return x, y


segments_strategy = st.lists(
    st.builds(
        seg,
        st.floats(min_value=0.0, max_value=5.0),
        st.floats(min_value=0.0, max_value=360.0, exclude_max=True),
    ),
    max_size=12,
)


class TestIntegrate:
    def test_empty_trip(self):
        est = integrate([])
        assert (est.x_m, est.y_m, est.total_distance_m, est.net_displacement_m) == (0, 0, 0, 0)

    def test_right_angle_legs(self):
        est = integrate([seg(1.0, 0.0), seg(1.0, 90.0)])
        assert (est.x_m, est.y_m) == (1.0, 1.0)
        assert est.total_distance_m == 2.0
        assert est.net_displacement_m == math.sqrt(2.0)

    def test_out_and_back_cancels_exactly(self):
        est = integrate([seg(1.0, 0.0), seg(1.0, 180.0)])
        assert (est.x_m, est.y_m) == (0.0, 0.0)
        assert est.net_displacement_m == 0.0
        assert est.total_distance_m == 2.0

    @given(segments_strategy)
    @settings(max_examples=60)
    def test_matches_micro_step_oracle(self, segments):
        est = integrate(segments)
        ox, oy = oracle_micro_step(segments, steps=2000)
        assert abs(est.x_m - ox) < 1e-9
        assert abs(est.y_m - oy) < 1e-9

    @given(segments_strategy)
    def test_triangle_inequality(self, segments):
        est = integrate(segments)
        assert est.net_displacement_m <= est.total_distance_m

    @given(
        st.lists(st.floats(min_value=0.0, max_value=5.0), min_size=1, max_size=8),
        st.floats(min_value=0.0, max_value=360.0, exclude_max=True),
    )
    def test_equality_when_bearings_equal(self, distances, bearing):
        est = integrate([seg(d, bearing) for d in distances])
        assert abs(est.net_displacement_m - est.total_distance_m) < 1e-9

    @given(segments_strategy, st.randoms())
    @settings(max_examples=40)
    def test_permutation_invariant(self, segments, rng):
        est = integrate(segments)
        shuffled = list(segments)
        rng.shuffle(shuffled)
        est2 = integrate(shuffled)
        assert (est.x_m, est.y_m) == (est2.x_m, est2.y_m)
        assert est.total_distance_m == est2.total_distance_m
        assert est.net_displacement_m == est2.net_displacement_m

    @given(segments_strategy)
    @settings(max_examples=40)
    def test_closed_path_returns_to_origin(self, segments):
        # mirror every leg: the exact vector sum is zero by construction
        trip = segments + [seg(s.distance_m, (s.bearing_deg + 180.0) % 360.0) for s in segments]
        est = integrate(trip)
        assert est.net_displacement_m < 1e-9


class TestFootprints:
    def test_empty(self):
        assert footprints(integrate([])) == [(0.0, 0.0)]

    def test_single_east_step(self):
        assert footprints(integrate([seg(1.0, 90.0)])) == [(0.0, 0.0), (1.0, 0.0)]

    def test_square_closes(self):
        est = integrate([seg(1.0, 0.0), seg(1.0, 90.0), seg(1.0, 180.0), seg(1.0, 270.0)])
        verts = footprints(est)
        assert len(verts) == 5
        assert verts[-1] == (0.0, 0.0)
        assert est.net_displacement_m == 0.0

    @given(segments_strategy)
    @settings(max_examples=40)
    def test_last_vertex_is_the_estimate(self, segments):
        est = integrate(segments)
        verts = footprints(est)
        assert len(verts) == len(segments) + 1
        assert verts[-1] == (est.x_m, est.y_m)


class TestSegmentLifecycle:
    def test_open_snapshots_counts_and_bearing(self):
        token = segment_open(None, compass_sample(0.0), 3, 4, 5000)
        assert token == OpenSegment(0.0, 3, 4, 5000)

    def test_double_open_rejected(self):
        token = segment_open(None, compass_sample(0.0), 0, 0, 0)
        with pytest.raises(SegmentStateError):
            segment_open(token, compass_sample(0.0), 0, 0, 10)

    def test_close_one_revolution_each(self):
        token = segment_open(None, compass_sample(0.0), 0, 0, 0)
        s = segment_close(token, 8, 8, PARAMS, 2000)
        assert s.distance_m == 0.2
        assert (s.t_start_ms, s.t_end_ms) == (0, 2000)

    def test_close_no_motion(self):
        token = segment_open(None, compass_sample(10.0), 5, 5, 0)
        assert segment_close(token, 5, 5, PARAMS, 100).distance_m == 0.0

    def test_close_pivot_averages_wheels(self):
        token = segment_open(None, compass_sample(0.0), 0, 0, 0)
        assert segment_close(token, 8, 0, PARAMS, 100).distance_m == 0.1

    def test_count_regression_rejected(self):
        token = segment_open(None, compass_sample(0.0), 10, 10, 0)
        with pytest.raises(DataIntegrityError):
            segment_close(token, 9, 10, PARAMS, 100)

    def test_close_without_open_rejected(self):
        with pytest.raises(SegmentStateError):
            segment_close(None, 0, 0, PARAMS, 0)


class TestDecodeBearing:
    def test_byte_quantizes(self):
        assert decode_bearing(compass_sample(180.0), "byte") == 180.0
        assert decode_bearing(compass_sample(1.0), "byte") == 0.0

    def test_word_tenths(self):
        assert decode_bearing(compass_sample(123.45), "word") == 123.5

    def test_exact_passthrough(self):
        assert decode_bearing(compass_sample(123.456), "exact") == 123.456

    def test_unknown_encoding(self):
        with pytest.raises(ValueError):
            decode_bearing(compass_sample(0.0), "nibble")


class TestTripRecorder:
    def test_records_path_by_path(self, tmp_path):
        rec = TripRecorder(PARAMS, encoding="exact")
        rec.open_segment(compass_sample(0.0), 0, 0, 0)
        rec.close_segment(8, 8, 2000)
        rec.open_segment(compass_sample(90.0), 8, 8, 2000)
        rec.close_segment(16, 16, 4000)
        est = rec.estimate()
        assert est.total_distance_m == 0.4
        assert (est.x_m, est.y_m) == (0.2, 0.2)

    def test_estimate_includes_provisional_leg(self):
        rec = TripRecorder(PARAMS, encoding="exact")
        rec.open_segment(compass_sample(90.0), 0, 0, 0)
        est = rec.estimate(8, 8, 1000)
        assert est.x_m == 0.2
        assert rec.is_open  # provisional close does not consume the token

    def test_reset_zeroes_origin_and_reopens(self):
        rec = TripRecorder(PARAMS, encoding="exact")
        rec.open_segment(compass_sample(0.0), 0, 0, 0)
        rec.close_segment(8, 8, 1000)
        rec.open_segment(compass_sample(0.0), 8, 8, 1000)
        rec.reset(compass_sample(45.0), 12, 12, 1500)
        assert rec.segments == []
        assert rec.is_open
        assert rec.open_token.counts_l == 12

    def test_reset_stays_closed_when_stopped(self):
        rec = TripRecorder(PARAMS)
        rec.reset(compass_sample(0.0), 0, 0, 0)
        assert not rec.is_open


class TestTripLog:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "trip.jsonl"
        log = TripLogWriter(path)
        rec = TripRecorder(PARAMS, encoding="exact", log=log)
        rec.open_segment(compass_sample(0.0), 0, 0, 0)
        rec.close_segment(8, 8, 2000)
        rec.open_segment(compass_sample(90.0), 8, 8, 2000)
        rec.close_segment(12, 12, 3000)
        log.close()
        segments = read_trip_log(path)
        assert segments == rec.segments
        lines = path.read_text().splitlines()
        assert json.loads(lines[0]) == {"t0": 0, "t1": 2000, "d_m": 0.2, "bearing_deg": 0.0}

    def test_reset_truncates_log(self, tmp_path):
        path = tmp_path / "trip.jsonl"
        log = TripLogWriter(path)
        rec = TripRecorder(PARAMS, log=log)
        rec.open_segment(compass_sample(0.0), 0, 0, 0)
        rec.close_segment(8, 8, 1000)
        rec.reset(compass_sample(0.0), 8, 8, 1000)
        log.close()
        assert read_trip_log(path) == []

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "trip.jsonl"
        path.write_text('{"t0":0,"t1":1,"d_m":0.1,"bearing_deg":0.0}\nnot json\n')
        with pytest.raises(TripLogError) as err:
            read_trip_log(path)
        assert "line 2" in str(err.value)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "trip.jsonl"
        path.write_text('{"t0":0,"t1":1,"d_m":0.1,"bearing_deg":0.0,"x":1}\n')
        with pytest.raises(TripLogError):
            read_trip_log(path)


class TestSegmentValidation:
    def test_negative_distance_rejected(self):
        with pytest.raises(DataIntegrityError):
            PathSegment(-0.1, 0.0, 0, 1)

    def test_bearing_range(self):
        with pytest.raises(DataIntegrityError):
            PathSegment(0.1, 360.0, 0, 1)

    def test_time_order(self):
        with pytest.raises(DataIntegrityError):
            PathSegment(0.1, 0.0, 10, 5)


class TestAgainstGroundTruth:
    """Estimator versus the kinematics world on a straight-plus-pivot trip,
    with the error bound computed from the quantization sources, not a
    loose constant."""

    def test_straight_legs_error_within_count_quantum(self):
        from deskbot.simulation import Simulation, parse_command

        sim = Simulation()
        sim.submit(parse_command({"kind": "Drive", "drive": "Forward"}))
        for _ in range(137):  # 1.37 s: deliberately not a whole revolution
            sim.step()
        sim.submit(parse_command({"kind": "Drive", "drive": "Stop"}))
        sim.step()
        sim.finish_trip()
        est = sim.recorder.estimate()
        # one segment straight north: bearing exact at 0, so the only error
        # source is count truncation, strictly below one sector length
        quantum = PARAMS.wheel_circumference_m / 8
        truth = sim.pose
        err = math.hypot(est.x_m - truth.x, est.y_m - truth.y)
        assert err < quantum
        assert est.net_displacement_m <= truth.y
