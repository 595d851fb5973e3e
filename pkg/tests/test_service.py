import json
import threading
import time

import pytest

from deskbot.daps import Registry, SampleStore, SensorDescriptor, SensorKind, FilterSpec, FilterKind
from deskbot.service import RobotService
from deskbot.simulation import Simulation


def wait_until(predicate, timeout=5.0, step=None):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        if step is not None:
            step()
        time.sleep(0.002)
    return False


class TestSessions:
    def test_first_claimant_is_driver(self, harness):
        first = harness.client.subscribe()
        second = harness.client.subscribe()
        assert first["driver"] is True
        assert second["driver"] is False
        assert first["session"] != second["session"]

    def test_drive_requires_session(self, harness):
        status, body = harness.client.post({"kind": "Drive", "drive": "Forward"})
        assert status == 403
        assert body["ok"] is False

    def test_viewer_cannot_drive(self, harness):
        harness.client.subscribe()
        viewer = harness.client.subscribe()
        status, body = harness.client.post(
            {"kind": "Drive", "drive": "Forward", "session": viewer["session"]}
        )
        assert status == 403
        assert "driver" in body["error"]

    def test_concurrent_subscribe_storm_yields_one_driver(self, harness):
        results = []
        lock = threading.Lock()

        def claim():
            body = harness.client.subscribe()
            with lock:
                results.append(body)

        threads = [threading.Thread(target=claim) for _ in range(32)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sum(1 for r in results if r["driver"]) == 1
        assert len({r["session"] for r in results}) == 32

    def test_driver_released_on_stream_disconnect(self, harness):
        driver = harness.client.subscribe()
        conn, resp = harness.client.open_stream(driver["session"], 10)
        assert resp.status == 200
        harness.sim.step()
        resp.readline()
        resp.close()
        conn.close()
        # the handler notices the dead socket on its next write
        assert wait_until(
            lambda: harness.service.sessions.driver_id() is None, step=harness.sim.step
        )
        takeover = harness.client.subscribe()
        assert takeover["driver"] is True


class TestCommands:
    def test_drive_applies_next_tick(self, harness):
        driver = harness.client.subscribe()
        status, body = harness.post_async(
            {"kind": "Drive", "drive": "TurnLeft", "session": driver["session"]}
        )
        assert status == 200
        assert body["ok"] is True
        applied = body["applied_tick"]
        assert applied >= 1
        frame = harness.sim.last_frame
        assert frame.drive_state == "TurnLeft"

    def test_stop_is_idempotent(self, harness):
        driver = harness.client.subscribe()
        for _ in range(2):
            status, body = harness.post_async(
                {"kind": "Drive", "drive": "Stop", "session": driver["session"]}
            )
            assert status == 200 and body["ok"] is True

    def test_trip_reset_needs_any_session(self, harness):
        viewer = harness.client.subscribe()
        status, body = harness.post_async({"kind": "TripReset", "session": viewer["session"]})
        assert status == 200 and body["ok"] is True

    def test_actuator_set_range_error(self, harness):
        driver = harness.client.subscribe()
        status, body = harness.client.post(
            {"kind": "ActuatorSet", "channel": 9, "value": 1, "session": driver["session"]}
        )
        assert status == 400
        assert "range" in body["error"]

    def test_actuator_set_applies(self, harness):
        driver = harness.client.subscribe()
        status, body = harness.post_async(
            {"kind": "ActuatorSet", "channel": 2, "value": 7, "session": driver["session"]}
        )
        assert status == 200
        assert harness.sim.actuators[2] == 7

    @pytest.mark.parametrize(
        "body",
        [
            {"kind": "Dance"},
            {"kind": "Drive"},
            {"kind": "Drive", "drive": "Up"},
            {"kind": "Drive", "drive": "Forward", "speed": 2},
            {"kind": "ActuatorSet", "channel": "two", "value": 0},
            {"kind": "Subscribe", "drive": "Forward"},
            [1, 2, 3],
            "Drive",
            42,
        ],
    )
    def test_malformed_commands_structured_400(self, harness, body):
        status, reply = harness.client.post(body)
        assert status in (400, 403)
        assert reply["ok"] is False
        assert isinstance(reply["error"], str)

    def test_invalid_json_body(self, harness):
        status, reply = harness.client.post(None, raw=b"{nope")
        assert status == 400
        assert reply["ok"] is False

    def test_unknown_endpoint(self, harness):
        status, reply = harness.client.post({"kind": "Subscribe"}, path="/api/nope")
        assert status == 404
        assert reply["ok"] is False


class TestTelemetryStream:
    def read_frames(self, resp, n):
        frames = []
        for _ in range(n):
            line = resp.readline()
            assert line.endswith(b"\n")
            frames.append(json.loads(line))
        return frames

    def test_frames_fixed_period_monotone(self, harness):
        session = harness.client.subscribe()["session"]
        conn, resp = harness.client.open_stream(session, 20)
        for _ in range(10):
            harness.sim.step()
        frames = self.read_frames(resp, 5)
        conn.close()
        assert [f["t_ms"] for f in frames] == [20, 40, 60, 80, 100]

    def test_frame_internal_consistency(self, harness):
        driver = harness.client.subscribe()
        conn, resp = harness.client.open_stream(driver["session"], 10)
        harness.post_async({"kind": "Drive", "drive": "Forward", "session": driver["session"]})
        for _ in range(60):
            harness.sim.step()
        frames = self.read_frames(resp, 50)
        conn.close()
        for f in frames:
            assert f["net_displacement_m"] <= f["total_distance_m"] + 1e-12
            assert f["footprints"][-1] == list(f["pose_est"])
            assert 0 <= f["bearing_byte"] <= 255

    def test_two_subscribers_identical_sequences(self, harness):
        s1 = harness.client.subscribe()["session"]
        s2 = harness.client.subscribe()["session"]
        c1, r1 = harness.client.open_stream(s1, 10)
        c2, r2 = harness.client.open_stream(s2, 10)
        for _ in range(6):
            harness.sim.step()
        a = [r1.readline() for _ in range(5)]
        b = [r2.readline() for _ in range(5)]
        c1.close()
        c2.close()
        assert a == b

    def test_stream_requires_session(self, harness):
        status, body = harness.client.get_json("/api/telemetry/stream?period_ms=10")
        assert status == 403
        assert body["ok"] is False

    def test_bad_period_rejected(self, harness):
        session = harness.client.subscribe()["session"]
        status, body = harness.client.get_json(
            f"/api/telemetry/stream?session={session}&period_ms=7"
        )
        assert status == 400

    def test_command_to_frame_latency_one_tick(self, harness):
        driver = harness.client.subscribe()
        conn, resp = harness.client.open_stream(driver["session"], 10)
        harness.sim.step()  # tick 1: baseline frame with Stop
        status, body = harness.post_async(
            {"kind": "Drive", "drive": "TurnRight", "session": driver["session"]}
        )
        applied = body["applied_tick"]
        for _ in range(3):
            harness.sim.step()
        frames = self.read_frames(resp, 4)
        conn.close()
        switched = [f for f in frames if f["drive_state"] == "TurnRight"]
        assert switched, "no frame showed the new drive state"
        assert switched[0]["t_ms"] == applied * harness.sim.tick_ms
        for f in frames:
            if f["t_ms"] < applied * harness.sim.tick_ms:
                assert f["drive_state"] == "Stop"

    def test_slow_consumer_is_dropped_not_blocking(self, harness):
        session = harness.client.subscribe()["session"]
        sub = harness.service.add_subscriber(10, session)
        start = time.monotonic()
        for _ in range(400):  # queue holds 256; the rest must not block
            harness.sim.step()
        elapsed = time.monotonic() - start
        assert sub.dropped is True
        assert elapsed < 5.0
        assert harness.sim.tick == 400


class TestSamplesEndpoint:
    @pytest.fixture
    def harness_with_sensor(self, tmp_path):
        store = SampleStore(tmp_path / "samples")
        registry = Registry(store)
        registry.register_sensor(
            SensorDescriptor("co-1", SensorKind.CO, "ppm", 20, FilterSpec(FilterKind.NONE, 1)),
            lambda t: 4.25,
        )
        sim = Simulation(tick_ms=10, registry=registry)
        service = RobotService(sim)
        service.start("127.0.0.1", 0)
        from conftest import ServiceHarness

        yield ServiceHarness(sim, service)
        service.stop()

    def test_samples_round_trip(self, harness_with_sensor):
        h = harness_with_sensor
        for _ in range(10):
            h.sim.step()
        status, body = h.client.get_json("/api/samples?id=co-1")
        assert status == 200
        assert len(body) == 5  # 20 ms period over 100 ms
        assert body[0] == {"id": "co-1", "t": 10, "raw": 4.25, "filt": 4.25}
        status, ranged = h.client.get_json("/api/samples?id=co-1&from=30&to=60")
        assert [s["t"] for s in ranged] == [30, 50]

    def test_unknown_sensor_404(self, harness_with_sensor):
        status, body = harness_with_sensor.client.get_json("/api/samples?id=ghost")
        assert status == 404
        assert body["ok"] is False

    def test_missing_id_400(self, harness_with_sensor):
        status, body = harness_with_sensor.client.get_json("/api/samples")
        assert status == 400


class TestStaticAssets:
    def test_headless_root_is_404_but_api_works(self, harness):
        status, body = harness.client.get_json("/")
        assert status == 404
        assert body["ok"] is False
        assert harness.client.subscribe()["ok"] is True

    def test_serves_assets_when_present(self, tmp_path):
        (tmp_path / "index.html").write_text("<html>panel</html>")
        sim = Simulation()
        service = RobotService(sim, assets_dir=tmp_path)
        service.start("127.0.0.1", 0)
        try:
            from conftest import ApiClient

            client = ApiClient(service.port)
            status, data = client.get_json("/")
            assert status == 200
            assert b"panel" in data
            status, _ = client.get_json("/missing.js")
            assert status == 404
            status, _ = client.get_json("/../secret")
            assert status == 404
        finally:
            service.stop()
