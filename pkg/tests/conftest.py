import http.client
import json
import threading
import time

import pytest

from deskbot.service import RobotService
from deskbot.simulation import Simulation


class ApiClient:
    """Minimal JSON/NDJSON client for the command and telemetry endpoints."""

    def __init__(self, port: int, host: str = "127.0.0.1") -> None:
        self.host = host
        self.port = port

    def _connect(self) -> http.client.HTTPConnection:
        return http.client.HTTPConnection(self.host, self.port, timeout=10)

    def post(self, body: object, raw: bytes | None = None, path: str = "/api/command"):
        conn = self._connect()
        try:
            payload = raw if raw is not None else json.dumps(body).encode()
            conn.request("POST", path, payload, {"Content-Type": "application/json"})
            resp = conn.getresponse()
            data = resp.read()
            return resp.status, json.loads(data)
        finally:
            conn.close()

    def get_json(self, path: str):
        conn = self._connect()
        try:
            conn.request("GET", path)
            resp = conn.getresponse()
            data = resp.read()
            try:
                return resp.status, json.loads(data)
            except json.JSONDecodeError:
                return resp.status, data
        finally:
            conn.close()

    def open_stream(self, session: str, period_ms: int):
        """Returns (connection, response); read frames with resp.readline()."""
        conn = self._connect()
        conn.request("GET", f"/api/telemetry/stream?session={session}&period_ms={period_ms}")
        resp = conn.getresponse()
        return conn, resp

    def subscribe(self) -> dict:
        status, body = self.post({"kind": "Subscribe"})
        assert status == 200, body
        return body


class ServiceHarness:
    """A service on an ephemeral port whose tick loop the test drives."""

    def __init__(self, sim: Simulation, service: RobotService) -> None:
        self.sim = sim
        self.service = service
        self.client = ApiClient(service.port)

    def post_async(self, body: object):
        """POST from a worker thread; step the sim until the reply lands.

        Waits for the command to reach the queue before the first step so
        it applies on the very next tick (keeps golden tick numbers exact).
        """
        result: dict = {}

        def run() -> None:
            result["status"], result["body"] = self.client.post(body)

        thread = threading.Thread(target=run)
        thread.start()
        deadline = time.monotonic() + 10
        while thread.is_alive() and not self.sim._queue:
            time.sleep(0.001)
            if time.monotonic() > deadline:  # pragma: no cover
                raise TimeoutError("command never reached the queue")
        while thread.is_alive():
            self.sim.step()
            thread.join(0.005)
            if time.monotonic() > deadline:  # pragma: no cover
                raise TimeoutError("command never completed")
        return result["status"], result["body"]


@pytest.fixture
def harness():
    sim = Simulation(tick_ms=10)
    service = RobotService(sim)
    service.start("127.0.0.1", 0)
    h = ServiceHarness(sim, service)
    yield h
    service.stop()
