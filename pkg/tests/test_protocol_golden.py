"""Replay every golden request/response file against a fresh service.

The golden files under docs/golden/ are the pinned wire contract: exact
status codes and exact JSON bodies (error_prefix where the message
embeds parser detail).  Each case runs against a brand new simulation
so tick numbers and session ids are reproducible.
"""

import json
from pathlib import Path

import pytest

from conftest import ServiceHarness
from deskbot.daps import FilterKind, FilterSpec, Registry, SampleStore, SensorDescriptor, SensorKind
from deskbot.service import RobotService
from deskbot.simulation import Simulation

GOLDEN_DIR = Path(__file__).parent.parent / "docs" / "golden"
GOLDEN_FILES = sorted(GOLDEN_DIR.glob("*.json"))


def make_harness(tmp_path, register_sensor: bool) -> ServiceHarness:
    registry = None
    if register_sensor:
        store = SampleStore(tmp_path / "samples")
        registry = Registry(store)
        registry.register_sensor(
            SensorDescriptor("const-1", SensorKind.CUSTOM, "u", 20, FilterSpec(FilterKind.NONE, 1)),
            lambda t: 4.25,
        )
    sim = Simulation(tick_ms=10, registry=registry)
    service = RobotService(sim)
    service.start("127.0.0.1", 0)
    return ServiceHarness(sim, service)


@pytest.mark.parametrize("golden_path", GOLDEN_FILES, ids=lambda p: p.stem)
def test_golden(golden_path, tmp_path):
    case = json.loads(golden_path.read_text())
    harness = make_harness(tmp_path, case.get("register_sensor", False))
    try:
        for body in case.get("setup", []):
            status, reply = harness.client.post(body)
            assert status == 200, f"setup failed: {reply}"
        for _ in range(case.get("ticks", 0)):
            harness.sim.step()

        expected = case["response"]
        if "stream" in case:
            spec = case["stream"]
            conn, resp = harness.client.open_stream(spec["session"], spec["period_ms"])
            assert resp.status == expected["status"]
            for _ in range(spec["lines"]):
                harness.sim.step()
            lines = [json.loads(resp.readline()) for _ in range(spec["lines"])]
            resp.close()
            conn.close()
            assert lines == expected["lines"]
            return

        req = case["request"]
        needs_tick = case.get("needs_tick", False)
        if req["method"] == "POST":
            raw = req["raw"].encode() if "raw" in req else None
            if needs_tick:
                status, body = harness.post_async(req["body"])
            else:
                status, body = harness.client.post(req.get("body"), raw=raw, path=req["path"])
        else:
            status, body = harness.client.get_json(req["path"])

        assert status == expected["status"]
        if "body" in expected:
            assert body == expected["body"]
        else:
            assert body["ok"] is False
            assert body["error"].startswith(expected["error_prefix"])
    finally:
        harness.service.stop()


def test_golden_files_exist():
    assert len(GOLDEN_FILES) >= 15
