import json
import time

import pytest
from fastapi.testclient import TestClient

from srload.config import default_config_text
from srload.service import create_app


@pytest.fixture(scope="module")
def client(cfg):
    cfg.engine_rate_model()  # prebuild the shared table
    app = create_app(cfg)
    with TestClient(app) as c:
        yield c


def make_session(client, **kwargs):
    body = {"seed": 77, "time_scale": 50.0}
    body.update(kwargs)
    r = client.post("/api/sessions", json=body)
    assert r.status_code == 200
    return r.json()


class TestHttpEndpoints:
    def test_session_creation_is_idempotent_by_key(self, client):
        a = make_session(client, session_key="alpha")
        b = make_session(client, session_key="alpha")
        assert a["session_id"] == b["session_id"]
        assert a["created"] and not b["created"]
        c = make_session(client, session_key="beta")
        assert c["session_id"] != a["session_id"]

    def test_validate_endpoint(self, client):
        ok = client.post("/api/validate", json={"config_yaml": default_config_text()})
        assert ok.json() == {"valid": True, "errors": []}
        bad_yaml = default_config_text().replace("abundance: 0.8301507537688442",
                                                 "abundance: 0.5")
        bad = client.post("/api/validate", json={"config_yaml": bad_yaml})
        assert bad.json()["valid"] is False
        assert "abundance" in bad.json()["errors"][0]

    def test_invalid_config_rejected_at_creation(self, client):
        r = client.post("/api/sessions", json={"config_yaml": "nope: 1"})
        assert r.status_code == 422

    def test_unknown_session_404(self, client):
        assert client.get("/api/sessions/deadbeef").status_code == 404

    def test_session_state_endpoint(self, client):
        s = make_session(client)
        r = client.get(f"/api/sessions/{s['session_id']}")
        state = r.json()
        assert state["proto_version"] == 1
        assert state["crystal"] == []
        assert state["oven_power_w"] == 0.0


def recv_until(ws, want_type, limit=200):
    for _ in range(limit):
        msg = json.loads(ws.receive_text())
        if msg["type"] == want_type:
            return msg
    raise AssertionError(f"no {want_type!r} message within {limit} messages")


class TestWebSocketStream:
    def test_hello_and_command_roundtrip(self, client):
        s = make_session(client, session_key="ws-1")
        with client.websocket_connect(f"/api/sessions/{s['session_id']}/stream") as ws:
            hello = json.loads(ws.receive_text())
            assert hello["type"] == "hello"
            assert hello["proto_version"] == 1
            assert hello["snapshot"]["crystal"] == []
            ws.send_text(json.dumps({
                "type": "command", "req_id": 1, "cmd": "set_oven_power",
                "args": {"power_w": 2.0}}))
            ack = recv_until(ws, "ack")
            assert ack["ok"] and ack["req_id"] == 1
            assert ack["applied"]["command"] == "set_oven_power"
            ws.send_text(json.dumps({
                "type": "command", "req_id": 2, "cmd": "set_oven_power",
                "args": {"power_w": -4.0}}))
            nack = recv_until(ws, "ack")
            assert nack["ok"] is False and "power_w" in nack["error"]

    def test_invalid_payloads_get_error_acks(self, client):
        s = make_session(client, session_key="ws-2")
        with client.websocket_connect(f"/api/sessions/{s['session_id']}/stream") as ws:
            json.loads(ws.receive_text())
            ws.send_text("this is not json\n")
            ack = recv_until(ws, "ack")
            assert ack["ok"] is False and "JSON" in ack["error"]
            ws.send_text(json.dumps({"type": "telemetry"}))
            ack = recv_until(ws, "ack")
            assert ack["ok"] is False

    def test_events_flow_and_capture_appears(self, client):
        s = make_session(client, session_key="ws-3", time_scale=400.0, seed=3)
        sid = s["session_id"]
        with client.websocket_connect(f"/api/sessions/{sid}/stream") as ws:
            json.loads(ws.receive_text())
            for req, (cmd, args) in enumerate([
                    ("set_oven_power", {"power_w": 2.0}),
                    ("set_shutter", {"name": "cooling", "open": True}),
                    ("set_shutter", {"name": "461", "open": True}),
                    ("set_shutter", {"name": "405", "open": True})]):
                ws.send_text(json.dumps({"type": "command", "req_id": req,
                                         "cmd": cmd, "args": args}))
            captured = 0
            bins = 0
            deadline = time.time() + 30.0
            while time.time() < deadline and captured == 0:
                msg = json.loads(ws.receive_text())
                if msg["type"] != "events":
                    continue
                for ev in msg["events"]:
                    if ev["kind"] == "captured":
                        captured += 1
                    elif ev["kind"] == "fluorescence_bin":
                        bins += 1
            assert captured >= 1, "no ion captured through the service stream"
            assert bins > 100

    def test_cursor_resume(self, client):
        s = make_session(client, session_key="ws-4", time_scale=100.0, seed=4)
        sid = s["session_id"]
        with client.websocket_connect(f"/api/sessions/{sid}/stream") as ws:
            json.loads(ws.receive_text())
            ws.send_text(json.dumps({"type": "command", "req_id": 0,
                                     "cmd": "set_oven_power", "args": {"power_w": 1.0}}))
            recv_until(ws, "ack")
            ev_msg = recv_until(ws, "events")
            seqs_first = [e["seq"] for e in ev_msg["events"]]
        # reconnect from cursor 0 replays from the start
        with client.websocket_connect(f"/api/sessions/{sid}/stream?cursor=0") as ws:
            hello = json.loads(ws.receive_text())
            assert hello["type"] == "hello"
            replay = recv_until(ws, "events")
            assert replay["events"][0]["seq"] == 0
            assert seqs_first[0] in [e["seq"] for e in replay["events"]]
