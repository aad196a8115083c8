"""HTTP API tests against a live threading server on an ephemeral port."""

from __future__ import annotations

import threading

import pytest
import requests

from clusterbus.httpapi import ApiServer

BT = 1042


@pytest.fixture
def api(make_world, tmp_path):
    world = make_world(
        addresses=[1, 2, 3, 5, 8],
        node_overrides={5: {"relay_on": True}},
    )
    server = ApiServer(world.service, bind="127.0.0.1:0").start()
    yield world, server.url
    server.stop()


def test_nodes_empty_before_scan(api):
    world, url = api
    assert requests.get(f"{url}/nodes").json() == []


def test_scan_then_nodes_matches_registry(api):
    world, url = api
    scan = requests.post(f"{url}/bus/scan", json={"from": 1, "to": 20}).json()
    assert scan["responders"] == [1, 2, 3, 5, 8]
    listing = requests.get(f"{url}/nodes").json()
    assert [record["address"] for record in listing] == [1, 2, 3, 5, 8]
    assert listing == world.service.node_records()


def test_get_single_node_with_diagnostics(api):
    world, url = api
    requests.post(f"{url}/bus/scan", json={"from": 5, "to": 5})
    record = requests.get(f"{url}/nodes/5").json()
    assert record["address"] == 5
    assert record["last_status"] == "on"
    assert record["diagnostics"]["frames_executed"] >= 1


def test_get_unknown_node_404(api):
    world, url = api
    assert requests.get(f"{url}/nodes/99").status_code == 404


def test_power_off_happy_path(api):
    world, url = api
    before = len(world.audit.entries())
    response = requests.post(
        f"{url}/nodes/5/power", json={"state": "off"}, headers={"X-Actor": "alice"}
    )
    assert response.status_code == 200
    assert response.json()["outcome"] == "acked"
    assert world.node_at(5).relay_on is False
    entries = world.audit.entries()
    assert len(entries) == before + 1
    assert entries[-1].actor == "alice"
    assert entries[-1].target == "5"


def test_power_timeout_resolves_200(api):
    world, url = api
    response = requests.post(f"{url}/nodes/200/power", json={"state": "on"})
    assert response.status_code == 200
    assert response.json()["outcome"] == "timeout"


def test_power_out_of_range_address_400(api):
    world, url = api
    response = requests.post(f"{url}/nodes/300/power", json={"state": "on"})
    assert response.status_code == 400
    assert "error" in response.json()


def test_power_bad_state_400(api):
    world, url = api
    assert (
        requests.post(f"{url}/nodes/5/power", json={"state": "sideways"}).status_code
        == 400
    )


def test_power_garbage_body_400(api):
    world, url = api
    response = requests.post(
        f"{url}/nodes/5/power",
        data=b"{not json",
        headers={"Content-Type": "application/json"},
    )
    assert response.status_code == 400


def test_sensors_endpoint(api):
    world, url = api
    readings = requests.get(f"{url}/nodes/3/sensors").json()
    assert 275 <= readings["temperature"] <= 285
    assert 445 <= readings["humidity"] <= 455


def test_sensors_timeout_leg_504(api):
    world, url = api
    response = requests.get(f"{url}/nodes/250/sensors")
    assert response.status_code == 504
    assert response.json() == {"error": "timeout", "leg": "temperature"}


def test_broadcast_endpoint(api):
    world, url = api
    response = requests.post(f"{url}/power/broadcast", json={"state": "off"})
    assert response.status_code == 200
    assert all(not node.relay_on for node in world.nodes)


def test_blocks_crud_and_power(api):
    world, url = api
    created = requests.post(
        f"{url}/blocks", json={"name": "alpha", "nodes": [1, 2, 3]}
    )
    assert created.status_code == 201
    assert requests.get(f"{url}/blocks").json() == {"alpha": [1, 2, 3]}
    powered = requests.post(f"{url}/blocks/alpha/power", json={"state": "on"}).json()
    assert powered["outcomes"] == {"1": "acked", "2": "acked", "3": "acked"}
    assert world.node_at(1).relay_on


def test_unknown_block_404(api):
    world, url = api
    response = requests.post(f"{url}/blocks/ghost/power", json={"state": "on"})
    assert response.status_code == 404


def test_audit_endpoint_filters(api):
    world, url = api
    requests.post(
        f"{url}/nodes/1/power", json={"state": "on"}, headers={"X-Actor": "alice"}
    )
    requests.post(
        f"{url}/nodes/2/power", json={"state": "on"}, headers={"X-Actor": "bob"}
    )
    entries = requests.get(f"{url}/audit", params={"actor": "alice"}).json()
    assert len(entries) == 1
    assert entries[0]["target"] == "1"


def test_trace_endpoint(api):
    world, url = api
    requests.post(f"{url}/nodes/1/power", json={"state": "on"})
    events = requests.get(f"{url}/bus/trace", params={"limit": "50"}).json()
    assert events
    assert {"timestamp_us", "kind", "port", "value"} <= set(events[0])


def test_health_endpoint(api):
    world, url = api
    body = requests.get(f"{url}/health").json()
    assert body["status"] == "ok"


def test_unknown_route_404(api):
    world, url = api
    assert requests.get(f"{url}/frobnicate").status_code == 404


def test_concurrent_posts_serialize_on_the_bus(api):
    world, url = api
    addresses = [1, 2, 3, 5, 8] * 4
    errors = []

    def toggle(address):
        try:
            r = requests.post(f"{url}/nodes/{address}/power", json={"state": "on"})
            assert r.status_code == 200 and r.json()["outcome"] == "acked"
        except Exception as exc:  # surface failures from worker threads
            errors.append(exc)

    threads = [threading.Thread(target=toggle, args=(a,)) for a in addresses]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors

    sends = [
        e.timestamp_us
        for e in world.bus.trace
        if e.kind == "byte_sent" and e.port_id == world.master.port_id
    ]
    assert len(sends) == 4 * len(addresses)
    for i in range(0, len(sends), 4):
        frame = sends[i : i + 4]
        assert [t - frame[0] for t in frame] == [0, BT, 2 * BT, 3 * BT]
    collisions = [e for e in world.bus.trace if e.kind == "collision"]
    assert collisions == []


def test_static_dashboard_serving(make_world, tmp_path):
    static = tmp_path / "dist"
    static.mkdir()
    (static / "index.html").write_text("<html><body>dash</body></html>")
    (static / "app.js").write_text("console.log('ui')")
    world = make_world(addresses=[1])
    server = ApiServer(world.service, bind="127.0.0.1:0", static_dir=str(static)).start()
    try:
        url = server.url
        root = requests.get(f"{url}/")
        assert root.status_code == 200 and "dash" in root.text
        js = requests.get(f"{url}/ui/app.js")
        assert js.status_code == 200 and "console" in js.text
        assert requests.get(f"{url}/ui/missing.js").status_code == 404
        assert requests.get(f"{url}/ui/../escape").status_code in (403, 404)
        # API still routes under static serving
        assert requests.get(f"{url}/health").status_code == 200
    finally:
        server.stop()
