#!/usr/bin/env python3
"""The master service end to end: scan, blocks, timeouts, audit trail.

Run: python3 demos/04_master_transactions.py
"""

import tempfile

from clusterbus import build_world

config = {
    "bus": {"baud": 9600, "corruption_probability": 0.0, "seed": 2},
    "nodes": [
        {"address": 1},
        {"address": 2},
        {"address": 3},
        {"address": 10, "temp_baseline": 291},
        {"address": 20, "humid_baseline": 388},
    ],
    "policy": {"timeout_us": 100_000, "retries": 2, "inter_retry_gap_us": 10_000},
}
world = build_world(config, audit_path=tempfile.mktemp(suffix=".ndjson"))
service = world.service

print("== discovery ==")
found = service.scan_bus(1, 30, actor="demo")
print(f"scan [1,30] found: {found}")

print("\n== block power ==")
service.define_block("alpha", [1, 2, 3])
outcomes = service.power_block("alpha", "on", actor="demo")
for address, outcome in outcomes.items():
    print(f"  node {address}: {outcome.status} after {outcome.attempts} attempt(s)")

print("\n== a dead address times out on the simulated clock ==")
outcome = service.power_node(99, "on", actor="demo")
print(f"  node 99: {outcome.status} after {outcome.attempts} attempts, "
      f"{outcome.elapsed_us} simulated us (wall time: microseconds)")

print("\n== sensors ==")
for address in (10, 20):
    r = service.read_sensors(address, actor="demo")
    print(f"  node {address}: {r['temperature'] / 10:.1f} C  {r['humidity'] / 10:.1f} %RH")

print("\n== the audit trail remembers everything, timeouts included ==")
for entry in world.audit.entries():
    detail = f" ({entry.detail})" if entry.detail else ""
    print(f"  {entry.actor:>5} {entry.command:<13} -> {entry.target:<9} {entry.outcome}{detail}")

print("\n== registry after the session ==")
for record in world.registry.all():
    print(f"  addr {record.address:>3}  block={record.block or '-':<6} "
          f"status={record.last_status:<7} last_seen={record.last_seen}")
world.close()
