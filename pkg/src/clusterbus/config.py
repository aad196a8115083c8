"""Shared JSON config file: bus parameters, node population, server, policy.

The same file drives the simulator (which nodes exist, with what sensor
baselines), the master's transaction policy, and the HTTP server. The
path comes from the CLI flag, else the CLUSTERBUS_CONFIG environment
variable, else built-in defaults.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field

from .audit import AuditLog
from .bus import Bus, BusConfig
from .master import BusMaster, Registry, TransactionPolicy
from .node import NodeController
from .service import ControlService

ENV_CONFIG_PATH = "CLUSTERBUS_CONFIG"

DEFAULTS: dict = {
    "bus": {
        "baud": 9600,
        "corruption_probability": 0.0,
        "seed": 1,
    },
    "nodes": [],
    "policy": {
        "timeout_us": 100_000,
        "retries": 2,
        "inter_retry_gap_us": 10_000,
    },
    "server": {
        "bind": "127.0.0.1:8735",
        "audit_path": "clusterbus-audit.ndjson",
        "state_path": None,
        "static_dir": None,
        "scan_on_start": True,
    },
}


def load_config(path: str | None = None) -> dict:
    """Read config JSON and overlay it onto the defaults."""
    config = copy.deepcopy(DEFAULTS)
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH)
    if path:
        with open(path, "r", encoding="utf-8") as fp:
            loaded = json.load(fp)
        for section in ("bus", "policy", "server"):
            config[section].update(loaded.get(section, {}))
        config["nodes"] = loaded.get("nodes", [])
    return config


def node_sensor_seed(bus_seed: int, address: int) -> int:
    """Per-node jitter seed derived from the shared bus seed."""
    return bus_seed * 257 + address


@dataclass
class SimWorld:
    """Everything one deployment owns: wire, emulated slaves, master stack."""

    bus: Bus
    nodes: list[NodeController]
    master: BusMaster
    registry: Registry
    audit: AuditLog
    service: ControlService
    config: dict = field(default_factory=dict)

    def node_at(self, address: int) -> NodeController | None:
        for node in self.nodes:
            if node.read_dip() == address:
                return node
        return None

    def close(self) -> None:
        self.audit.close()


def build_world(config: dict, audit_path: str | None = None) -> SimWorld:
    """Assemble bus + emulated nodes + master + service from a config dict."""
    bus_cfg = config.get("bus", {})
    bus = Bus(
        BusConfig(
            baud=int(bus_cfg.get("baud", 9600)),
            corruption_probability=float(bus_cfg.get("corruption_probability", 0.0)),
            rng_seed=int(bus_cfg.get("seed", 1)),
        )
    )

    nodes: list[NodeController] = []
    for entry in config.get("nodes", []):
        address = int(entry["address"])
        node = NodeController(
            address=address,
            relay_on=bool(entry.get("relay_on", False)),
            temperature_baseline=int(entry.get("temp_baseline", 280)),
            humidity_baseline=int(entry.get("humid_baseline", 450)),
            sensor_seed=int(
                entry.get(
                    "sensor_seed",
                    node_sensor_seed(int(bus_cfg.get("seed", 1)), address),
                )
            ),
        )
        node.attach_to(bus)
        nodes.append(node)

    policy_cfg = config.get("policy", {})
    policy = TransactionPolicy(
        timeout_us=int(policy_cfg.get("timeout_us", 100_000)),
        retries=int(policy_cfg.get("retries", 2)),
        inter_retry_gap_us=int(policy_cfg.get("inter_retry_gap_us", 10_000)),
    )
    master = BusMaster(bus, policy=policy)

    server_cfg = config.get("server", {})
    if audit_path is None:
        audit_path = server_cfg.get("audit_path") or "clusterbus-audit.ndjson"
    audit = AuditLog(audit_path)
    registry = Registry()
    service = ControlService(
        master,
        registry,
        audit,
        emulated_nodes=nodes,
        state_path=server_cfg.get("state_path"),
    )
    return SimWorld(
        bus=bus,
        nodes=nodes,
        master=master,
        registry=registry,
        audit=audit,
        service=service,
        config=config,
    )
