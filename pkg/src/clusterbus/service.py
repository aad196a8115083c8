"""Operator-facing control operations over the transaction engine.

Every public operation here is one auditable action: it funnels through a
fair FIFO lock (so concurrent API callers reach the bus strictly in
arrival order, one transaction at a time), updates the registry from
acknowledged responses, and appends exactly one audit entry, timeouts
included. Block operations log once for the whole block, not per member.
"""

from __future__ import annotations

import json
import os
import threading
from typing import Optional

from .audit import AuditEntry, AuditLog
from .bus import Bus
from .master import (
    BusMaster,
    Outcome,
    Registry,
    TransactionPolicy,
    scan_policy_for,
    validate_unicast_address,
)
from .node import NodeController
from .protocol import CommandCode

ON = "on"
OFF = "off"


class SensorReadError(Exception):
    """Base for sensor acquisition failures; carries the failing leg."""

    def __init__(self, leg: str, message: str) -> None:
        super().__init__(message)
        self.leg = leg


class SensorTimeoutError(SensorReadError):
    def __init__(self, leg: str) -> None:
        super().__init__(leg, f"{leg} read timed out")


class MalformedPayloadError(SensorReadError):
    def __init__(self, leg: str, payload: bytes) -> None:
        super().__init__(leg, f"{leg} payload {payload.hex()!r} is not 2 bytes")
        self.payload = payload


class FifoLock:
    """Mutual exclusion granted strictly in arrival (ticket) order."""

    def __init__(self) -> None:
        self._mutex = threading.Lock()
        self._granted = threading.Condition(self._mutex)
        self._next_ticket = 0
        self._serving = 0

    def __enter__(self) -> "FifoLock":
        with self._mutex:
            ticket = self._next_ticket
            self._next_ticket += 1
            while ticket != self._serving:
                self._granted.wait()
        return self

    def __exit__(self, *_exc) -> None:
        with self._mutex:
            self._serving += 1
            self._granted.notify_all()


class ControlService:
    """Registry + audit + bus transactions behind one serialized front door."""

    def __init__(
        self,
        master: BusMaster,
        registry: Registry,
        audit: AuditLog,
        emulated_nodes: Optional[list[NodeController]] = None,
        state_path: Optional[str] = None,
    ) -> None:
        self.master = master
        self.registry = registry
        self.audit = audit
        self.nodes = emulated_nodes or []
        self.state_path = state_path
        self.transaction_lock = FifoLock()
        self._registry_lock = threading.Lock()
        if state_path and os.path.exists(state_path):
            with open(state_path, "r", encoding="utf-8") as fp:
                registry.load_json(json.load(fp))

    @property
    def bus(self) -> Bus:
        return self.master.bus

    # -- power ------------------------------------------------------------

    def power_node(self, address: int, state: str, actor: str = "anonymous") -> Outcome:
        """Unicast power command; audited whether it acks or times out."""
        code = _power_code(state)
        validate_unicast_address(address)
        with self.transaction_lock:
            outcome = self.master.send_command(address, code)
            if outcome.acked:
                self._mark_seen(address, status=state)
            self.audit.append(actor, str(address), code.name.lower(), outcome.status)
        return outcome

    def broadcast_power(self, state: str, actor: str = "anonymous") -> None:
        """One broadcast frame, no responses; acked by convention."""
        code = _power_code(state)
        with self.transaction_lock:
            self.master.broadcast(code)
            self.audit.append(
                actor, "broadcast", code.name.lower(), "acked", detail="by convention"
            )

    def power_block(
        self, name: str, state: str, actor: str = "anonymous"
    ) -> dict[int, Outcome]:
        """Sequential unicast power commands to every member of a block.

        Partial failure is allowed: each member resolves independently and
        the single audit entry summarizes the tally.
        """
        code = _power_code(state)
        with self.transaction_lock:
            members = self.registry.block_members(name)
            outcomes: dict[int, Outcome] = {}
            for address in members:
                outcome = self.master.send_command(address, code)
                outcomes[address] = outcome
                if outcome.acked:
                    self._mark_seen(address, status=state)
            acked = sum(1 for o in outcomes.values() if o.acked)
            status = "acked" if acked == len(outcomes) else "error"
            self.audit.append(
                actor,
                name,
                code.name.lower(),
                status,
                detail=f"{acked}/{len(outcomes)} acked",
            )
        return outcomes

    # -- queries ---------------------------------------------------------------

    def query_status(self, address: int, actor: str = "anonymous") -> Outcome:
        """STATUS_QUERY transaction; registry learns on/off from the payload."""
        validate_unicast_address(address)
        with self.transaction_lock:
            outcome = self.master.send_command(address, CommandCode.STATUS_QUERY)
            if outcome.acked and outcome.payload:
                self._mark_seen(address, status=ON if outcome.payload[0] else OFF)
            self.audit.append(actor, str(address), "status_query", outcome.status)
        return outcome

    def read_sensors(self, address: int, actor: str = "anonymous") -> dict[str, int]:
        """Temperature then humidity, both in tenths; reports the failing leg."""
        validate_unicast_address(address)
        with self.transaction_lock:
            try:
                temperature = self._sensor_leg(address, CommandCode.READ_TEMPERATURE, "temperature")
                humidity = self._sensor_leg(address, CommandCode.READ_HUMIDITY, "humidity")
            except SensorReadError as exc:
                outcome = "timeout" if isinstance(exc, SensorTimeoutError) else "error"
                self.audit.append(
                    actor, str(address), "read_sensors", outcome, detail=exc.leg
                )
                raise
            self._mark_seen(address)
            self.audit.append(actor, str(address), "read_sensors", "acked")
        return {"temperature": temperature, "humidity": humidity}

    def _sensor_leg(self, address: int, code: CommandCode, leg: str) -> int:
        outcome = self.master.send_command(address, code)
        if not outcome.acked:
            raise SensorTimeoutError(leg)
        if outcome.payload is None or len(outcome.payload) != 2:
            raise MalformedPayloadError(leg, outcome.payload or b"")
        return int.from_bytes(outcome.payload, "big")

    # -- discovery -----------------------------------------------------------------

    def scan_bus(
        self, start: int = 1, stop: int = 254, actor: str = "anonymous"
    ) -> list[int]:
        """Probe every address in [start, stop] with a fast policy.

        An empty range (start > stop) is a no-op sweep with zero responders.
        """
        validate_unicast_address(start)
        validate_unicast_address(stop)
        fast = scan_policy_for(self.bus)
        responders: list[int] = []
        with self.transaction_lock:
            for address in range(start, stop + 1):
                outcome = self.master.send_command(
                    address, CommandCode.STATUS_QUERY, policy=fast
                )
                if outcome.acked:
                    responders.append(address)
                    if outcome.payload:
                        self._mark_seen(
                            address, status=ON if outcome.payload[0] else OFF
                        )
            self.audit.append(
                actor,
                f"scan:{start}-{stop}",
                "scan",
                "acked",
                detail=f"{len(responders)} responders",
            )
        return responders

    # -- registry and introspection ----------------------------------------------------

    def node_records(self) -> list[dict]:
        with self._registry_lock:
            return [record.to_json() for record in self.registry.all()]

    def node_record(self, address: int) -> Optional[dict]:
        with self._registry_lock:
            record = self.registry.get(address)
            if record is None:
                return None
            data = record.to_json()
        diagnostics = self.node_diagnostics(address)
        if diagnostics is not None:
            data["diagnostics"] = diagnostics
        return data

    def node_diagnostics(self, address: int) -> Optional[dict]:
        """Emulator diagnostics for the node currently wearing *address*."""
        for node in self.nodes:
            if node.read_dip() == address:
                return node.diagnostics.snapshot()
        return None

    def blocks(self) -> dict[str, list[int]]:
        with self._registry_lock:
            return self.registry.blocks()

    def define_block(self, name: str, addresses: list[int]) -> None:
        with self._registry_lock:
            self.registry.assign_block(name, addresses)
            self._save_state_locked()

    def recent_trace(self, limit: int = 200) -> list[dict]:
        events = self.bus.trace[-limit:] if limit else list(self.bus.trace)
        return [
            {
                "timestamp_us": e.timestamp_us,
                "kind": e.kind,
                "port": e.port_id,
                "value": e.value,
            }
            for e in events
        ]

    def audit_query(self, **filters) -> list[AuditEntry]:
        return self.audit.query(**filters)

    # -- internals ------------------------------------------------------------------------

    def _mark_seen(self, address: int, status: Optional[str] = None) -> None:
        with self._registry_lock:
            record = self.registry.upsert(address)
            record.last_seen = self.bus.now_us
            if status is not None:
                record.last_status = status
            self._save_state_locked()

    def _save_state_locked(self) -> None:
        if not self.state_path:
            return
        with open(self.state_path, "w", encoding="utf-8") as fp:
            json.dump(self.registry.to_json(), fp, indent=2)
            fp.write("\n")


def _power_code(state: str) -> CommandCode:
    if state == ON:
        return CommandCode.POWER_ON
    if state == OFF:
        return CommandCode.POWER_OFF
    raise ValueError(f"power state must be 'on' or 'off', got {state!r}")
