"""Master-side transaction engine and node registry.

The engine owns the single master port and runs the whole bus discipline:
exactly one request/response transaction is in flight at any moment, every
exchange is master-initiated, and silence or garbage past the timeout
window triggers a bounded number of retransmissions. That serialization is
the system's entire collision-avoidance story, so the engine never lets a
second frame onto the wire while a transaction is unresolved.

Simulated time only: waiting for a response means advancing the bus clock,
so a full timeout costs microseconds of wall time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .bus import MASTER, Bus
from .protocol import (
    BROADCAST_ADDRESS,
    MAX_PAYLOAD,
    RESPONSE_FLAG,
    RESPONSE_OVERHEAD,
    STX,
    ChecksumMismatchError,
    CommandCode,
    Frame,
    FramingError,
    InvalidAddressError,
    LengthMismatchError,
    ProtocolError,
    ResponseFrame,
    decode_response,
    encode_command,
)

# Worst-case bus occupancy of one exchange, in byte times: 4 (command) +
# 2 (slave turnaround) + 6 + MAX_PAYLOAD (largest response).
EXCHANGE_BYTE_TIMES = 4 + 2 + RESPONSE_OVERHEAD + MAX_PAYLOAD

ACKED = "acked"
TIMEOUT = "timeout"


class BusDetachedError(RuntimeError):
    """The master port is no longer on the bus."""


class NonBroadcastableError(ValueError):
    """Only power commands may be broadcast; queries would collide."""


class UnknownBlockError(KeyError):
    """No block with that name in the registry."""


@dataclass(frozen=True)
class TransactionPolicy:
    """Timeout/retry discipline for one transaction.

    Attempt i's deadline sits at start + (i+1) * timeout_us, so a fully
    silent target resolves after exactly (retries + 1) timeout windows.
    inter_retry_gap_us is a minimum quiet period before a retransmission;
    it is absorbed into the window, which therefore must be big enough for
    the gap plus a whole worst-case exchange.
    """

    timeout_us: int = 100_000
    retries: int = 2
    inter_retry_gap_us: int = 10_000

    def __post_init__(self) -> None:
        if self.timeout_us <= 0:
            raise ValueError("timeout_us must be positive")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.inter_retry_gap_us < 0:
            raise ValueError("inter_retry_gap_us must be >= 0")

    def validate_for(self, byte_time_us: int) -> None:
        floor = EXCHANGE_BYTE_TIMES * byte_time_us + self.inter_retry_gap_us
        if self.timeout_us <= floor:
            raise ValueError(
                f"timeout_us={self.timeout_us} too small: one exchange plus the "
                f"retry gap needs more than {floor} us at this baud"
            )


def scan_policy_for(bus: Bus) -> TransactionPolicy:
    """Fast single-retry policy for discovery sweeps, scaled to the baud."""
    return TransactionPolicy(
        timeout_us=(EXCHANGE_BYTE_TIMES + 4) * bus.byte_time_us,
        retries=1,
        inter_retry_gap_us=0,
    )


@dataclass(frozen=True)
class Outcome:
    """Resolution of one transaction."""

    status: str  # ACKED or TIMEOUT
    payload: Optional[bytes]
    attempts: int
    elapsed_us: int

    @property
    def acked(self) -> bool:
        return self.status == ACKED


@dataclass
class NodeRecord:
    """Master-side registry entry for one node address."""

    address: int
    block: Optional[str] = None
    last_status: str = "unknown"  # unknown | on | off
    last_seen: Optional[int] = None  # simulated microseconds
    labels: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "address": self.address,
            "block": self.block,
            "last_status": self.last_status,
            "last_seen": self.last_seen,
            "labels": list(self.labels),
        }


class Registry:
    """Known nodes and their block assignments. Addresses are unique keys."""

    def __init__(self) -> None:
        self._records: dict[int, NodeRecord] = {}

    def upsert(self, address: int) -> NodeRecord:
        record = self._records.get(address)
        if record is None:
            record = NodeRecord(address=address)
            self._records[address] = record
        return record

    def get(self, address: int) -> Optional[NodeRecord]:
        return self._records.get(address)

    def all(self) -> list[NodeRecord]:
        return [self._records[a] for a in sorted(self._records)]

    def blocks(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for record in self.all():
            if record.block is not None:
                out.setdefault(record.block, []).append(record.address)
        return out

    def assign_block(self, name: str, addresses: list[int]) -> None:
        """(Re)define a block as exactly *addresses*."""
        if not name:
            raise ValueError("block name must be non-empty")
        for address in addresses:
            validate_unicast_address(address)
        for record in self._records.values():
            if record.block == name:
                record.block = None
        for address in addresses:
            self.upsert(address).block = name

    def block_members(self, name: str) -> list[int]:
        members = self.blocks().get(name)
        if members is None:
            raise UnknownBlockError(name)
        return members

    def to_json(self) -> dict:
        return {"nodes": [r.to_json() for r in self.all()]}

    def load_json(self, data: dict) -> None:
        for item in data.get("nodes", []):
            record = self.upsert(int(item["address"]))
            record.block = item.get("block")
            record.last_status = item.get("last_status", "unknown")
            record.last_seen = item.get("last_seen")
            record.labels = list(item.get("labels", []))


def validate_unicast_address(address: int) -> None:
    if not isinstance(address, int) or not 1 <= address <= 254:
        raise InvalidAddressError(
            f"unicast address must be 1-254, got {address!r}"
        )


class ResponseCollector:
    """Master receive path: resynchronizing response-frame parser.

    Feeds on raw bus bytes, emits validated frames, and keeps per-class
    rejection counters for fault statistics.
    """

    def __init__(self) -> None:
        self._buffer = bytearray()
        self.frames: list[ResponseFrame] = []
        self.framing_errors = 0
        self.length_errors = 0
        self.checksum_errors = 0

    def feed(self, value: int) -> None:
        self._buffer.append(value)
        self._parse()

    def _parse(self) -> None:
        while self._buffer:
            if self._buffer[0] != STX:
                del self._buffer[0]
                self.framing_errors += 1
                continue
            if len(self._buffer) < 4:
                return
            payload_length = self._buffer[3]
            if payload_length > MAX_PAYLOAD:
                del self._buffer[0]
                self.length_errors += 1
                continue
            total = RESPONSE_OVERHEAD + payload_length
            if len(self._buffer) < total:
                return
            window = bytes(self._buffer[:total])
            try:
                frame = decode_response(window)
            except ChecksumMismatchError:
                self.checksum_errors += 1
            except LengthMismatchError:
                self.length_errors += 1
            except ProtocolError:
                self.framing_errors += 1
            else:
                self.frames.append(frame)
                del self._buffer[:total]
                continue
            del self._buffer[0]

    def take_matching(self, address: int, echo: int) -> Optional[ResponseFrame]:
        """Pop the first parsed frame from *address* echoing *echo*."""
        for i, frame in enumerate(self.frames):
            if frame.device_number == address and frame.data_type_echo == echo:
                del self.frames[: i + 1]
                return frame
        self.frames.clear()
        return None

    def reset(self) -> None:
        self._buffer.clear()
        self.frames.clear()


class BusMaster:
    """The one master port plus the request/response transaction engine."""

    def __init__(self, bus: Bus, policy: TransactionPolicy | None = None) -> None:
        self.bus = bus
        self.policy = policy or TransactionPolicy()
        self.policy.validate_for(bus.byte_time_us)
        self.collector = ResponseCollector()
        self.port_id = bus.attach(MASTER, on_byte=self.collector.feed)
        self._last_tx_end = 0

    # -- single transaction -------------------------------------------------

    def send_command(
        self,
        address: int,
        command: CommandCode,
        policy: TransactionPolicy | None = None,
    ) -> Outcome:
        """Run one unicast transaction to resolution (acked or timeout).

        Transmits the frame, then advances the simulated clock until a
        checksum-valid response with matching address and echo arrives or
        the attempt window closes; silence or garbage is retried up to
        policy.retries times.
        """
        validate_unicast_address(address)
        self._require_attached()
        policy = policy or self.policy
        policy.validate_for(self.bus.byte_time_us)
        # The previous transaction resolved, so the line is idle: anything a
        # slave started transmitting ended well inside that window. Stale rx
        # bytes are noise from it; drop them rather than resync through them.
        self.collector.reset()
        wire = encode_command(Frame(address, command))
        echo = int(command) | RESPONSE_FLAG
        started = self.bus.now_us
        attempts = 0
        for attempt in range(policy.retries + 1):
            attempts += 1
            deadline = started + (attempt + 1) * policy.timeout_us
            at_us = self.bus.now_us
            if attempt > 0:
                at_us = max(at_us, self._last_tx_end + policy.inter_retry_gap_us)
            handle = self.bus.transmit(self.port_id, wire, at_us=at_us)
            self._last_tx_end = handle.end_us
            response = self._await_response(address, echo, deadline)
            if response is not None:
                return Outcome(
                    status=ACKED,
                    payload=response.payload,
                    attempts=attempts,
                    elapsed_us=self.bus.now_us - started,
                )
        return Outcome(
            status=TIMEOUT,
            payload=None,
            attempts=attempts,
            elapsed_us=self.bus.now_us - started,
        )

    def _await_response(
        self, address: int, echo: int, deadline: int
    ) -> Optional[ResponseFrame]:
        while True:
            response = self.collector.take_matching(address, echo)
            if response is not None:
                return response
            if self.bus.now_us >= deadline:
                return None
            next_at = self.bus.next_event_time()
            if next_at is None or next_at > deadline:
                self.bus.advance(deadline - self.bus.now_us)
            else:
                self.bus.advance(next_at - self.bus.now_us)

    # -- broadcast ------------------------------------------------------------

    def broadcast(self, command: CommandCode) -> None:
        """Fire one broadcast frame; nobody answers, nothing is awaited."""
        if command not in (CommandCode.POWER_ON, CommandCode.POWER_OFF):
            raise NonBroadcastableError(
                f"{command.name} cannot be broadcast: every node would answer at once"
            )
        self._require_attached()
        wire = encode_command(Frame(BROADCAST_ADDRESS, command))
        handle = self.bus.transmit(self.port_id, wire)
        self._last_tx_end = handle.end_us
        self.bus.advance(handle.end_us - self.bus.now_us)

    def _require_attached(self) -> None:
        if not self.bus.is_attached(self.port_id):
            raise BusDetachedError("master port is detached from the bus")
