"""Deterministic discrete-event model of a half-duplex multi-drop serial bus.

One master port and any number of slave ports share a single wire. Every
byte a port transmits is delivered to every other attached port one byte
time later (8N1 framing: 10 bit times per byte). The model is a pure
function of (config, seed, operation script):

* corruption flips delivered bytes per receiver with a seeded RNG,
* overlapping transmissions garble the wire to 0xFF for everyone,
* all activity lands in an append-only, totally ordered event trace.

Simulated time only; nothing here sleeps or reads the wall clock.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Callable, Iterable, Optional

# -- Event kinds ---------------------------------------------------------------

BYTE_SENT = "byte_sent"
BYTE_DELIVERED = "byte_delivered"
BYTE_CORRUPTED = "byte_corrupted"
COLLISION = "collision"
ATTACH = "attach"
DETACH = "detach"

MASTER = "master"
SLAVE = "slave"

COLLISION_VALUE = 0xFF

ByteSink = Callable[[int], None]


class BusError(Exception):
    """Base class for bus misuse."""


class SecondMasterError(BusError):
    """A master port is already attached."""


class UnknownPortError(BusError):
    """Operation on a port id that is not attached."""


@dataclass(frozen=True)
class BusConfig:
    """Wire parameters. byte_time_us derives from baud (10 bits per byte)."""

    baud: int = 9600
    corruption_probability: float = 0.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.baud <= 0:
            raise ValueError(f"baud must be positive, got {self.baud}")
        if not 0.0 <= self.corruption_probability <= 1.0:
            raise ValueError(
                f"corruption_probability must be in [0, 1], got "
                f"{self.corruption_probability}"
            )

    @property
    def byte_time_us(self) -> int:
        return round(10_000_000 / self.baud)


@dataclass(frozen=True, slots=True)
class BusEvent:
    """One trace record. Ordered by (timestamp_us, seq)."""

    timestamp_us: int
    seq: int
    kind: str
    port_id: int
    value: Optional[int] = None

    def to_line(self) -> str:
        value = "-" if self.value is None else str(self.value)
        return f"{self.timestamp_us} {self.kind} {self.port_id} {value}"


@dataclass(frozen=True)
class TransmissionHandle:
    """Scheduling receipt for one transmit call."""

    port_id: int
    start_us: int
    end_us: int
    byte_count: int


@dataclass
class _Port:
    port_id: int
    kind: str
    on_byte: Optional[ByteSink] = None
    attached: bool = True
    tx_busy_until: int = 0
    # Parallel arrays of transmission span starts/ends, sorted, non-overlapping.
    span_starts: list[int] = field(default_factory=list)
    span_ends: list[int] = field(default_factory=list)


class Bus:
    """The shared wire plus its simulation clock and event trace.

    All mutations must come from a single owner (or be externally
    serialized); receive callbacks run on the caller's context during
    advance().
    """

    def __init__(self, config: BusConfig | None = None) -> None:
        self.config = config or BusConfig()
        self.now_us = 0
        self._seq = 0
        self._ports: dict[int, _Port] = {}
        self._next_port_id = 0
        self._heap: list[tuple[int, int, tuple]] = []
        self._rng = random.Random(self.config.rng_seed)
        self.trace: list[BusEvent] = []

    # -- ports ------------------------------------------------------------

    @property
    def byte_time_us(self) -> int:
        return self.config.byte_time_us

    def attach(self, port_kind: str, on_byte: ByteSink | None = None) -> int:
        """Join the bus. At most one master port may exist at a time."""
        if port_kind not in (MASTER, SLAVE):
            raise ValueError(f"port_kind must be {MASTER!r} or {SLAVE!r}")
        if port_kind == MASTER and any(
            p.kind == MASTER and p.attached for p in self._ports.values()
        ):
            raise SecondMasterError("bus already has a master port")
        port_id = self._next_port_id
        self._next_port_id += 1
        self._ports[port_id] = _Port(port_id=port_id, kind=port_kind, on_byte=on_byte)
        self._log(ATTACH, port_id)
        return port_id

    def detach(self, port_id: int) -> None:
        """Leave the bus. In-flight traffic between other ports is untouched."""
        port = self._require_port(port_id)
        port.attached = False
        # The port stops driving the wire: drop queued transmissions outright
        # and clamp one mid-flight span at the detach instant.
        while port.span_starts and port.span_starts[-1] >= self.now_us:
            port.span_starts.pop()
            port.span_ends.pop()
        if port.span_ends and port.span_ends[-1] > self.now_us:
            port.span_ends[-1] = self.now_us
        port.tx_busy_until = min(port.tx_busy_until, self.now_us)
        self._log(DETACH, port_id)

    def is_attached(self, port_id: int) -> bool:
        port = self._ports.get(port_id)
        return port is not None and port.attached

    def _require_port(self, port_id: int) -> _Port:
        port = self._ports.get(port_id)
        if port is None or not port.attached:
            raise UnknownPortError(f"no attached port {port_id}")
        return port

    # -- transmission -------------------------------------------------------

    def transmit(
        self, port_id: int, data: bytes, at_us: int | None = None
    ) -> TransmissionHandle:
        """Schedule *data* on the wire, one byte per byte time.

        Transmission begins at *at_us* (default: now), deferred until the
        port's own previous transmission has drained; a port never overlaps
        itself. Each byte is delivered to every other attached port at its
        send time + one byte time.
        """
        port = self._require_port(port_id)
        bt = self.byte_time_us
        start = max(self.now_us, port.tx_busy_until)
        if at_us is not None:
            start = max(start, at_us)
        end = start + len(data) * bt
        if data:
            port.span_starts.append(start)
            port.span_ends.append(end)
            port.tx_busy_until = end
        for i, value in enumerate(data):
            byte_start = start + i * bt
            self._schedule(byte_start, ("send", port_id, value))
            self._schedule(byte_start + bt, ("deliver", port_id, value, byte_start))
        return TransmissionHandle(
            port_id=port_id, start_us=start, end_us=end, byte_count=len(data)
        )

    # -- clock ---------------------------------------------------------------

    def advance(self, duration_us: int) -> list[BusEvent]:
        """Advance the clock, firing every event due in the window in order."""
        if duration_us < 0:
            raise ValueError(f"duration_us must be >= 0, got {duration_us}")
        target = self.now_us + duration_us
        first_new = len(self.trace)
        while self._heap and self._heap[0][0] <= target:
            when, _, action = heappop(self._heap)
            self.now_us = when
            self._fire(action)
        self.now_us = target
        return self.trace[first_new:]

    def next_event_time(self) -> int | None:
        """Timestamp of the earliest pending event, or None when idle."""
        return self._heap[0][0] if self._heap else None

    def drain(self) -> list[BusEvent]:
        """Advance until no events remain pending (convenience for tests)."""
        fired: list[BusEvent] = []
        while self._heap:
            fired.extend(self.advance(self._heap[0][0] - self.now_us))
        return fired

    # -- internals -------------------------------------------------------------

    def _schedule(self, when: int, action: tuple) -> None:
        self._seq += 1
        heappush(self._heap, (when, self._seq, action))

    def _log(self, kind: str, port_id: int, value: int | None = None) -> BusEvent:
        self._seq += 1
        event = BusEvent(self.now_us, self._seq, kind, port_id, value)
        self.trace.append(event)
        return event

    def _fire(self, action: tuple) -> None:
        if action[0] == "send":
            _, port_id, value = action
            if self.is_attached(port_id):
                self._log(BYTE_SENT, port_id, value)
        elif action[0] == "deliver":
            _, port_id, value, byte_start = action
            if self.is_attached(port_id):
                self._deliver(port_id, value, byte_start)

    def _deliver(self, sender_id: int, value: int, byte_start: int) -> None:
        byte_end = byte_start + self.byte_time_us
        collided = self._overlaps_other_tx(sender_id, byte_start, byte_end)
        if collided:
            self._log(COLLISION, sender_id, COLLISION_VALUE)
        p = self.config.corruption_probability
        for receiver in sorted(self._ports):
            port = self._ports[receiver]
            if receiver == sender_id or not port.attached:
                continue
            delivered = value
            if collided:
                delivered = COLLISION_VALUE
            elif p > 0.0 and self._rng.random() < p:
                delivered ^= self._rng.randint(1, 255)
                self._log(BYTE_CORRUPTED, receiver, delivered)
            self._log(BYTE_DELIVERED, receiver, delivered)
            if port.on_byte is not None:
                port.on_byte(delivered)

    def _overlaps_other_tx(self, sender_id: int, start: int, end: int) -> bool:
        for other_id, other in self._ports.items():
            if other_id == sender_id or not other.span_ends:
                continue
            idx = bisect_right(other.span_ends, start)
            if idx < len(other.span_starts) and other.span_starts[idx] < end:
                return True
        return False


# -- Trace export ----------------------------------------------------------------


def trace_lines(events: Iterable[BusEvent]) -> list[str]:
    """Render events as `timestamp_us kind port value` records."""
    return [event.to_line() for event in events]


def export_trace(events: Iterable[BusEvent], path: str) -> int:
    """Write newline-delimited trace records to *path*; returns line count."""
    lines = trace_lines(events)
    with open(path, "w", encoding="ascii") as fp:
        for line in lines:
            fp.write(line + "\n")
    return len(lines)
