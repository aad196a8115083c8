"""Behavioral emulation of one slave node-controller.

Each node owns an 8-switch DIP bank (its bus address, re-read at every
frame completion, never cached), a solid-state relay controlling the
node's power, a 3-digit seven-segment display showing the address with
the leftmost decimal point lit while the relay is on, and simulated
temperature/humidity sensors.

Bytes arrive from the bus one at a time, garbage included. The receive
buffer holds at most 4 bytes; whenever a full window fails to parse as a
command frame the buffer slides by one byte, mirroring the codec's
resync_scan rule, so a desynchronized node always recovers at the next
genuine frame boundary.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .bus import Bus, SLAVE
from .protocol import (
    BROADCAST_ADDRESS,
    COMMAND_FRAME_SIZE,
    RESERVED_ADDRESS,
    RESPONSE_FLAG,
    CommandCode,
    Frame,
    ProtocolError,
    ResponseFrame,
    decode_command,
    encode_response,
)

SENSOR_NOISE_TENTHS = 5  # uniform +/- jitter applied to every reading
TURNAROUND_BYTE_TIMES = 2  # quiet gap before a slave answers

TEMPERATURE_MAX = 0xFFFF
HUMIDITY_MAX = 1000

DISPLAY_BLANK = "   "


@dataclass(frozen=True)
class DisplayState:
    """What the 3-digit seven-segment display shows."""

    text: str
    decimal_point: bool


@dataclass
class NodeDiagnostics:
    """Counters surfaced to the master service for the operator UI."""

    frames_seen: int = 0
    frames_executed: int = 0
    malformed_count: int = 0

    def snapshot(self) -> dict[str, int]:
        return {
            "frames_seen": self.frames_seen,
            "frames_executed": self.frames_executed,
            "malformed_count": self.malformed_count,
        }


@dataclass
class NodeController:
    """One emulated node-controller wired to a bus slave port."""

    address: int = 0
    relay_on: bool = False
    temperature_baseline: int = 280  # tenths of a degree C
    humidity_baseline: int = 450  # tenths of %RH, <= 1000
    sensor_seed: int = 0
    dip_switches: list[bool] = field(init=False)
    diagnostics: NodeDiagnostics = field(default_factory=NodeDiagnostics)
    executed_frames: list[Frame] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0 <= self.address <= 255:
            raise ValueError(f"address {self.address} is not a byte")
        if not 0 <= self.humidity_baseline <= HUMIDITY_MAX:
            raise ValueError(
                f"humidity baseline {self.humidity_baseline} out of range"
            )
        if not 0 <= self.temperature_baseline <= TEMPERATURE_MAX:
            raise ValueError(
                f"temperature baseline {self.temperature_baseline} out of range"
            )
        self.dip_switches = [bool(self.address >> bit & 1) for bit in range(8)]
        self._rx_buffer = bytearray()
        self._sensor_rng = random.Random(self.sensor_seed)
        self._bus: Bus | None = None
        self._port_id: int | None = None

    # -- DIP switches -------------------------------------------------------

    def read_dip(self) -> int:
        """Current address from the switch bank, bit 0 least significant."""
        value = 0
        for bit, on in enumerate(self.dip_switches):
            if on:
                value |= 1 << bit
        return value

    def flip_switch(self, bit: int) -> int:
        """Toggle one switch; returns the new address."""
        self.dip_switches[bit] = not self.dip_switches[bit]
        return self.read_dip()

    def set_address(self, address: int) -> None:
        """Set all eight switches at once."""
        if not 0 <= address <= 255:
            raise ValueError(f"address {address} is not a byte")
        for bit in range(8):
            self.dip_switches[bit] = bool(address >> bit & 1)

    # -- display ----------------------------------------------------------------

    @property
    def display(self) -> DisplayState:
        """Address as zero-padded decimal; a parked node (255) goes blank.

        The leftmost decimal point mirrors the relay so an administrator
        can read power state at a glance.
        """
        address = self.read_dip()
        if address == RESERVED_ADDRESS:
            return DisplayState(DISPLAY_BLANK, self.relay_on)
        return DisplayState(f"{address:03d}", self.relay_on)

    # -- bus wiring ---------------------------------------------------------------

    @property
    def port_id(self) -> int | None:
        return self._port_id

    def attach_to(self, bus: Bus) -> int:
        """Join a bus; the returned port id is also kept on the node."""
        self._bus = bus
        self._port_id = bus.attach(SLAVE, on_byte=self.on_byte)
        return self._port_id

    def detach(self) -> None:
        if self._bus is not None and self._port_id is not None:
            if self._bus.is_attached(self._port_id):
                self._bus.detach(self._port_id)

    # -- receive path ----------------------------------------------------------------

    def on_byte(self, value: int) -> None:
        """Accumulate one bus byte; dispatch when a valid frame completes.

        The DIP bank is read here, at frame-completion time, so a switch
        flipped between two frames takes effect on the very next frame.
        """
        self._rx_buffer.append(value)
        if len(self._rx_buffer) < COMMAND_FRAME_SIZE:
            return
        try:
            frame = decode_command(bytes(self._rx_buffer))
        except ProtocolError:
            del self._rx_buffer[0]
            self.diagnostics.malformed_count += 1
            return
        self._rx_buffer.clear()
        self.diagnostics.frames_seen += 1
        own_address = self.read_dip()
        if own_address == RESERVED_ADDRESS:
            return  # parked: all-ones DIP never executes anything
        if frame.device_number == own_address:
            self._dispatch(frame, respond=True)
        elif frame.device_number == BROADCAST_ADDRESS:
            self._dispatch(frame, respond=False)

    def _dispatch(self, frame: Frame, respond: bool) -> None:
        self.diagnostics.frames_executed += 1
        self.executed_frames.append(frame)
        response = self.execute(frame.data_type)
        if respond and response is not None:
            self.respond_after(response)

    # -- command execution ---------------------------------------------------------

    def execute(self, command: CommandCode) -> ResponseFrame | None:
        """Act on a command already matched to this node.

        Power commands are set-to-value (idempotent) and acknowledge with
        an empty payload; queries answer with their reading. The caller
        decides whether the response is actually sent (broadcasts are
        executed silently).
        """
        if command == CommandCode.POWER_ON:
            self.relay_on = True
            payload = b""
        elif command == CommandCode.POWER_OFF:
            self.relay_on = False
            payload = b""
        elif command == CommandCode.STATUS_QUERY:
            payload = bytes([0x01 if self.relay_on else 0x00])
        elif command == CommandCode.READ_TEMPERATURE:
            payload = self._read_sensor(self.temperature_baseline, TEMPERATURE_MAX)
        elif command == CommandCode.READ_HUMIDITY:
            payload = self._read_sensor(self.humidity_baseline, HUMIDITY_MAX)
        else:
            return None
        return ResponseFrame(
            device_number=self.read_dip(),
            data_type_echo=int(command) | RESPONSE_FLAG,
            payload=payload,
        )

    def _read_sensor(self, baseline: int, maximum: int) -> bytes:
        noise = self._sensor_rng.randint(-SENSOR_NOISE_TENTHS, SENSOR_NOISE_TENTHS)
        reading = min(max(baseline + noise, 0), maximum)
        return reading.to_bytes(2, "big")

    # -- transmit path ---------------------------------------------------------------

    def respond_after(self, response: ResponseFrame) -> None:
        """Queue the response two byte times after the frame's final byte."""
        if self._bus is None or self._port_id is None:
            return
        if not self._bus.is_attached(self._port_id):
            return
        delay = TURNAROUND_BYTE_TIMES * self._bus.byte_time_us
        self._bus.transmit(
            self._port_id,
            encode_response(response),
            at_us=self._bus.now_us + delay,
        )
