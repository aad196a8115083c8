"""Frame codec for the master/slave power-control bus.

Command frames are a fixed 4-byte format:

    [STX] [device number] [command code] [ETX]

Device number 0 addresses every slave at once (broadcast, never answered),
1-254 address a single slave, and 255 is reserved so an all-ones DIP bank
stays a safe parked address. Command frames carry no checksum.

Response frames travel slave -> master and do carry integrity fields:

    [STX] [device number] [code | 0x80] [payload len] [payload...] [checksum] [ETX]

The checksum is the XOR fold of every byte from the device number through
the last payload byte. The high bit on the echoed command code keeps
responses distinguishable from commands on the shared wire.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

# -- Byte constants -----------------------------------------------------------

STX = 0x02
ETX = 0x03

BROADCAST_ADDRESS = 0x00
RESERVED_ADDRESS = 0xFF

COMMAND_FRAME_SIZE = 4
RESPONSE_OVERHEAD = 6  # STX + device + echo + length + checksum + ETX
MAX_PAYLOAD = 16

RESPONSE_FLAG = 0x80


class CommandCode(enum.IntEnum):
    """Command codes carried in the third byte of a command frame.

    Values avoid 0x02/0x03 so no well-formed command frame ever carries a
    frame marker in its interior.
    """

    POWER_ON = 0x01
    POWER_OFF = 0x02
    STATUS_QUERY = 0x10
    READ_TEMPERATURE = 0x20
    READ_HUMIDITY = 0x21


COMMAND_CODES = frozenset(int(c) for c in CommandCode)

# -- Errors -------------------------------------------------------------------


class ProtocolError(ValueError):
    """Base class for every codec rejection."""


class FramingError(ProtocolError):
    """Missing or misplaced STX/ETX, truncated stream, or bad field domain."""


class InvalidAddressError(ProtocolError):
    """Device number outside the usable range (255 is reserved)."""


class UnknownCommandError(ProtocolError):
    """Command code not in the defined set."""


class PayloadTooLongError(ProtocolError):
    """Response payload exceeds MAX_PAYLOAD bytes."""


class LengthMismatchError(ProtocolError):
    """Response length field disagrees with the actual byte count."""


class ChecksumMismatchError(ProtocolError):
    """Response checksum recomputation failed."""


# -- Frame types --------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    """One decoded 4-byte command frame."""

    device_number: int
    data_type: CommandCode

    @property
    def is_broadcast(self) -> bool:
        return self.device_number == BROADCAST_ADDRESS


@dataclass(frozen=True)
class ResponseFrame:
    """One decoded slave response.

    ``data_type_echo`` is the original command code with the high bit set;
    ``command`` strips the flag back off.
    """

    device_number: int
    data_type_echo: int
    payload: bytes = field(default=b"")

    @property
    def command(self) -> CommandCode:
        return CommandCode(self.data_type_echo & 0x7F)


# -- Helpers ------------------------------------------------------------------


def xor_checksum(data: bytes) -> int:
    """XOR fold over *data*, the response integrity field."""
    acc = 0
    for b in data:
        acc ^= b
    return acc


def _check_address(device_number: int, allow_broadcast: bool = True) -> None:
    if not 0 <= device_number <= 255:
        raise InvalidAddressError(f"device number {device_number} is not a byte")
    if device_number == RESERVED_ADDRESS:
        raise InvalidAddressError("device number 255 is reserved")
    if not allow_broadcast and device_number == BROADCAST_ADDRESS:
        raise InvalidAddressError("device number 0 (broadcast) not allowed here")


# -- Command frames -----------------------------------------------------------


def encode_command(frame: Frame) -> bytes:
    """Encode a command frame into its 4-byte wire form.

    Raises:
        InvalidAddressError: device number 255 or not a byte.
        UnknownCommandError: data_type outside the command-code set.
    """
    _check_address(frame.device_number)
    if int(frame.data_type) not in COMMAND_CODES:
        raise UnknownCommandError(f"unknown command code {frame.data_type!r}")
    return bytes([STX, frame.device_number, int(frame.data_type), ETX])


def decode_command(data: bytes) -> Frame:
    """Decode exactly 4 bytes into a command frame.

    Raises:
        FramingError: wrong length, or STX/ETX markers missing.
        InvalidAddressError: device number 255.
        UnknownCommandError: command code not defined.
    """
    if len(data) != COMMAND_FRAME_SIZE:
        raise FramingError(f"command frames are 4 bytes, got {len(data)}")
    if data[0] != STX:
        raise FramingError(f"expected STX 0x{STX:02X}, got 0x{data[0]:02X}")
    if data[3] != ETX:
        raise FramingError(f"expected ETX 0x{ETX:02X}, got 0x{data[3]:02X}")
    _check_address(data[1])
    if data[2] not in COMMAND_CODES:
        raise UnknownCommandError(f"unknown command code 0x{data[2]:02X}")
    return Frame(device_number=data[1], data_type=CommandCode(data[2]))


# -- Response frames ----------------------------------------------------------


def encode_response(resp: ResponseFrame) -> bytes:
    """Encode a response frame, computing the checksum field.

    Raises:
        PayloadTooLongError: payload longer than MAX_PAYLOAD.
        InvalidAddressError: device number not in 1-254.
        UnknownCommandError: echoed code is not flag + defined command.
    """
    if len(resp.payload) > MAX_PAYLOAD:
        raise PayloadTooLongError(
            f"payload is {len(resp.payload)} bytes, limit is {MAX_PAYLOAD}"
        )
    _check_address(resp.device_number, allow_broadcast=False)
    if not resp.data_type_echo & RESPONSE_FLAG:
        raise UnknownCommandError("response echo must have the high bit set")
    if (resp.data_type_echo & 0x7F) not in COMMAND_CODES:
        raise UnknownCommandError(
            f"echo 0x{resp.data_type_echo:02X} does not wrap a known command"
        )
    body = bytes([resp.device_number, resp.data_type_echo, len(resp.payload)])
    body += bytes(resp.payload)
    return bytes([STX]) + body + bytes([xor_checksum(body), ETX])


def decode_response(data: bytes) -> ResponseFrame:
    """Decode a response frame, validating framing, length, and checksum.

    The three failure classes raise distinct exceptions so fault statistics
    can tell them apart.

    Raises:
        FramingError: too short, bad markers, or bad field domains.
        LengthMismatchError: length field disagrees with the byte count.
        ChecksumMismatchError: XOR fold does not match the checksum field.
    """
    if len(data) < RESPONSE_OVERHEAD:
        raise FramingError(
            f"response frames are at least {RESPONSE_OVERHEAD} bytes, got {len(data)}"
        )
    if data[0] != STX:
        raise FramingError(f"expected STX 0x{STX:02X}, got 0x{data[0]:02X}")
    if data[-1] != ETX:
        raise FramingError(f"expected ETX 0x{ETX:02X}, got 0x{data[-1]:02X}")
    payload_length = data[3]
    if payload_length > MAX_PAYLOAD:
        raise LengthMismatchError(
            f"length field {payload_length} exceeds limit {MAX_PAYLOAD}"
        )
    if len(data) != RESPONSE_OVERHEAD + payload_length:
        raise LengthMismatchError(
            f"length field says {RESPONSE_OVERHEAD + payload_length} bytes, "
            f"stream has {len(data)}"
        )
    body = data[1:-2]
    received = data[-2]
    computed = xor_checksum(body)
    if received != computed:
        raise ChecksumMismatchError(
            f"checksum 0x{received:02X} received, 0x{computed:02X} computed"
        )
    device_number = data[1]
    echo = data[2]
    if device_number in (BROADCAST_ADDRESS, RESERVED_ADDRESS):
        raise FramingError(f"response device number {device_number} out of range")
    if not echo & RESPONSE_FLAG or (echo & 0x7F) not in COMMAND_CODES:
        raise FramingError(f"echo 0x{echo:02X} does not wrap a known command")
    return ResponseFrame(
        device_number=device_number,
        data_type_echo=echo,
        payload=bytes(data[4:-2]),
    )


# -- Stream recovery ----------------------------------------------------------


def is_command_frame(data: bytes) -> bool:
    """True iff *data* is exactly one valid 4-byte command frame."""
    try:
        decode_command(data)
    except ProtocolError:
        return False
    return True


def resync_scan(stream: bytes) -> list[tuple[int, Frame]]:
    """Recover command frames from an arbitrary byte stream.

    Greedy left-to-right scan: wherever a valid 4-byte command frame starts,
    emit (offset, frame) and jump past it, otherwise slide one byte. Skipped
    bytes are simply not emitted; the skip tally is
    ``len(stream) - 4 * len(result)``.
    """
    found: list[tuple[int, Frame]] = []
    pos = 0
    end = len(stream)
    while pos + COMMAND_FRAME_SIZE <= end:
        try:
            frame = decode_command(stream[pos : pos + COMMAND_FRAME_SIZE])
        except ProtocolError:
            pos += 1
            continue
        found.append((pos, frame))
        pos += COMMAND_FRAME_SIZE
    return found
