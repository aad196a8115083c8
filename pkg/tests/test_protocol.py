"""Codec tests: frozen wire examples, exhaustive round-trips, resync recovery."""

from __future__ import annotations

import functools
import operator
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterbus.protocol import (
    BROADCAST_ADDRESS,
    COMMAND_CODES,
    ETX,
    MAX_PAYLOAD,
    RESPONSE_FLAG,
    STX,
    ChecksumMismatchError,
    CommandCode,
    Frame,
    FramingError,
    InvalidAddressError,
    LengthMismatchError,
    PayloadTooLongError,
    ProtocolError,
    ResponseFrame,
    UnknownCommandError,
    decode_command,
    decode_response,
    encode_command,
    encode_response,
    resync_scan,
)

# -- Independent oracles -------------------------------------------------------


def oracle_xor_fold(data: bytes) -> int:
    """Reference checksum: reduce with operator.xor, no shared code path."""
    return functools.reduce(operator.xor, data, 0)


def oracle_is_valid_command(window: bytes) -> bool:
    """Validity test written out field by field, independent of the codec."""
    return (
        len(window) == 4
        and window[0] == 0x02
        and window[3] == 0x03
        and window[1] != 0xFF
        and window[2] in (0x01, 0x02, 0x10, 0x20, 0x21)
    )


def oracle_resync(stream: bytes) -> list[int]:
    """Greedy one-byte-slide scan returning frame offsets."""
    offsets = []
    pos = 0
    while pos + 4 <= len(stream):
        if oracle_is_valid_command(stream[pos : pos + 4]):
            offsets.append(pos)
            pos += 4
        else:
            pos += 1
    return offsets


def random_response(rng: random.Random) -> ResponseFrame:
    code = rng.choice(list(CommandCode))
    return ResponseFrame(
        device_number=rng.randint(1, 254),
        data_type_echo=int(code) | RESPONSE_FLAG,
        payload=bytes(rng.randint(0, 255) for _ in range(rng.randint(0, MAX_PAYLOAD))),
    )


# -- Command frame examples ----------------------------------------------------


def test_encode_power_on_unicast():
    frame = Frame(device_number=5, data_type=CommandCode.POWER_ON)
    assert encode_command(frame) == bytes([0x02, 0x05, 0x01, 0x03])


def test_encode_broadcast_power_off():
    frame = Frame(device_number=0, data_type=CommandCode.POWER_OFF)
    assert encode_command(frame) == bytes([0x02, 0x00, 0x02, 0x03])


def test_encode_reserved_address_rejected():
    frame = Frame(device_number=255, data_type=CommandCode.POWER_ON)
    with pytest.raises(InvalidAddressError):
        encode_command(frame)


def test_encode_unknown_command_rejected():
    with pytest.raises(UnknownCommandError):
        encode_command(Frame(device_number=5, data_type=0x42))  # type: ignore[arg-type]


def test_decode_power_off():
    frame = decode_command(bytes([0x02, 0x07, 0x02, 0x03]))
    assert frame == Frame(device_number=7, data_type=CommandCode.POWER_OFF)


def test_decode_bad_stx():
    with pytest.raises(FramingError):
        decode_command(bytes([0xFF, 0x07, 0x02, 0x03]))


def test_decode_bad_etx():
    with pytest.raises(FramingError):
        decode_command(bytes([0x02, 0x07, 0x02, 0x04]))


def test_decode_wrong_length():
    with pytest.raises(FramingError):
        decode_command(bytes([0x02, 0x07, 0x02]))


def test_decode_reserved_address():
    with pytest.raises(InvalidAddressError):
        decode_command(bytes([0x02, 0xFF, 0x01, 0x03]))


def test_decode_unknown_command():
    with pytest.raises(UnknownCommandError):
        decode_command(bytes([0x02, 0x07, 0x55, 0x03]))


def test_roundtrip_exhaustive():
    # Full valid domain: 255 addresses (0 plus 1-254) x 5 command codes.
    checked = 0
    for device_number in range(0, 255):
        for code in CommandCode:
            frame = Frame(device_number=device_number, data_type=code)
            wire = encode_command(frame)
            assert decode_command(wire) == frame
            checked += 1
    assert checked == 255 * 5


def test_rejection_soundness_random_windows():
    # No 4-byte window with a bad marker or out-of-domain interior decodes.
    rng = random.Random(0xC0DEC)
    for _ in range(20_000):
        window = bytes(rng.randint(0, 255) for _ in range(4))
        valid = oracle_is_valid_command(window)
        try:
            decode_command(window)
            decoded = True
        except ProtocolError:
            decoded = False
        assert decoded == valid, window.hex()


# -- Response frame examples ----------------------------------------------------


def test_encode_response_empty_payload():
    resp = ResponseFrame(device_number=5, data_type_echo=0x81)
    wire = encode_response(resp)
    # Frozen: XOR fold of 05 81 00 is 0x84 (verified by oracle_xor_fold).
    assert oracle_xor_fold(bytes([0x05, 0x81, 0x00])) == 0x84
    assert wire == bytes([0x02, 0x05, 0x81, 0x00, 0x84, 0x03])


def test_encode_response_sensor_payload():
    resp = ResponseFrame(
        device_number=9,
        data_type_echo=int(CommandCode.READ_TEMPERATURE) | RESPONSE_FLAG,
        payload=bytes([0x01, 0x18]),
    )
    wire = encode_response(resp)
    assert wire == bytes([0x02, 0x09, 0xA0, 0x02, 0x01, 0x18, 0xB2, 0x03])
    assert wire[-2] == oracle_xor_fold(wire[1:-2])


def test_encode_response_payload_too_long():
    resp = ResponseFrame(device_number=5, data_type_echo=0x81, payload=bytes(17))
    with pytest.raises(PayloadTooLongError):
        encode_response(resp)


def test_encode_response_bad_echo():
    with pytest.raises(UnknownCommandError):
        encode_response(ResponseFrame(device_number=5, data_type_echo=0x01))
    with pytest.raises(UnknownCommandError):
        encode_response(ResponseFrame(device_number=5, data_type_echo=0xFF))


def test_encode_response_broadcast_address_rejected():
    with pytest.raises(InvalidAddressError):
        encode_response(ResponseFrame(device_number=0, data_type_echo=0x81))


def test_response_roundtrip_randomized():
    rng = random.Random(0x5EED)
    for _ in range(10_000):
        resp = random_response(rng)
        assert decode_response(encode_response(resp)) == resp


def test_response_single_byte_flip_detected():
    # Every single-byte flip must be rejected; a one-byte change can never
    # preserve the XOR fold, so interior flips all land in checksum or
    # length errors and marker flips land in framing errors.
    rng = random.Random(0xF11B)
    for _ in range(2_000):
        resp = random_response(rng)
        wire = bytearray(encode_response(resp))
        pos = rng.randrange(len(wire))
        flip = rng.randint(1, 255)
        wire[pos] ^= flip
        with pytest.raises(ProtocolError):
            decode_response(bytes(wire))


def test_decode_response_empty_input():
    with pytest.raises(FramingError):
        decode_response(b"")


def test_decode_response_length_field_mismatch():
    wire = bytearray(encode_response(ResponseFrame(5, 0x81, b"\x01\x02")))
    wire[3] = 5
    with pytest.raises(LengthMismatchError):
        decode_response(bytes(wire))


def test_decode_response_length_field_over_limit():
    wire = bytearray(encode_response(ResponseFrame(5, 0x81)))
    wire[3] = MAX_PAYLOAD + 1
    with pytest.raises(LengthMismatchError):
        decode_response(bytes(wire))


def test_decode_response_checksum_mismatch_distinct():
    wire = bytearray(encode_response(ResponseFrame(5, 0x81, b"\x07")))
    wire[4] ^= 0x10  # payload byte
    with pytest.raises(ChecksumMismatchError):
        decode_response(bytes(wire))


# -- Resync scan -----------------------------------------------------------------


def frame_bytes(device_number: int, code: CommandCode) -> bytes:
    return encode_command(Frame(device_number, code))


def test_resync_junk_then_frame():
    stream = bytes([0x99]) + frame_bytes(5, CommandCode.POWER_ON)
    assert resync_scan(stream) == [(1, Frame(5, CommandCode.POWER_ON))]


def test_resync_back_to_back():
    f1 = Frame(5, CommandCode.POWER_ON)
    f2 = Frame(9, CommandCode.STATUS_QUERY)
    stream = encode_command(f1) + encode_command(f2)
    assert resync_scan(stream) == [(0, f1), (4, f2)]


def test_resync_empty_and_short():
    assert resync_scan(b"") == []
    assert resync_scan(bytes([STX, 0x05, 0x01])) == []


def test_resync_randomized_vs_oracle():
    rng = random.Random(0x2E57)
    codes = list(CommandCode)
    for _ in range(500):
        chunks = []
        for _ in range(rng.randint(0, 12)):
            if rng.random() < 0.5:
                chunks.append(frame_bytes(rng.randint(0, 254), rng.choice(codes)))
            else:
                chunks.append(bytes(rng.randint(0, 255) for _ in range(rng.randint(1, 6))))
        stream = b"".join(chunks)
        offsets = [off for off, _ in resync_scan(stream)]
        assert offsets == oracle_resync(stream), stream.hex()


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=64))
def test_resync_soundness_property(stream: bytes):
    # Emitted frames always decode; emitted offsets match the greedy oracle
    # exactly, so no valid frame start inside an emitted region is skipped.
    result = resync_scan(stream)
    for offset, frame in result:
        assert decode_command(stream[offset : offset + 4]) == frame
    assert [off for off, _ in result] == oracle_resync(stream)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(min_value=0, max_value=254),
    st.sampled_from(list(CommandCode)),
)
def test_roundtrip_property(device_number: int, code: CommandCode):
    frame = Frame(device_number, code)
    assert decode_command(encode_command(frame)) == frame
