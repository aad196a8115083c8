#!/usr/bin/env python3
"""Walk through the wire format: command frames, responses, resynchronization.

Run: python3 demos/01_frame_codec.py
"""

from clusterbus import CommandCode, Frame, ResponseFrame
from clusterbus.protocol import (
    decode_command,
    decode_response,
    encode_command,
    encode_response,
    resync_scan,
)


def show(label, data):
    print(f"{label:34s} {' '.join(f'{b:02X}' for b in data)}")


# A command frame is four bytes: STX, device number, command code, ETX.
print("== command frames ==")
for frame in (
    Frame(device_number=5, data_type=CommandCode.POWER_ON),
    Frame(device_number=0, data_type=CommandCode.POWER_OFF),  # broadcast
    Frame(device_number=42, data_type=CommandCode.READ_TEMPERATURE),
):
    wire = encode_command(frame)
    show(f"addr={frame.device_number:<3} {frame.data_type.name}", wire)
    assert decode_command(wire) == frame

# Responses carry a payload, a length field, and an XOR checksum; the echoed
# command code has its high bit set so the two frame kinds never look alike.
print("\n== response frames ==")
ack = ResponseFrame(device_number=5, data_type_echo=0x81)
show("power-on ack from node 5", encode_response(ack))

reading = ResponseFrame(
    device_number=9,
    data_type_echo=int(CommandCode.READ_TEMPERATURE) | 0x80,
    payload=(281).to_bytes(2, "big"),  # 28.1 degrees, in tenths
)
wire = encode_response(reading)
show("temperature reading from node 9", wire)
decoded = decode_response(wire)
print(f"decoded back: {int.from_bytes(decoded.payload, 'big') / 10:.1f} C")

# A reader that joins mid-stream (or survives a burst of line noise) slides
# byte by byte until a real frame boundary lines up again.
print("\n== resynchronization ==")
dirty = (
    bytes([0x5A, 0x02])  # junk, including a fake STX
    + encode_command(Frame(7, CommandCode.POWER_ON))
    + bytes([0xFF, 0xFF])
    + encode_command(Frame(12, CommandCode.STATUS_QUERY))
)
show("captured stream", dirty)
for offset, frame in resync_scan(dirty):
    print(f"  frame at offset {offset}: addr={frame.device_number} {frame.data_type.name}")
skipped = len(dirty) - 4 * len(resync_scan(dirty))
print(f"  bytes skipped as noise: {skipped}")
