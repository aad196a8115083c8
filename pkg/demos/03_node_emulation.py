#!/usr/bin/env python3
"""One emulated node-controller up close: DIP switches, relay, display, sensors.

Run: python3 demos/03_node_emulation.py
"""

from clusterbus import CommandCode, Frame, NodeController
from clusterbus.protocol import encode_command


def show(node):
    d = node.display
    dot = "." if d.decimal_point else " "
    print(f"  display [{d.text[0]}{dot}{d.text[1:]}]  relay={'ON' if node.relay_on else 'off'}  "
          f"dip={''.join('1' if s else '0' for s in reversed(node.dip_switches))}")


node = NodeController(address=5, temperature_baseline=283, humidity_baseline=470)
print("fresh node at address 5 (DIP 00000101):")
show(node)

print("\nfeed it a POWER_ON addressed to 5 -> relay closes, decimal point lights:")
for b in encode_command(Frame(5, CommandCode.POWER_ON)):
    node.on_byte(b)
show(node)

print("\na frame for address 6 is heard but not executed:")
for b in encode_command(Frame(6, CommandCode.POWER_OFF)):
    node.on_byte(b)
show(node)

print("\nflip switch 4: the address becomes 21 on the spot, display follows,")
print("and the very next frame is matched against the new address:")
node.flip_switch(4)
show(node)
for b in encode_command(Frame(21, CommandCode.POWER_OFF)):
    node.on_byte(b)
show(node)

print("\nsensor reads jitter around their baselines (tenths, big-endian):")
for _ in range(5):
    t = int.from_bytes(node.execute(CommandCode.READ_TEMPERATURE).payload, "big")
    h = int.from_bytes(node.execute(CommandCode.READ_HUMIDITY).payload, "big")
    print(f"  {t / 10:.1f} C   {h / 10:.1f} %RH")

print("\nline noise never moves the relay; the 4-byte window just slides:")
node.on_byte(0x99)
for b in bytes([0x02, 0x33, 0x44]):  # fake STX and garbage
    node.on_byte(b)
show(node)
print(f"  diagnostics: {node.diagnostics.snapshot()}")
