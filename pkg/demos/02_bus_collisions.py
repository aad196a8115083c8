#!/usr/bin/env python3
"""Watch the shared wire: clean broadcast, then two talkers colliding.

Run: python3 demos/02_bus_collisions.py
"""

from clusterbus.bus import MASTER, SLAVE, Bus, BusConfig

# A 9600 baud wire: one byte occupies round(10e6 / 9600) = 1042 simulated us.
bus = Bus(BusConfig(baud=9600))
print(f"byte time at 9600 baud: {bus.byte_time_us} us")

master = bus.attach(MASTER)
listeners = [bus.attach(SLAVE) for _ in range(3)]

print("\n== one transmitter: every other port hears every byte ==")
bus.transmit(master, bytes([0x02, 0x05, 0x01, 0x03]))
for event in bus.drain():
    print(f"  t={event.timestamp_us:>6} {event.kind:<15} port={event.port_id} "
          f"value={event.value if event.value is not None else '-'}")

print("\n== two transmitters: the overlap window turns to 0xFF garbage ==")
talker_a = listeners[0]
talker_b = listeners[1]
bus.transmit(talker_a, bytes([0xAA, 0xAA, 0xAA]))
# B starts one and a half byte times into A's transmission.
bus.transmit(talker_b, bytes([0xBB, 0xBB]), at_us=bus.now_us + bus.byte_time_us * 3 // 2)
collisions = 0
for event in bus.drain():
    marker = "  <-- collision" if event.kind == "collision" else ""
    if event.kind in ("collision", "byte_delivered") and event.port_id in (
        master,
        listeners[2],
        talker_a,
        talker_b,
    ):
        print(f"  t={event.timestamp_us:>6} {event.kind:<15} port={event.port_id} "
              f"value={event.value}{marker}")
    collisions += event.kind == "collision"
print(f"collision events: {collisions}")
print("\nThis is exactly why the master never lets two transactions overlap:")
print("request/response turn-taking is the whole collision-avoidance scheme.")
