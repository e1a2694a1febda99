"""From raw packets to feature matrices: the network ingestion path.

Builds a tiny capture in memory (classic libpcap bytes), parses it, groups
packets into bidirectional flows, truncates long flows, and extracts the
three feature families.

Run: python3 demos/05_pcap_pipeline.py
"""

import struct

import numpy as np

from ocsketch.flows import (
    assemble_flows,
    iat_size_features,
    samp_size_features,
    stats_header_features,
    truncate_flows,
)
from ocsketch.pcap import parse_packet_csv, parse_pcap, write_packet_csv


def udp_frame(src, dst, sport, dport, size):
    eth = b"\x02" * 6 + b"\x04" * 6 + struct.pack(">H", 0x0800)
    ip = struct.pack(">BBHHHBBH4s4s", 0x45, 0, size, 1, 0, 64, 17, 0,
                     bytes(int(p) for p in src.split(".")),
                     bytes(int(p) for p in dst.split(".")))
    udp = struct.pack(">HHHH", sport, dport, size - 20, 0)
    return eth + ip + udp + b"\x00" * (size - 28)


# a capture with two conversations: a chatty DNS-ish exchange and a
# one-packet probe
rng = np.random.default_rng(0)
frames = []
t = 0
for i in range(6):
    t += int(rng.integers(500, 50_000))
    a_to_b = i % 2 == 0
    frames.append((t, udp_frame("10.0.0.1" if a_to_b else "10.0.0.9",
                                "10.0.0.9" if a_to_b else "10.0.0.1",
                                5353 if a_to_b else 53,
                                53 if a_to_b else 5353,
                                int(rng.integers(60, 400)))))
frames.append((t + 10_000, udp_frame("10.0.0.7", "10.0.0.9", 4000, 53, 80)))

capture = struct.pack("<IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, 1)
for ts, frame in frames:
    capture += struct.pack("<IIII", ts // 10**6, ts % 10**6, len(frame), len(frame))
    capture += frame

records = parse_pcap(capture)
print(f"parsed {len(records)} packets from a {len(capture)}-byte capture")
print("first record:", records[0])

# records round-trip through the canonical CSV format
csv_text = write_packet_csv(records)
assert parse_packet_csv(csv_text) == records
print(f"\npacket CSV round-trips bit-exactly ({len(csv_text)} chars):")
print("\n".join(csv_text.splitlines()[:3]) + "\n...")

# bidirectional flows under the canonical 5-tuple, then duration truncation
flows = truncate_flows(assemble_flows(records), q=0.9)
print(f"\n{len(flows)} flows:")
for f in flows:
    print(f"  {f.flow_id()}: {len(f.packets)} packets, {f.duration_us} us")

# the three feature families
for fn, extra in [(iat_size_features, {}), (stats_header_features, {}),
                  (samp_size_features, {"q": 0.9})]:
    fm = fn(flows, **extra)
    print(f"\n{fm.feature_kind}: {fm.rows} x {fm.dim}")
    print(np.round(fm.values, 1))
