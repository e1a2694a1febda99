"""Classic libpcap parsing and the canonical packet-record CSV format.

Only Ethernet-II / IPv4 / {TCP, UDP} frames become records; everything else
(VLAN, IPv6, non-first fragments, truncated frames) is skipped silently.
Packet size is the IPv4 total-length field, so link-layer padding does not
leak into features.
"""

import struct
from dataclasses import dataclass

CSV_HEADER = "timestamp_us,src_ip,src_port,dst_ip,dst_port,proto,size_bytes,ttl,tcp_flags"

# magic -> (endianness, ticks per second of the fractional field)
_MAGICS = {
    0xA1B2C3D4: ("<", 1_000_000),
    0xD4C3B2A1: (">", 1_000_000),
    0xA1B23C4D: ("<", 1_000_000_000),
    0x4D3CB2A1: (">", 1_000_000_000),
}

_ETHERTYPE_IPV4 = 0x0800
_PROTO_TCP = 6
_PROTO_UDP = 17


class PcapParseError(ValueError):
    """Malformed or truncated capture data."""


@dataclass(frozen=True)
class PacketRecord:
    """One parsed packet."""

    timestamp_us: int
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    proto: str  # "TCP" or "UDP"
    size_bytes: int  # IPv4 total length
    ttl: int
    tcp_flags: int  # 8-bit mask; 0 for UDP


def parse_pcap(data):
    """Parse a classic libpcap byte stream into packet records.

    Parameters
    ----------
    data : bytes
        Full capture file contents. Microsecond and nanosecond magics are
        accepted in either byte order; nanoseconds are truncated to
        microseconds.

    Returns
    -------
    list of PacketRecord, in file order.

    Raises
    ------
    PcapParseError
        On a malformed global header, or a record truncated mid-file (the
        error names the byte offset).
    """
    if len(data) < 24:
        raise PcapParseError(f"global header truncated: {len(data)} bytes < 24")
    magic = struct.unpack("<I", data[:4])[0]
    if magic not in _MAGICS:
        raise PcapParseError(f"bad magic 0x{magic:08x}")
    endian, tick = _MAGICS[magic]

    records = []
    offset = 24
    total = len(data)
    while offset < total:
        if offset + 16 > total:
            raise PcapParseError(f"record header truncated at byte offset {offset}")
        ts_sec, ts_frac, incl_len, _orig_len = struct.unpack(
            endian + "IIII", data[offset : offset + 16]
        )
        if offset + 16 + incl_len > total:
            raise PcapParseError(f"packet data truncated at byte offset {offset + 16}")
        frame = data[offset + 16 : offset + 16 + incl_len]
        offset += 16 + incl_len

        ts_us = ts_sec * 1_000_000 + (ts_frac if tick == 1_000_000 else ts_frac // 1000)
        record = _parse_frame(frame, ts_us)
        if record is not None:
            records.append(record)
    return records


def _parse_frame(frame, ts_us):
    """Decode one Ethernet-II frame; return None for anything unsupported."""
    if len(frame) < 14:
        return None
    ethertype = struct.unpack(">H", frame[12:14])[0]
    if ethertype != _ETHERTYPE_IPV4:
        return None
    ip = frame[14:]
    if len(ip) < 20:
        return None
    version_ihl = ip[0]
    if version_ihl >> 4 != 4:
        return None
    ihl = (version_ihl & 0x0F) * 4
    if ihl < 20 or len(ip) < ihl:
        return None
    total_length = struct.unpack(">H", ip[2:4])[0]
    if total_length < ihl:
        return None
    flags_frag = struct.unpack(">H", ip[6:8])[0]
    if flags_frag & 0x3FFF:  # MF set or nonzero fragment offset
        return None
    ttl = ip[8]
    proto = ip[9]
    if proto not in (_PROTO_TCP, _PROTO_UDP):
        return None
    transport = ip[ihl:]
    if len(transport) < 4:
        return None
    src_port, dst_port = struct.unpack(">HH", transport[:4])
    if proto == _PROTO_TCP:
        if len(transport) < 14:
            return None
        tcp_flags = transport[13]
        proto_name = "TCP"
    else:
        tcp_flags = 0
        proto_name = "UDP"
    return PacketRecord(
        timestamp_us=ts_us,
        src_ip=_ip_str(ip[12:16]),
        dst_ip=_ip_str(ip[16:20]),
        src_port=src_port,
        dst_port=dst_port,
        proto=proto_name,
        size_bytes=total_length,
        ttl=ttl,
        tcp_flags=tcp_flags,
    )


def _ip_str(raw):
    return ".".join(str(b) for b in raw)


def _parse_ip(text):
    parts = text.split(".")
    if len(parts) != 4:
        raise ValueError(f"bad IPv4 address {text!r}")
    octets = []
    for p in parts:
        v = int(p)
        if not 0 <= v <= 255:
            raise ValueError(f"bad IPv4 octet {p!r}")
        octets.append(v)
    return octets


def parse_packet_csv(text):
    """Parse the canonical packet CSV into records.

    The header line must match CSV_HEADER exactly; each data line maps
    field-for-field onto a PacketRecord. Errors name the (1-based) line.
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"line 1: expected header {CSV_HEADER!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 9:
            raise ValueError(f"line {lineno}: expected 9 fields, got {len(fields)}")
        try:
            ts = int(fields[0])
            _parse_ip(fields[1])
            src_port = int(fields[2])
            _parse_ip(fields[3])
            dst_port = int(fields[4])
            proto = fields[5]
            size_bytes = int(fields[6])
            ttl = int(fields[7])
            tcp_flags = int(fields[8])
            if proto not in ("TCP", "UDP"):
                raise ValueError(f"unknown proto {proto!r}")
            if ts < 0:
                raise ValueError("negative timestamp")
            if not 0 <= src_port <= 65535 or not 0 <= dst_port <= 65535:
                raise ValueError("port out of range")
            if size_bytes < 20:
                raise ValueError("size_bytes below IPv4 minimum")
            if not 0 <= ttl <= 255:
                raise ValueError("ttl out of range")
            if not 0 <= tcp_flags <= 255:
                raise ValueError("tcp_flags out of range")
            if proto == "UDP" and tcp_flags != 0:
                raise ValueError("nonzero tcp_flags on UDP packet")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        records.append(
            PacketRecord(ts, fields[1], fields[3], src_port, dst_port, proto,
                         size_bytes, ttl, tcp_flags)
        )
    return records


def write_packet_csv(records):
    """Serialize records to the canonical CSV; exact inverse of parse_packet_csv."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.timestamp_us},{r.src_ip},{r.src_port},{r.dst_ip},{r.dst_port},"
            f"{r.proto},{r.size_bytes},{r.ttl},{r.tcp_flags}"
        )
    return "\n".join(lines) + "\n"
