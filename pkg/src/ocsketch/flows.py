"""Bidirectional flow assembly, duration truncation, and flow featurization.

Three feature families are produced from truncated flows:

* IAT_SIZE     -- inter-arrival times (us) and packet sizes, zero-padded to a
                  dataset-wide packet budget L; D = 2L - 1.
* STATS_HEADER -- 19 summary statistics: duration, rates, size statistics,
                  mean TTL, and the eight TCP flag counts.
* SAMP_SIZE    -- byte counts over L equal time bins whose width comes from a
                  duration quantile; D = L.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .pcap import PacketRecord

IAT_SIZE = "iat_size"
STATS_HEADER = "stats_header"
SAMP_SIZE = "samp_size"

# bit masks in appearance order of the STATS_HEADER flag-count block
TCP_FLAG_BITS = (
    ("FIN", 0x01), ("SYN", 0x02), ("RST", 0x04), ("PSH", 0x08),
    ("ACK", 0x10), ("URG", 0x20), ("ECE", 0x40), ("CWR", 0x80),
)

STATS_HEADER_DIM = 19


def percentile(values, q):
    """Nearest-rank percentile: the value at 1-based index ceil(q*M).

    Parameters
    ----------
    values : nonempty iterable of reals
    q : float in (0, 1]
    """
    vals = sorted(values)
    if not vals:
        raise ValueError("percentile of empty input")
    if not 0 < q <= 1:
        raise ValueError(f"quantile must be in (0, 1], got {q}")
    # guard against float products landing epsilon above an exact integer
    rank = max(1, math.ceil(q * len(vals) - 1e-9))
    return vals[rank - 1]


@dataclass
class Flow:
    """Time-ordered packets under one canonical bidirectional 5-tuple key."""

    key: tuple  # (ip_lo, port_lo, ip_hi, port_hi, proto)
    packets: list = field(default_factory=list)

    @property
    def duration_us(self):
        return self.packets[-1].timestamp_us - self.packets[0].timestamp_us

    def flow_id(self):
        ip_lo, port_lo, ip_hi, port_hi, proto = self.key
        return f"{ip_lo}:{port_lo}-{ip_hi}:{port_hi}-{proto}"


@dataclass
class FeatureMatrix:
    """n x D real feature matrix with aligned flow ids."""

    values: np.ndarray
    feature_kind: str
    flow_ids: list

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]


def _ip_key(ip):
    return tuple(int(p) for p in ip.split("."))


def canonical_key(record: PacketRecord):
    """Direction-independent 5-tuple: endpoints ordered lexicographically."""
    a = (_ip_key(record.src_ip), record.src_port, record.src_ip)
    b = (_ip_key(record.dst_ip), record.dst_port, record.dst_ip)
    if a[:2] <= b[:2]:
        lo, hi = a, b
    else:
        lo, hi = b, a
    return (lo[2], lo[1], hi[2], hi[1], record.proto)


def assemble_flows(records):
    """Partition records into bidirectional flows.

    Flows are emitted in order of their first packet; within a flow the
    original order is kept on timestamp ties (stable sort).
    """
    flows = {}
    order = []
    for rec in records:
        key = canonical_key(rec)
        if key not in flows:
            flows[key] = Flow(key)
            order.append(key)
        flows[key].packets.append(rec)
    for key in order:
        flows[key].packets.sort(key=lambda r: r.timestamp_us)
    return [flows[key] for key in order]


def truncate_flows(flows, q=0.9):
    """Cut each flow at the q-percentile of flow durations.

    Every flow keeps at least its first packet, so no flow is emptied.
    """
    if not flows:
        raise ValueError("truncate_flows needs at least one flow")
    cutoff = percentile([f.duration_us for f in flows], q)
    out = []
    for f in flows:
        start = f.packets[0].timestamp_us
        kept = [p for p in f.packets if p.timestamp_us <= start + cutoff]
        out.append(Flow(f.key, kept))
    return out


def _packet_budget(flows):
    """Dataset-wide packet count budget L: the 0.9 percentile of flow lengths."""
    return percentile([len(f.packets) for f in flows], 0.9)


def iat_size_features(flows):
    """IAT+SIZE features: D = 2L - 1 per flow.

    The first L-1 columns hold inter-arrival times in microseconds and the
    last L columns hold packet sizes in bytes, each block zero-padded; flows
    longer than L packets use their first L.
    """
    if not flows:
        raise ValueError("no flows to featurize")
    L = _packet_budget(flows)
    D = 2 * L - 1
    X = np.zeros((len(flows), D))
    for i, f in enumerate(flows):
        pkts = f.packets[:L]
        times = [p.timestamp_us for p in pkts]
        for j in range(len(pkts) - 1):
            X[i, j] = times[j + 1] - times[j]
        for j, p in enumerate(pkts):
            X[i, L - 1 + j] = p.size_bytes
    return FeatureMatrix(X, IAT_SIZE, [f.flow_id() for f in flows])


def stats_header_features(flows):
    """STATS+HEADER features: 19 columns per flow.

    [duration_s, pkts/s, bytes/s, mean/std/q1/q2/q3/min/max of sizes,
    mean TTL, count(FIN..CWR)]. Rates floor the duration at 1 us so
    single-packet flows stay finite; std is the population std.
    """
    if not flows:
        raise ValueError("no flows to featurize")
    X = np.zeros((len(flows), STATS_HEADER_DIM))
    for i, f in enumerate(flows):
        sizes = np.array([p.size_bytes for p in f.packets], dtype=float)
        duration_s = f.duration_us / 1e6
        rate_denom = max(f.duration_us, 1) / 1e6
        X[i, 0] = duration_s
        X[i, 1] = len(f.packets) / rate_denom
        X[i, 2] = sizes.sum() / rate_denom
        X[i, 3] = sizes.mean()
        X[i, 4] = sizes.std()
        X[i, 5] = percentile(sizes, 0.25)
        X[i, 6] = percentile(sizes, 0.5)
        X[i, 7] = percentile(sizes, 0.75)
        X[i, 8] = sizes.min()
        X[i, 9] = sizes.max()
        X[i, 10] = np.mean([p.ttl for p in f.packets])
        for j, (_name, bit) in enumerate(TCP_FLAG_BITS):
            X[i, 11 + j] = sum(1 for p in f.packets if p.tcp_flags & bit)
    return FeatureMatrix(X, STATS_HEADER, [f.flow_id() for f in flows])


def samp_size_features(flows, q=0.9):
    """SAMP-SIZE features: byte counts over L equal time bins; D = L.

    The bin width is the q-percentile of flow durations divided by L
    (floored at 1 us); flows spanning more than L bins are truncated and
    shorter flows are zero-padded.
    """
    if not flows:
        raise ValueError("no flows to featurize")
    L = _packet_budget(flows)
    delta = max(percentile([f.duration_us for f in flows], q) / L, 1.0)
    X = np.zeros((len(flows), L))
    for i, f in enumerate(flows):
        start = f.packets[0].timestamp_us
        for p in f.packets:
            b = int((p.timestamp_us - start) / delta)
            if b < L:
                X[i, b] += p.size_bytes
    return FeatureMatrix(X, SAMP_SIZE, [f.flow_id() for f in flows])
