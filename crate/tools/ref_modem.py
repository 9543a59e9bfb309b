#!/usr/bin/env python3
"""Standalone reference transmitter used to build the golden IQ corpus.

Shares nothing with the Rust code except the chip tables and tap files under
crates/core/data. Writes HYBRIDIQ files plus manifest.json into
crates/core/testdata/golden. Run once from the repository root; the output
is committed and never regenerated by the build.
"""
import hashlib
import json
import math
import pathlib
import struct

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA = ROOT / "crates" / "core" / "data"
OUT = ROOT / "crates" / "core" / "testdata" / "golden"


def load_chips(name):
    rows = []
    for line in (DATA / "chips" / f"{name}.txt").read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            rows.append([int(c) for c in line])
    return rows


def load_taps(name):
    vals = []
    for line in (DATA / "taps" / f"{name}.txt").read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            vals.append(float(line))
    assert len(vals) == 41
    return vals


def bits_lsb_first(data):
    return [(b >> i) & 1 for b in data for i in range(8)]


def nibbles_low_first(data):
    out = []
    for b in data:
        out += [b & 0xF, b >> 4]
    return out


def whiten(bits, seed=0x1FF):
    # Sequence from s[n+9] = s[n] xor s[n+5], s[0..9] = seed bits LSB first.
    s = [(seed >> i) & 1 for i in range(9)]
    while len(s) < len(bits):
        s.append(s[-9] ^ s[-4])
    return [b ^ w for b, w in zip(bits, s)]


def quadrant_walk(bits, start=0):
    pos, out = start, []
    for b in bits:
        pos = (pos + (1 if b else -1)) % 4
        out.append(pos)
    return out


def diff_encode(bits):
    prev, out = 0, []
    for b in bits:
        prev ^= b
        out.append(prev)
    return out


def spread(symbols, table):
    return [c for s in symbols for c in table[s]]


def pm(b):
    return 1.0 if b else -1.0


def fir(samples, taps):
    out = []
    for n in range(len(samples)):
        acc_i = 0.0
        acc_q = 0.0
        for k, c in enumerate(taps):
            j = n - k
            if 0 <= j < len(samples):
                x_i, x_q = samples[j]
            else:
                x_i, x_q = 0.0, 0.0
            acc_i += c * x_i
            acc_q += c * x_q
        out.append((acc_i, acc_q))
    return out


def oqpsk(data, zeros, delay):
    chips = spread(nibbles_low_first(data), load_chips("oqpsk"))
    pts = [(pm(chips[i]), pm(chips[i + 1])) for i in range(0, len(chips), 2)]
    y = fir(pts, load_taps("half_sine"))
    padded = []
    for p in y:
        padded.append(p)
        padded += [(0.0, 0.0)] * zeros
    n = len(padded)
    return [
        (padded[k][0] if k < n else 0.0, padded[k - delay][1] if k >= delay else 0.0)
        for k in range(n + delay)
    ]


def bpsk(data):
    chips = spread(diff_encode(bits_lsb_first(data)), load_chips("bpsk"))
    pts = [(pm(c), 0.0) for c in chips for _ in range(4)]
    return fir(pts, load_taps("raised_cosine"))


QUAD = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]


def gfsk(data):
    walk = quadrant_walk(whiten(bits_lsb_first(data)))
    return [QUAD[s] for s in walk for _ in range(4)]


PRESETS = {
    1: ("oqpsk2450", 4_000_000, lambda d: oqpsk(d, 3, 2)),
    4: ("bpsk868", 1_200_000, bpsk),
    6: ("gfsk", 400_000, gfsk),
}

FORMATS = {"cf32": 1, "ci16": 2}


def to_i16(v):
    x = v * 32767.0
    a = abs(x)
    r = math.floor(a)
    if a - r >= 0.5:
        r += 1
    r = min(r, 32767)
    return int(-r if x < 0 else r)


def encode(samples, fmt, preset_id, rate):
    head = b"HYBRIDIQ" + struct.pack("<HHHHQQ", 1, FORMATS[fmt], preset_id, 0, rate, len(samples))
    if fmt == "cf32":
        body = b"".join(struct.pack("<ff", i, q) for i, q in samples)
    else:
        body = b"".join(struct.pack("<hh", to_i16(i), to_i16(q)) for i, q in samples)
    return head + body


def packets():
    # A counting ramp, and 127 bytes from an iterated SHA-256 chain.
    ramp = bytes(range(16))
    chain, h = b"", b"golden"
    while len(chain) < 127:
        h = hashlib.sha256(h).digest()
        chain += h
    return [("ramp16", ramp), ("hash127", chain[:127])]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    vectors = []
    for pid, (name, rate, modulate) in PRESETS.items():
        for pname, data in packets():
            iq = modulate(data)
            for fmt in FORMATS:
                blob = encode(iq, fmt, pid, rate)
                fname = f"{name}-{pname}.{fmt}.iq"
                (OUT / fname).write_bytes(blob)
                vectors.append(
                    {
                        "name": f"{name}-{pname}-{fmt}",
                        "preset_id": pid,
                        "packet_hex": data.hex(),
                        "file": fname,
                        "format": fmt,
                        "sha256": hashlib.sha256(blob).hexdigest(),
                        "tolerance": 0.0 if fmt == "ci16" else 1e-6,
                    }
                )
    (OUT / "manifest.json").write_text(json.dumps({"vectors": vectors}, indent=2) + "\n")


if __name__ == "__main__":
    main()
