#!/usr/bin/env python3
"""Writes the shipped chip tables and 41-tap FIR coefficient files.

Run once from the repository root; the outputs are committed under
crates/core/data/.
"""
import math
import pathlib

DATA = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "data"

# 2450 MHz O-QPSK symbol-to-chip table, c0 first.
OQPSK = [
    "11011001110000110101001000101110",
    "11101101100111000011010100100010",
    "00101110110110011100001101010010",
    "00100010111011011001110000110101",
    "01010010001011101101100111000011",
    "00110101001000101110110110011100",
    "11000011010100100010111011011001",
    "10011100001101010010001011101101",
    "10001100100101100000011101111011",
    "10111000110010010110000001110111",
    "01111011100011001001011000000111",
    "01110111101110001100100101100000",
    "00000111011110111000110010010110",
    "01100000011101111011100011001001",
    "10010110000001110111101110001100",
    "11001001011000000111011110111000",
]

# 868/915 MHz BPSK spreading sequences.
BPSK = ["111101011001000", "000010100110111"]


def check_tables():
    base = OQPSK[0]
    for k in range(1, 8):
        shift = 4 * k
        assert OQPSK[k] == base[-shift:] + base[:-shift], k
    for k in range(8):
        inv = "".join(
            ("1" if c == "0" else "0") if i % 2 else c for i, c in enumerate(OQPSK[k])
        )
        assert OQPSK[k + 8] == inv, k
    assert BPSK[1] == "".join("1" if c == "0" else "0" for c in BPSK[0])


def half_sine():
    taps = [math.sin(math.pi * (n + 1) / 42.0) for n in range(41)]
    return taps


def raised_cosine(beta=1.0, sps=4):
    taps = []
    for n in range(41):
        t = (n - 20) / sps
        if abs(abs(2 * beta * t) - 1.0) < 1e-12:
            v = (math.pi / 4.0) * (math.sin(math.pi / (2 * beta)) / (math.pi / (2 * beta)))
        else:
            sinc = 1.0 if t == 0 else math.sin(math.pi * t) / (math.pi * t)
            v = sinc * math.cos(math.pi * beta * t) / (1.0 - (2.0 * beta * t) ** 2)
        taps.append(v)
    return taps


def l1_normalize(taps):
    s = sum(abs(t) for t in taps)
    return [t / s for t in taps]


def main():
    check_tables()
    (DATA / "chips" / "oqpsk.txt").write_text("\n".join(OQPSK) + "\n")
    (DATA / "chips" / "bpsk.txt").write_text("\n".join(BPSK) + "\n")
    for name, taps in (("half_sine", half_sine()), ("raised_cosine", raised_cosine())):
        taps = l1_normalize(taps)
        assert len(taps) == 41
        (DATA / "taps" / f"{name}.txt").write_text("".join(f"{t!r}\n" for t in taps))


if __name__ == "__main__":
    main()
