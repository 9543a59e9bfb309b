"""Writes the synthetic buffer-size/data-rate dataset on Size = k * rate^m.

Rates are log-spaced over the range the standard presets span at their
interposer boundaries; sizes are exact (no noise).
"""
import math
import pathlib

K = 0.0007
M = 0.66
OUT = pathlib.Path(__file__).resolve().parent.parent / "crates/core/data/fig7_synthetic.csv"

rates = [10 ** (3 + 4 * i / 15) for i in range(16)]
lines = ["rate,min_size"]
for r in rates:
    lines.append(f"{r!r},{K * math.pow(r, M)!r}")
OUT.write_text("\n".join(lines) + "\n")
print(f"wrote {OUT} ({len(rates)} points)")
