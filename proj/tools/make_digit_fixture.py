#!/usr/bin/env python3
"""Write a small IDX digit set from the 5000-image MNIST sample shipped in mlxtend."""

import argparse
import gzip
import io
import struct
import zipfile
from pathlib import Path


def read_rows(wheel):
    with zipfile.ZipFile(wheel) as z:
        raw = z.read("mlxtend/data/data/mnist_5k.csv.gz")
    text = gzip.decompress(raw).decode()
    rows = []
    for line in io.StringIO(text):
        line = line.strip()
        if line:
            rows.append([int(v) for v in line.split(",")])
    return rows


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--wheel", required=True)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--prefix", default="digits")
    a = p.parse_args()

    rows = read_rows(a.wheel)[a.offset:a.offset + a.count]
    if len(rows) < a.count:
        raise SystemExit(f"only {len(rows)} images available")
    # 784 pixels then the label.
    if len(rows[0]) == 785:
        labels = [r[-1] for r in rows]
        pixels = [r[:-1] for r in rows]
    else:
        raise SystemExit(f"unexpected row width {len(rows[0])}")

    a.out.mkdir(parents=True, exist_ok=True)
    with open(a.out / f"{a.prefix}-images.idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(pixels), 28, 28))
        for r in pixels:
            f.write(bytes(r))
    with open(a.out / f"{a.prefix}-labels.idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


if __name__ == "__main__":
    main()
