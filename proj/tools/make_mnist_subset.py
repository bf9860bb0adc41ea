#!/usr/bin/env python3
"""Write the 5000-sample MNIST subset bundled with mlxtend as gzipped IDX files.

Usage: make_mnist_subset.py OUT_DIR [--wheel PATH]

Without --wheel the script downloads the mlxtend wheel with pip. The images
are written as 28x28 uint8 (magic 0x00000803), labels as uint8 (0x00000801).
"""
import argparse
import glob
import gzip
import struct
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def find_wheel(explicit):
    if explicit:
        return Path(explicit)
    tmp = tempfile.mkdtemp()
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q",
                    "-d", tmp, "mlxtend"], check=True)
    return Path(glob.glob(f"{tmp}/mlxtend-*.whl")[0])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--wheel")
    args = ap.parse_args()

    with zipfile.ZipFile(find_wheel(args.wheel)) as z:
        rows = gzip.decompress(z.read(MEMBER)).decode().splitlines()

    pixels = bytearray()
    labels = bytearray()
    for row in rows:
        vals = [int(float(v)) for v in row.split(",")]
        assert len(vals) == 785
        pixels.extend(vals[:784])
        labels.append(vals[784])

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = len(rows)
    # mtime=0 keeps the archives byte-reproducible
    with gzip.GzipFile(out / "images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28) + bytes(pixels))
    with gzip.GzipFile(out / "labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n) + bytes(labels))
    print(f"wrote {n} images to {out}")


if __name__ == "__main__":
    main()
