#!/usr/bin/env python3
# Copyright 2026 The LGSQE Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes real and noise-degraded LGT sets from an IDX file.

    make_proxy.py data/mnist/t10k-images-idx3-ubyte.gz --sigma 0.15 --out-dir /tmp/proxy
"""

import argparse
import gzip
import pathlib
import struct

import numpy as np


def load_idx(path):
    raw = pathlib.Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != 0x803:
        raise SystemExit(f"{path}: not an IDX image file")
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(n, rows, cols, 1)
    return pixels.astype(np.float32) / 255.0


def save_lgt(path, images, generated):
    n, size, _, channels = images.shape
    with open(path, "wb") as f:
        f.write(b"LGT1")
        f.write(struct.pack("<IIIIB", n, size, size, channels, 1 if generated else 0))
        f.write(images.astype("<f4").tobytes())


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("idx")
    parser.add_argument("--sigma", type=float, default=0.15)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", required=True)
    args = parser.parse_args()

    images = load_idx(args.idx)
    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(images))
    half = len(images) // 2
    real = images[order[:half]]
    generated = np.clip(images[order[half:]] + rng.normal(0.0, args.sigma, images[order[half:]].shape), 0.0, 1.0)

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_lgt(out / "real.lgt", real, False)
    save_lgt(out / "generated.lgt", generated, True)
    print(f"wrote {len(real)} real and {len(generated)} generated images to {out}")


if __name__ == "__main__":
    main()
