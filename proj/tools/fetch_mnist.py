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

"""Rebuilds data/mnist/t10k-images-idx3-ubyte.gz from the `mnist` npm package.

The npm package ships the 10,000 MNIST test digits as per-class JSON arrays
of normalized pixels. They are rounded back to bytes and written as a
canonical gzip-compressed IDX rank-3 tensor, ordered by class.
"""

import argparse
import glob
import gzip
import json
import os
import struct
import subprocess
import tarfile
import tempfile

SIZE = 28


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=os.path.join(
        os.path.dirname(__file__), "..", "data", "mnist",
        "t10k-images-idx3-ubyte.gz"))
    parser.add_argument("--package", default="mnist@1.1.0")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(["npm", "pack", args.package], cwd=tmp, check=True,
                       stdout=subprocess.DEVNULL)
        tarball = glob.glob(os.path.join(tmp, "*.tgz"))[0]
        with tarfile.open(tarball) as tar:
            tar.extractall(tmp)
        pixels = bytearray()
        for digit in range(10):
            path = os.path.join(tmp, "package", "src", "digits", f"{digit}.json")
            with open(path) as f:
                values = json.load(f)["data"]
            if len(values) % (SIZE * SIZE):
                raise SystemExit(f"{path}: truncated digit data")
            pixels.extend(min(255, max(0, round(v * 255))) for v in values)

    count = len(pixels) // (SIZE * SIZE)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    # mtime=0 keeps the archive byte-stable across rebuilds.
    with open(args.out, "wb") as raw, \
            gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, count, SIZE, SIZE))
        f.write(bytes(pixels))
    print(f"wrote {count} images to {args.out}")


if __name__ == "__main__":
    main()
