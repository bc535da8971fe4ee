#!/usr/bin/env python3
"""Build the small MNIST IDX fixtures used by the test suites.

Source: the 5000-image MNIST subset shipped with mlxtend
(mlxtend/data/data/mnist_5k.csv.gz, 784 pixel columns + label, sorted by
class).  The rows are shuffled with a fixed seed and split into a
512-image training file and a 1024-image test file.

    python3 tools/make_mnist_fixture.py path/to/mnist_5k.csv.gz tests/data
"""
import gzip
import struct
import sys
from pathlib import Path

import numpy as np


def write_idx(path, images, labels):
    n = images.shape[0]
    with open(path.with_name(path.name + "-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(images.astype(np.uint8).tobytes())
    with open(path.with_name(path.name + "-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    with gzip.open(src, "rt") as f:
        table = np.loadtxt(f, delimiter=",")
    images, labels = table[:, :-1], table[:, -1].astype(int)
    order = np.random.RandomState(20240611).permutation(len(labels))
    images, labels = images[order], labels[order]
    out.mkdir(parents=True, exist_ok=True)
    write_idx(out / "mnist-train512", images[:512], labels[:512])
    write_idx(out / "mnist-test1024", images[512:1536], labels[512:1536])


if __name__ == "__main__":
    main()
