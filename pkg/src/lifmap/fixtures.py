"""Synthetic networks and datasets standing in for trained models and images.

Datasets on disk are a directory with ``meta.json``, one flat little-endian
float32 file per sample under ``samples/`` and ``labels.csv``
(``index,file,label``; label -1 when unknown).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .network import Conv, Dense, Flatten, MaxPool, NetworkSpec

DATASET_VERSION = 1

# Weights ~ N(0, (gain / sqrt(fan_in))**2). With gain 2 and inputs coded
# into [0, 10] Hz, hidden and output rates stay well below the 100 Hz
# ceiling of a 0.01 s grid.
DEFAULT_GAIN = 2.0


def _normal(rng, fan_in, shape, gain):
    return rng.normal(0.0, gain / math.sqrt(fan_in), shape)


def random_mlp(seed=0, sizes=(64, 32, 10), gain=DEFAULT_GAIN) -> NetworkSpec:
    rng = np.random.default_rng(seed)
    layers = [Dense(f"fc{i + 1}", b, weights=_normal(rng, a, (b, a), gain))
              for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]))]
    return NetworkSpec((sizes[0],), layers, "ann")


def random_convnet(seed=0, input_shape=(8, 8, 1), filters=4, kernel=3, n_classes=10,
                   gain=DEFAULT_GAIN) -> NetworkSpec:
    """Conv(filters@k x k, same padding) -> MaxPool(2x2) -> Flatten -> Dense(n_classes)."""
    rng = np.random.default_rng(seed)
    h, w, c = input_shape
    kw = _normal(rng, kernel * kernel * c, (kernel, kernel, c, filters), gain)
    flat = (h // 2) * (w // 2) * filters
    dw = _normal(rng, flat, (n_classes, flat), gain)
    return NetworkSpec(input_shape, [
        Conv("conv1", filters, (kernel, kernel), 1, kernel // 2, weights=kw),
        MaxPool("pool1", (2, 2), 2),
        Flatten("flatten"),
        Dense("fc1", n_classes, weights=dw),
    ], "ann")


def random_images(seed, n, shape):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, (n,) + tuple(shape))


def two_class_blobs(seed, n, dim, spread=0.15):
    """Two Gaussian clusters in [0, 1]^dim with alternating labels."""
    rng = np.random.default_rng(seed)
    centres = rng.uniform(0.2, 0.8, (2, dim))
    labels = np.arange(n) % 2
    x = centres[labels] + rng.normal(0.0, spread, (n, dim))
    return np.clip(x, 0.0, 1.0), labels


def save_dataset(path, x, labels=None):
    path = Path(path)
    (path / "samples").mkdir(parents=True, exist_ok=True)
    x = np.asarray(x)
    if labels is None:
        labels = np.full(len(x), -1)
    meta = {"format_version": DATASET_VERSION, "shape": list(x.shape[1:]),
            "dtype": "f32le", "count": len(x)}
    with open(path / "labels.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "file", "label"])
        for i, (sample, lab) in enumerate(zip(x, labels)):
            name = f"samples/{i:05d}.bin"
            (path / name).write_bytes(np.ascontiguousarray(sample, dtype="<f4").tobytes())
            w.writerow([i, name, int(lab)])
    (path / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def load_dataset(path):
    """Return ``(x, labels)`` with ``x`` as float64 of shape ``(count, *shape)``."""
    path = Path(path)
    meta = json.loads((path / "meta.json").read_text())
    shape = tuple(meta["shape"])
    size = math.prod(shape)
    xs, labels = [], []
    with open(path / "labels.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            raw = np.frombuffer((path / row["file"]).read_bytes(), dtype="<f4")
            if raw.size != size:
                raise ShapeError(f"{row['file']}: {raw.size} values, expected {size}")
            xs.append(raw.reshape(shape).astype(np.float64))
            labels.append(int(row["label"]))
    return np.stack(xs) if xs else np.zeros((0,) + shape), np.array(labels, dtype=np.int64)
