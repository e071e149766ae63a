"""Weight manifests: a JSON index plus a raw little-endian float32 sidecar.

Manifest layout::

    {"format_version": 1,
     "layers": [{"name": ..., "kind": ..., "shape": [...], "offset": 0, "length": N}, ...],
     "dtype": "f32le",
     "checksum": "crc32c:<8 hex digits>"}

``offset`` and ``length`` count elements, not bytes. The sidecar lives next
to the manifest under the same stem with a ``.bin`` suffix unless the
manifest names it in an optional ``"data"`` key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ChecksumError, ManifestError, MissingTensorError, TensorShapeError

FORMAT_VERSION = 1
DTYPE = "f32le"


def _make_crc32c_table():
    poly = 0x82F63B78  # Castagnoli, reflected
    table = []
    for n in range(256):
        c = n
        for _ in range(8):
            c = (c >> 1) ^ poly if c & 1 else c >> 1
        table.append(c)
    return table


_CRC32C_TABLE = _make_crc32c_table()


def crc32c(data: bytes, crc: int = 0) -> int:
    # stdlib zlib.crc32 is the IEEE polynomial; the manifest contract needs Castagnoli.
    crc ^= 0xFFFFFFFF
    table = _CRC32C_TABLE
    for b in memoryview(data).cast("B"):
        crc = table[(crc ^ b) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFF


@dataclass(frozen=True)
class TensorEntry:
    name: str
    kind: str
    shape: tuple
    offset: int
    length: int


@dataclass
class WeightsBundle:
    tensors: dict = field(default_factory=dict)
    entries: dict = field(default_factory=dict)

    def __contains__(self, name):
        return name in self.tensors

    def __len__(self):
        return len(self.tensors)

    def __getitem__(self, name):
        try:
            return self.tensors[name]
        except KeyError:
            raise MissingTensorError(f"tensor {name!r} not in weight bundle") from None

    def bind(self, name, shape):
        """Fetch ``name`` and check it has ``shape``."""
        arr = self[name]
        if tuple(arr.shape) != tuple(shape):
            raise TensorShapeError(
                f"tensor {name!r} has shape {tuple(arr.shape)}, layer needs {tuple(shape)}")
        return arr


def sidecar_path(manifest_path, manifest=None):
    manifest_path = Path(manifest_path)
    if manifest and manifest.get("data"):
        return manifest_path.parent / manifest["data"]
    return manifest_path.with_suffix(".bin")


def save_weights(manifest_path, tensors, kinds=None):
    """Write ``tensors`` (name -> array, insertion order kept) as manifest + blob."""
    manifest_path = Path(manifest_path)
    kinds = kinds or {}
    layers, chunks, offset = [], [], 0
    for name, arr in tensors.items():
        a = np.ascontiguousarray(arr, dtype="<f4")
        layers.append({"name": name, "kind": kinds.get(name, "dense"),
                       "shape": list(a.shape), "offset": offset, "length": int(a.size)})
        chunks.append(a.tobytes())
        offset += a.size
    blob = b"".join(chunks)
    manifest = {"format_version": FORMAT_VERSION, "layers": layers, "dtype": DTYPE,
                "checksum": f"crc32c:{crc32c(blob):08x}"}
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    sidecar_path(manifest_path).write_bytes(blob)
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def load_weights(manifest_path) -> WeightsBundle:
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: invalid JSON ({exc})") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ManifestError(f"unsupported format_version {manifest.get('format_version')!r}")
    if manifest.get("dtype") != DTYPE:
        raise ManifestError(f"unsupported dtype {manifest.get('dtype')!r}")
    checksum = str(manifest.get("checksum", ""))
    if not checksum.startswith("crc32c:"):
        raise ManifestError(f"unsupported checksum {checksum!r}")

    blob = sidecar_path(manifest_path, manifest).read_bytes()
    if len(blob) % 4:
        raise TensorShapeError(f"blob size {len(blob)} is not a whole number of float32 values")
    n_values = len(blob) // 4

    entries = {}
    for layer in manifest.get("layers", []):
        try:
            e = TensorEntry(name=str(layer["name"]), kind=str(layer.get("kind", "")),
                            shape=tuple(int(s) for s in layer["shape"]),
                            offset=int(layer["offset"]), length=int(layer["length"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"bad layer entry {layer!r}: {exc}") from None
        if e.name in entries:
            raise ManifestError(f"duplicate tensor name {e.name!r}")
        if math.prod(e.shape) != e.length:
            raise TensorShapeError(
                f"tensor {e.name!r}: shape {e.shape} holds {math.prod(e.shape)} values, "
                f"length says {e.length}")
        if e.offset < 0 or e.offset + e.length > n_values:
            raise TensorShapeError(
                f"tensor {e.name!r}: elements [{e.offset}, {e.offset + e.length}) "
                f"exceed blob of {n_values} values")
        entries[e.name] = e

    actual = f"crc32c:{crc32c(blob):08x}"
    if actual != checksum.lower():
        raise ChecksumError(f"checksum mismatch: manifest {checksum}, blob {actual}")

    values = np.frombuffer(blob, dtype="<f4")
    tensors = {name: values[e.offset:e.offset + e.length].reshape(e.shape).copy()
               for name, e in entries.items()}
    return WeightsBundle(tensors=tensors, entries=entries)
