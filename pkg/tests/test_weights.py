import json

import numpy as np
import pytest

from lifmap.errors import (ChecksumError, ManifestError, MissingTensorError, ShapeError,
                           TensorShapeError)
from lifmap.weights import crc32c, load_weights, save_weights, sidecar_path


def mlp_tensors(rng=None):
    rng = rng or np.random.default_rng(0)
    return {"fc1": rng.normal(size=(6, 4)), "fc2": rng.normal(size=(3, 6))}


def test_crc32c_check_value():
    assert crc32c(b"123456789") == 0xE3069283
    assert crc32c(b"") == 0


def test_crc32c_incremental():
    assert crc32c(b"6789", crc32c(b"12345")) == crc32c(b"123456789")


def test_round_trip(tmp_path):
    t = mlp_tensors()
    save_weights(tmp_path / "w.json", t, {"fc1": "dense", "fc2": "dense"})
    bundle = load_weights(tmp_path / "w.json")
    assert len(bundle) == 2
    for name, arr in t.items():
        np.testing.assert_array_equal(bundle[name], arr.astype("<f4"))
    assert bundle.entries["fc2"].offset == 24


def test_manifest_layout(tmp_path):
    save_weights(tmp_path / "w.json", mlp_tensors())
    doc = json.loads((tmp_path / "w.json").read_text())
    assert doc["format_version"] == 1 and doc["dtype"] == "f32le"
    assert doc["checksum"].startswith("crc32c:") and len(doc["checksum"]) == len("crc32c:") + 8
    assert [entry["name"] for entry in doc["layers"]] == ["fc1", "fc2"]
    blob = (tmp_path / "w.bin").read_bytes()
    assert len(blob) == 4 * (24 + 18)
    # row-major little-endian float32
    first = np.frombuffer(blob[:4 * 4], "<f4")
    np.testing.assert_array_equal(first, mlp_tensors()["fc1"][0].astype("<f4"))


def test_missing_tensor(tmp_path):
    save_weights(tmp_path / "w.json", mlp_tensors())
    bundle = load_weights(tmp_path / "w.json")
    with pytest.raises(MissingTensorError):
        bundle["fc3"]
    with pytest.raises(KeyError):
        bundle["fc3"]


def test_bind_shape_mismatch(tmp_path):
    save_weights(tmp_path / "w.json", mlp_tensors())
    bundle = load_weights(tmp_path / "w.json")
    assert bundle.bind("fc1", (6, 4)).shape == (6, 4)
    with pytest.raises(TensorShapeError):
        bundle.bind("fc1", (4, 6))
    with pytest.raises(ShapeError):
        bundle.bind("fc1", (5, 4))


def test_declared_shape_larger_than_blob(tmp_path):
    # manifest declares 784x600 but the blob only holds 784x500 values
    save_weights(tmp_path / "w.json", {"fc1": np.zeros((784, 500))})
    doc = json.loads((tmp_path / "w.json").read_text())
    doc["layers"][0]["shape"] = [784, 600]
    doc["layers"][0]["length"] = 784 * 600
    (tmp_path / "w.json").write_text(json.dumps(doc))
    with pytest.raises(TensorShapeError):
        load_weights(tmp_path / "w.json")


def test_shape_length_disagreement(tmp_path):
    save_weights(tmp_path / "w.json", mlp_tensors())
    doc = json.loads((tmp_path / "w.json").read_text())
    doc["layers"][0]["shape"] = [5, 4]
    (tmp_path / "w.json").write_text(json.dumps(doc))
    with pytest.raises(TensorShapeError):
        load_weights(tmp_path / "w.json")


def test_bit_flip_is_checksum_error(tmp_path):
    save_weights(tmp_path / "w.json", mlp_tensors())
    blob = bytearray((tmp_path / "w.bin").read_bytes())
    blob[17] ^= 0x04
    (tmp_path / "w.bin").write_bytes(bytes(blob))
    with pytest.raises(ChecksumError):
        load_weights(tmp_path / "w.json")


def test_error_kinds_are_distinct():
    assert not issubclass(ChecksumError, TensorShapeError)
    assert not issubclass(TensorShapeError, ChecksumError)
    assert not issubclass(MissingTensorError, (ChecksumError, TensorShapeError))


@pytest.mark.parametrize("field,value", [("format_version", 2), ("dtype", "f64le"),
                                         ("checksum", "md5:abc")])
def test_unsupported_header(tmp_path, field, value):
    save_weights(tmp_path / "w.json", mlp_tensors())
    doc = json.loads((tmp_path / "w.json").read_text())
    doc[field] = value
    (tmp_path / "w.json").write_text(json.dumps(doc))
    with pytest.raises(ManifestError):
        load_weights(tmp_path / "w.json")


def test_invalid_json(tmp_path):
    (tmp_path / "w.json").write_text("{nope")
    with pytest.raises(ManifestError):
        load_weights(tmp_path / "w.json")


def test_missing_sidecar_is_os_error(tmp_path):
    save_weights(tmp_path / "w.json", mlp_tensors())
    (tmp_path / "w.bin").unlink()
    with pytest.raises(OSError):
        load_weights(tmp_path / "w.json")


def test_data_key_overrides_sidecar(tmp_path):
    save_weights(tmp_path / "w.json", mlp_tensors())
    (tmp_path / "w.bin").rename(tmp_path / "blob.raw")
    doc = json.loads((tmp_path / "w.json").read_text())
    doc["data"] = "blob.raw"
    (tmp_path / "w.json").write_text(json.dumps(doc))
    assert sidecar_path(tmp_path / "w.json", doc) == tmp_path / "blob.raw"
    assert len(load_weights(tmp_path / "w.json")) == 2
