import struct

import numpy as np
import pytest

from patchsynth import npsw


def test_single_tensor_fixture(tmp_path):
    p = tmp_path / "one.npsw"
    npsw.write_weights(p, {"fixture.t": np.array([[[[2.0]]]], dtype=np.float32)})
    table = npsw.load_weights(p)
    assert set(table) == {"fixture.t"}
    assert table["fixture.t"].shape == (1, 1, 1, 1)
    assert table["fixture.t"][0, 0, 0, 0] == 2.0


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    tensors = {
        "vgg19.conv1_1.weight": rng.standard_normal((4, 3, 3, 3)).astype(np.float32),
        "vgg19.conv1_1.bias": rng.standard_normal(4).astype(np.float32),
        "vgg19.mean": np.array([123.68, 116.779, 103.939], dtype=np.float32),
        "scalarish": np.float32(7.25).reshape(()),
    }
    p = tmp_path / "w.npsw"
    npsw.write_weights(p, tensors)
    back = npsw.load_weights(p)
    assert set(back) == set(tensors)
    for name, arr in tensors.items():
        assert back[name].dtype == np.float32
        assert back[name].shape == np.shape(arr)
        assert np.array_equal(back[name], np.asarray(arr, dtype=np.float32))


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.npsw"
    p.write_bytes(b"WRNG" + b"\x00" * 16)
    with pytest.raises(npsw.BadMagicError):
        npsw.load_weights(p)


def test_version_mismatch(tmp_path):
    p = tmp_path / "v2.npsw"
    p.write_bytes(b"NPSW" + struct.pack("<II", 2, 0) + struct.pack("<I", 0))
    with pytest.raises(npsw.VersionMismatchError):
        npsw.load_weights(p)


def test_truncated_data(tmp_path):
    p = tmp_path / "w.npsw"
    npsw.write_weights(p, {"a": np.ones((8, 8), dtype=np.float32)})
    blob = p.read_bytes()
    clipped = tmp_path / "clipped.npsw"
    clipped.write_bytes(blob[: len(blob) // 2])
    with pytest.raises((npsw.TruncatedFileError, npsw.ChecksumError)):
        npsw.load_weights(clipped)
    tiny = tmp_path / "tiny.npsw"
    tiny.write_bytes(blob[:6])
    with pytest.raises(npsw.TruncatedFileError):
        npsw.load_weights(tiny)


def test_corrupted_payload_fails_checksum(tmp_path):
    p = tmp_path / "w.npsw"
    npsw.write_weights(p, {"a": np.arange(16, dtype=np.float32)})
    blob = bytearray(p.read_bytes())
    blob[len(blob) // 2] ^= 0xFF
    bad = tmp_path / "corrupt.npsw"
    bad.write_bytes(bytes(blob))
    with pytest.raises(npsw.ChecksumError):
        npsw.load_weights(bad)
