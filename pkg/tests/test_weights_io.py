import numpy as np
import pytest

from fwgan.generator import GeneratorConfig, random_model
from fwgan.tensor_core import BlockSparseMatrix, DenseMatrix, gemv
from fwgan.weights_io import (
    ModelWeights,
    WeightFormatError,
    load_model,
    save_model,
)


def small_model():
    rng = np.random.default_rng(11)
    return ModelWeights(
        {
            "dense_a": DenseMatrix(rng.normal(size=(16, 7)).astype(np.float32)),
            "sparse_b": BlockSparseMatrix.from_dense(
                rng.normal(size=(32, 5)).astype(np.float32),
                rng.random((2, 5)) < 0.5,
                (16, 1),
            ),
        }
    )


def test_round_trip_bit_identical(tmp_path):
    w = small_model()
    path = tmp_path / "m.fwgn"
    save_model(w, path)
    loaded = load_model(path)
    assert loaded.names() == w.names()
    assert np.array_equal(loaded["dense_a"].data, w["dense_a"].data)
    b0, b1 = w["sparse_b"], loaded["sparse_b"]
    assert np.array_equal(b0.mask, b1.mask)
    assert np.array_equal(b0.values, b1.values)
    assert b0.block_shape == b1.block_shape


def test_save_is_deterministic(tmp_path):
    w = small_model()
    p1, p2 = tmp_path / "a", tmp_path / "b"
    save_model(w, p1)
    save_model(w, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_save_identity_on_file(tmp_path):
    p1, p2 = tmp_path / "a", tmp_path / "b"
    save_model(small_model(), p1)
    save_model(load_model(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_corrupt_payload_byte_rejected(tmp_path):
    path = tmp_path / "m.fwgn"
    save_model(small_model(), path)
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(WeightFormatError, match="checksum"):
        load_model(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "m.fwgn"
    save_model(small_model(), path)
    path.write_bytes(path.read_bytes()[:20])
    with pytest.raises(WeightFormatError, match="checksum|end of file"):
        load_model(path)


def test_bad_magic(tmp_path):
    import struct
    import zlib

    path = tmp_path / "m.fwgn"
    body = b"NOPE" + struct.pack("<II", 1, 0)
    body += struct.pack("<I", zlib.crc32(body))
    path.write_bytes(body)
    with pytest.raises(WeightFormatError, match="bad magic"):
        load_model(path)


def test_unsupported_version(tmp_path):
    import struct
    import zlib

    path = tmp_path / "m.fwgn"
    body = b"FWGN" + struct.pack("<II", 2, 0)
    body += struct.pack("<I", zlib.crc32(body))
    path.write_bytes(body)
    with pytest.raises(WeightFormatError, match="unsupported version"):
        load_model(path)


def test_density_one_mask_loads_gemv_equivalent(tmp_path):
    rng = np.random.default_rng(4)
    data = rng.normal(size=(16, 6)).astype(np.float32)
    sparse = BlockSparseMatrix.from_dense(data, np.ones((1, 6), bool), (16, 1))
    path = tmp_path / "m.fwgn"
    save_model(ModelWeights({"t": sparse}), path)
    loaded = load_model(path)["t"]
    x = rng.normal(size=6)
    assert np.array_equal(gemv(loaded, x), gemv(DenseMatrix(data), x))


def test_full_generator_model_round_trip(tmp_path):
    cfg = GeneratorConfig.tiny()
    w = random_model(cfg, seed=3)
    path = tmp_path / "gen.fwgn"
    save_model(w, path)
    loaded = load_model(path)
    for name in w.names():
        assert np.array_equal(loaded[name].data, w[name].data)
