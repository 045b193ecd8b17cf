"""Versioned binary weight container (the "FWGN" format).

The engine and the external trainer exchange models through this format, so
the byte layout is frozen. All integers are little-endian. Layout:

    magic        4 bytes, b"FWGN"
    version      u32 (currently 1)
    tensor_count u32
    per tensor, sorted by name:
        name_len u32, name bytes (UTF-8)
        dtype    u8  (0 = float32; only value in v1)
        rank     u8  (always 2 in v1)
        dims     rank * u32
        sparse   u8  (0 dense, 1 block-sparse)
        if sparse:
            block_rows u32, block_cols u32
            mask       ceil(n_blocks / 8) bytes, row-major blocks,
                       LSB-first within each byte
        payload  float32 little-endian;
                 dense: rows*cols values, row-major;
                 sparse: kept blocks in row-major block order, each block
                 row-major
    checksum     u32, CRC-32 (zlib) of every preceding byte

Saving sorts tensors by name, so identical models produce identical bytes.
"""

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .tensor_core import BlockSparseMatrix, DenseMatrix

MAGIC = b"FWGN"
VERSION = 1
DTYPE_F32 = 0


class WeightFormatError(ValueError):
    """Raised on any structural problem in a weight file."""


@dataclass
class ModelWeights:
    """Named tensor store; values are DenseMatrix or BlockSparseMatrix."""

    tensors: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.tensors[name]

    def __contains__(self, name):
        return name in self.tensors

    def names(self):
        return sorted(self.tensors)

    @property
    def n_params(self):
        return sum(t.n_params for t in self.tensors.values())

    @property
    def n_active(self):
        return sum(t.n_active for t in self.tensors.values())


def _pack_mask_bits(mask):
    return np.packbits(mask.reshape(-1).astype(np.uint8), bitorder="little").tobytes()


def _unpack_mask_bits(raw, shape):
    n = shape[0] * shape[1]
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    return bits[:n].astype(bool).reshape(shape)


def _encode_tensor(name, tensor):
    out = bytearray()
    name_b = name.encode("utf-8")
    out += struct.pack("<I", len(name_b)) + name_b
    if isinstance(tensor, DenseMatrix):
        out += struct.pack("<BB", DTYPE_F32, 2)
        out += struct.pack("<II", tensor.rows, tensor.cols)
        out += struct.pack("<B", 0)
        payload = np.ascontiguousarray(tensor.data, dtype="<f4")
    elif isinstance(tensor, BlockSparseMatrix):
        out += struct.pack("<BB", DTYPE_F32, 2)
        out += struct.pack("<II", tensor.rows, tensor.cols)
        out += struct.pack("<B", 1)
        out += struct.pack("<II", *tensor.block_shape)
        out += _pack_mask_bits(tensor.mask)
        payload = np.ascontiguousarray(tensor.values, dtype="<f4")
    else:
        raise WeightFormatError(f"tensor {name!r} has unsupported type {type(tensor)!r}")
    out += payload.tobytes()
    return bytes(out)


def save_model(weights, path):
    """Write `weights` to `path`; byte-identical output for identical input."""
    body = bytearray()
    body += MAGIC
    body += struct.pack("<I", VERSION)
    names = weights.names()
    if len(names) != len(weights.tensors):
        raise WeightFormatError("duplicate tensor names")
    body += struct.pack("<I", len(names))
    for name in names:
        body += _encode_tensor(name, weights.tensors[name])
    body += struct.pack("<I", zlib.crc32(bytes(body)) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(bytes(body))


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise WeightFormatError("unexpected end of file")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def u8(self):
        return self.take(1)[0]


def load_model(path):
    """Read and validate a weight file; raises WeightFormatError with a
    specific message for bad magic / version / truncation / checksum /
    shape problems."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4 + 4 + 4 + 4:
        raise WeightFormatError("unexpected end of file")
    stored = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored:
        raise WeightFormatError("checksum mismatch")

    r = _Reader(data[:-4])
    if r.take(4) != MAGIC:
        raise WeightFormatError("bad magic")
    version = r.u32()
    if version != VERSION:
        raise WeightFormatError(f"unsupported version {version}")
    count = r.u32()
    tensors = {}
    for _ in range(count):
        name = r.take(r.u32()).decode("utf-8")
        if name in tensors:
            raise WeightFormatError(f"duplicate tensor name {name!r}")
        dtype = r.u8()
        if dtype != DTYPE_F32:
            raise WeightFormatError(f"tensor {name!r}: unsupported dtype {dtype}")
        rank = r.u8()
        if rank != 2:
            raise WeightFormatError(f"tensor {name!r}: unsupported rank {rank}")
        rows, cols = r.u32(), r.u32()
        sparse = r.u8()
        if sparse == 0:
            payload = np.frombuffer(r.take(rows * cols * 4), dtype="<f4")
            tensors[name] = DenseMatrix(payload.reshape(rows, cols).copy())
        elif sparse == 1:
            bh, bw = r.u32(), r.u32()
            if bh == 0 or bw == 0 or rows % bh or cols % bw:
                raise WeightFormatError(
                    f"tensor {name!r}: bad block shape ({bh},{bw}) for {rows}x{cols}"
                )
            grid = (rows // bh, cols // bw)
            mask = _unpack_mask_bits(r.take((grid[0] * grid[1] + 7) // 8), grid)
            n_kept = int(mask.sum())
            payload = np.frombuffer(r.take(n_kept * bh * bw * 4), dtype="<f4")
            tensors[name] = BlockSparseMatrix(
                rows, cols, (bh, bw), mask, payload.reshape(n_kept, bh, bw).copy()
            )
        else:
            raise WeightFormatError(f"tensor {name!r}: bad sparsity flag {sparse}")
    if r.pos != len(r.data):
        raise WeightFormatError("trailing bytes after last tensor")
    return ModelWeights(tensors)
