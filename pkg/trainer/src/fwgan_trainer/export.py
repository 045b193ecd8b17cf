"""Checkpoint export in the engine's weight-file format.

Writes the binary layout directly (magic "FWGN", version 1, name-sorted
float32 tensors, trailing CRC-32) so the trainer has no import-time
dependency on the engine package. Only dense tensors are written; pruning
is the engine's `sparsify` command's job.
"""

import os
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

MAGIC = b"FWGN"
VERSION = 1


def _encode(tensors):
    parts = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(tensors))]
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        if arr.ndim != 2:
            raise ValueError(f"{name}: expected a 2-D tensor, got shape {arr.shape}")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<BB", 0, 2))  # float32, rank 2
        parts.append(struct.pack("<II", arr.shape[0], arr.shape[1]))
        parts.append(struct.pack("<B", 0))  # dense
        parts.append(arr.tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def export(model, path):
    """Write a generator checkpoint; atomic (write to a temp file in the
    same directory, then rename)."""
    path = Path(path)
    payload = _encode(model.export_tensors())
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
