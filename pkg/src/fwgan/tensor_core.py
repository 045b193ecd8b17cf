"""Dense and block-sparse matrices, GRU step and activation primitives.

Everything downstream (encoder, GRU stack, framewise convolutions) is built
from bias-free matrix-vector products, so this module is deliberately small:
two matrix containers, `gemv`, the gated linear unit, one GRU update and the
three activations used by the model.

Model arithmetic is float32; verification oracles in the test suite rerun
the same formulas in float64 scalar loops.
"""

from dataclasses import dataclass, field

import numpy as np

BLOCK_SHAPE_DEFAULT = (16, 1)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x)))


def leaky_relu(x, slope=0.2):
    x = np.asarray(x)
    return np.where(x >= 0, x, slope * x)


def activation(name, x, slope=0.2):
    """Apply a named activation elementwise.

    Supported names: ``tanh``, ``sigmoid``, ``leaky_relu`` (0.2 slope
    default).
    """
    if name == "tanh":
        return np.tanh(x)
    if name == "sigmoid":
        return sigmoid(x)
    if name == "leaky_relu":
        return leaky_relu(x, slope)
    raise ValueError(f"unknown activation {name!r}")


def _as_f32_matrix(data):
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"matrix data must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix data contains non-finite entries")
    return np.ascontiguousarray(arr)


@dataclass
class DenseMatrix:
    """Row-major float32 matrix. Layers are bias-free, so this is the only
    dense parameter container in the model."""

    data: np.ndarray

    def __post_init__(self):
        self.data = _as_f32_matrix(self.data)

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    @property
    def n_params(self):
        return self.data.size

    @property
    def n_active(self):
        return self.data.size


@dataclass
class BlockSparseMatrix:
    """Block-sparse float32 matrix.

    `mask` is a boolean grid over blocks; `values` packs the kept blocks in
    row-major block order, each block itself row-major. Masked-out blocks
    contribute exactly zero to products.
    """

    rows: int
    cols: int
    block_shape: tuple
    mask: np.ndarray
    values: np.ndarray
    _dense_cache: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        bh, bw = self.block_shape
        if self.rows % bh or self.cols % bw:
            raise ValueError(
                f"{self.rows}x{self.cols} not divisible by block {self.block_shape}"
            )
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != (self.rows // bh, self.cols // bw):
            raise ValueError(
                f"mask shape {self.mask.shape} does not match block grid "
                f"{(self.rows // bh, self.cols // bw)}"
            )
        self.values = np.asarray(self.values, dtype=np.float32)
        n_kept = int(self.mask.sum())
        if self.values.shape != (n_kept, bh, bw):
            raise ValueError(
                f"values shape {self.values.shape}, expected {(n_kept, bh, bw)}"
            )

    @classmethod
    def from_dense(cls, data, mask, block_shape=BLOCK_SHAPE_DEFAULT):
        """Pack the blocks of `data` selected by `mask`; everything else is
        dropped (treated as zero)."""
        data = _as_f32_matrix(data)
        rows, cols = data.shape
        bh, bw = block_shape
        if rows % bh or cols % bw:
            raise ValueError(f"{rows}x{cols} not divisible by block {block_shape}")
        mask = np.asarray(mask, dtype=bool)
        blocks = data.reshape(rows // bh, bh, cols // bw, bw).transpose(0, 2, 1, 3)
        values = blocks[mask]
        return cls(rows, cols, tuple(block_shape), mask, values)

    def to_dense(self):
        """Zero-filled dense copy; cached, since products run through it."""
        if self._dense_cache is None:
            bh, bw = self.block_shape
            blocks = np.zeros(
                (self.rows // bh, self.cols // bw, bh, bw), dtype=np.float32
            )
            blocks[self.mask] = self.values
            self._dense_cache = np.ascontiguousarray(
                blocks.transpose(0, 2, 1, 3).reshape(self.rows, self.cols)
            )
        return self._dense_cache

    @property
    def density(self):
        return self.mask.sum() / self.mask.size

    @property
    def n_params(self):
        return self.rows * self.cols

    @property
    def n_active(self):
        bh, bw = self.block_shape
        return int(self.mask.sum()) * bh * bw


def _dense_of(m):
    if isinstance(m, DenseMatrix):
        return m.data
    if isinstance(m, BlockSparseMatrix):
        return m.to_dense()
    raise TypeError(f"expected DenseMatrix or BlockSparseMatrix, got {type(m)!r}")


def gemv(m, x):
    """y = m @ x in float32.

    The block-sparse path multiplies through the zero-filled dense copy, so
    sparse and dense products agree bit-exactly by construction.
    """
    data = _dense_of(m)
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 1 or x.shape[0] != data.shape[1]:
        raise ValueError(
            f"gemv: matrix is {data.shape[0]}x{data.shape[1]}, "
            f"vector has shape {x.shape}"
        )
    return data @ x


def glu(x, gate):
    """Gated linear unit: x * sigmoid(gate @ x).

    The gate matrix is square (same output dimension as x).
    """
    x = np.asarray(x, dtype=np.float32)
    data = _dense_of(gate)
    if data.shape != (x.shape[0], x.shape[0]):
        raise ValueError(
            f"glu: gate is {data.shape[0]}x{data.shape[1]}, "
            f"expected {x.shape[0]}x{x.shape[0]}"
        )
    return (x * sigmoid(data @ x)).astype(np.float32)


@dataclass
class GruParams:
    """Bias-free GRU parameters (Cho-style gating, no bias anywhere)."""

    w_update: object
    w_reset: object
    w_candidate: object
    u_update: object
    u_reset: object
    u_candidate: object

    def __post_init__(self):
        h = _dense_of(self.u_update).shape[0]
        d = _dense_of(self.w_update).shape[1]
        for name in ("w_update", "w_reset", "w_candidate"):
            m = _dense_of(getattr(self, name))
            if m.shape != (h, d):
                raise ValueError(f"{name} has shape {m.shape}, expected {(h, d)}")
        for name in ("u_update", "u_reset", "u_candidate"):
            m = _dense_of(getattr(self, name))
            if m.shape != (h, h):
                raise ValueError(f"{name} has shape {m.shape}, expected {(h, h)}")

    @property
    def input_dim(self):
        return _dense_of(self.w_update).shape[1]

    @property
    def hidden_dim(self):
        return _dense_of(self.u_update).shape[0]


def gru_step(p, h, x):
    """One bias-free GRU update.

    z = sigmoid(Wz x + Uz h), r = sigmoid(Wr x + Ur h),
    c = tanh(Wc x + Uc (r*h)), h' = (1-z)*h + z*c.
    """
    h = np.asarray(h, dtype=np.float32)
    x = np.asarray(x, dtype=np.float32)
    if h.shape != (p.hidden_dim,):
        raise ValueError(f"hidden state has shape {h.shape}, expected ({p.hidden_dim},)")
    if x.shape != (p.input_dim,):
        raise ValueError(f"input has shape {x.shape}, expected ({p.input_dim},)")
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(x))):
        raise ValueError("gru_step: non-finite input")
    z = sigmoid(gemv(p.w_update, x) + gemv(p.u_update, h))
    r = sigmoid(gemv(p.w_reset, x) + gemv(p.u_reset, h))
    c = np.tanh(gemv(p.w_candidate, x) + gemv(p.u_candidate, (r * h).astype(np.float32)))
    return ((1.0 - z) * h + z * c).astype(np.float32)
