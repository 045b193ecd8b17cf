import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fwgan.tensor_core import (
    BlockSparseMatrix,
    DenseMatrix,
    GruParams,
    activation,
    gemv,
    glu,
    gru_step,
    sigmoid,
)


def gemv_oracle(m, x):
    """Naive double-precision scalar loop."""
    rows, cols = m.shape
    out = np.zeros(rows)
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += float(m[i, j]) * float(x[j])
        out[i] = acc
    return out


class TestGemv:
    def test_identity(self):
        m = DenseMatrix(np.eye(4))
        assert np.array_equal(gemv(m, [1, 2, 3, 4]), np.array([1, 2, 3, 4], np.float32))

    def test_zero(self):
        m = DenseMatrix(np.zeros((3, 3)))
        assert np.array_equal(gemv(m, [5, -1, 2]), np.zeros(3, np.float32))

    def test_hand_computed(self):
        m = DenseMatrix([[1, 2], [3, 4]])
        assert np.array_equal(gemv(m, [1, 1]), np.array([3, 7], np.float32))

    def test_dimension_mismatch_message(self):
        m = DenseMatrix(np.zeros((3, 4)))
        with pytest.raises(ValueError, match="3x4"):
            gemv(m, np.zeros(5))

    def test_matches_scalar_loop_16x16(self):
        rng = np.random.default_rng(0)
        m = rng.normal(size=(16, 16))
        x = rng.normal(size=16)
        got = gemv(DenseMatrix(m), x)
        want = gemv_oracle(m.astype(np.float32), x.astype(np.float32))
        assert np.allclose(got, want, rtol=1e-5)

    @given(st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_sparse_equals_densified(self, seed):
        rng = np.random.default_rng(seed)
        rows, cols = 32, int(rng.integers(1, 12))
        data = rng.normal(size=(rows, cols)).astype(np.float32)
        mask = rng.random((2, cols)) < 0.5
        sparse = BlockSparseMatrix.from_dense(data, mask, (16, 1))
        dense = DenseMatrix(sparse.to_dense())
        x = rng.normal(size=cols)
        assert np.array_equal(gemv(sparse, x), gemv(dense, x))

    def test_full_density_sparse_equals_dense(self):
        rng = np.random.default_rng(3)
        data = rng.normal(size=(16, 5)).astype(np.float32)
        sparse = BlockSparseMatrix.from_dense(data, np.ones((1, 5), bool), (16, 1))
        assert sparse.density == 1.0
        x = rng.normal(size=5)
        assert np.array_equal(gemv(sparse, x), gemv(DenseMatrix(data), x))


class TestBlockSparse:
    def test_density_accounting(self):
        data = np.arange(64, dtype=np.float32).reshape(16, 4)
        mask = np.array([[True, False, True, False]])
        m = BlockSparseMatrix.from_dense(data, mask, (16, 1))
        assert m.density == 0.5
        assert m.n_active == 32
        assert m.n_params == 64

    def test_masked_blocks_are_zero(self):
        data = np.ones((16, 2), dtype=np.float32)
        m = BlockSparseMatrix.from_dense(data, np.array([[True, False]]), (16, 1))
        d = m.to_dense()
        assert np.all(d[:, 0] == 1.0)
        assert np.all(d[:, 1] == 0.0)

    def test_bad_block_shape_rejected(self):
        with pytest.raises(ValueError, match="divisible"):
            BlockSparseMatrix.from_dense(np.ones((15, 2)), np.ones((1, 2), bool))


class TestGlu:
    def test_zero_vector(self):
        gate = DenseMatrix(np.random.default_rng(0).normal(size=(4, 4)))
        assert np.array_equal(glu(np.zeros(4), gate), np.zeros(4, np.float32))

    def test_zero_gate_halves(self):
        gate = DenseMatrix(np.zeros((2, 2)))
        assert np.array_equal(glu([2.0, -4.0], gate), np.array([1.0, -2.0], np.float32))

    @given(st.integers(0, 500))
    @settings(max_examples=25, deadline=None)
    def test_zero_gate_is_half_x(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=8).astype(np.float32)
        gate = DenseMatrix(np.zeros((8, 8)))
        assert np.allclose(glu(x, gate), 0.5 * x)

    def test_elementwise_oracle(self):
        rng = np.random.default_rng(42)
        x = rng.normal(size=8).astype(np.float32)
        g = rng.normal(size=(8, 8)).astype(np.float32)
        got = glu(x, DenseMatrix(g))
        want = np.array(
            [
                float(x[i]) / (1.0 + np.exp(-gemv_oracle(g, x)[i]))
                for i in range(8)
            ]
        )
        assert np.allclose(got, want, rtol=1e-5, atol=1e-7)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="gate"):
            glu(np.zeros(3), DenseMatrix(np.zeros((4, 4))))


def gru_oracle(p, h, x):
    """Closed-form float64 scalar GRU update."""
    def mv(m, v):
        return gemv_oracle(np.asarray(m.data, np.float64), np.asarray(v, np.float64))

    z = 1.0 / (1.0 + np.exp(-(mv(p.w_update, x) + mv(p.u_update, h))))
    r = 1.0 / (1.0 + np.exp(-(mv(p.w_reset, x) + mv(p.u_reset, h))))
    c = np.tanh(mv(p.w_candidate, x) + mv(p.u_candidate, r * np.asarray(h, float)))
    return (1.0 - z) * np.asarray(h, float) + z * c


def make_gru(hidden, input_dim, seed=None):
    if seed is None:
        mats = [np.zeros((hidden, input_dim))] * 3 + [np.zeros((hidden, hidden))] * 3
    else:
        rng = np.random.default_rng(seed)
        mats = [rng.normal(size=(hidden, input_dim)) for _ in range(3)] + [
            rng.normal(size=(hidden, hidden)) for _ in range(3)
        ]
    return GruParams(*[DenseMatrix(m) for m in mats])


class TestGruStep:
    def test_zero_weights_halve_state(self):
        p = make_gru(1, 1)
        got = gru_step(p, np.array([0.8]), np.array([0.3]))
        assert np.allclose(got, [0.4])

    def test_zero_state_zero_input(self):
        p = make_gru(3, 2, seed=1)
        got = gru_step(p, np.zeros(3), np.zeros(2))
        assert np.array_equal(got, np.zeros(3, np.float32))

    def test_matches_scalar_oracle(self):
        p = make_gru(2, 2, seed=5)
        rng = np.random.default_rng(9)
        h = rng.normal(size=2).astype(np.float32)
        x = rng.normal(size=2).astype(np.float32)
        assert np.allclose(gru_step(p, h, x), gru_oracle(p, h, x), rtol=1e-5, atol=1e-6)

    @given(st.integers(0, 500))
    @settings(max_examples=30, deadline=None)
    def test_contraction_toward_unit_box(self, seed):
        rng = np.random.default_rng(seed)
        p = make_gru(4, 3, seed=seed)
        h = rng.uniform(-2.0, 2.0, size=4).astype(np.float32)
        x = rng.uniform(-3.0, 3.0, size=3).astype(np.float32)
        h2 = gru_step(p, h, x)
        assert np.all(np.isfinite(h2))
        assert np.all(np.abs(h2) <= np.maximum(np.abs(h), 1.0) + 1e-6)

    def test_rejects_non_finite(self):
        p = make_gru(2, 2, seed=0)
        with pytest.raises(ValueError, match="non-finite"):
            gru_step(p, np.array([np.nan, 0.0]), np.zeros(2))

    def test_rejects_bad_dims(self):
        p = make_gru(2, 2, seed=0)
        with pytest.raises(ValueError):
            gru_step(p, np.zeros(3), np.zeros(2))


class TestActivations:
    def test_sigmoid_at_zero(self):
        assert activation("sigmoid", 0.0) == 0.5

    def test_tanh_odd(self):
        a = np.linspace(0.1, 3.0, 7)
        assert np.allclose(activation("tanh", -a), -activation("tanh", a))

    def test_leaky_relu(self):
        assert activation("leaky_relu", -1.0) == pytest.approx(-0.2)
        assert activation("leaky_relu", 2.5) == 2.5
        assert activation("leaky_relu", -2.0, slope=0.1) == pytest.approx(-0.2)

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown activation"):
            activation("relu6", 1.0)

    def test_sigmoid_function(self):
        assert sigmoid(0.0) == 0.5
