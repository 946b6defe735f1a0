"""Forward-value oracles for the tensor ops."""

import numpy as np
import pytest

from hyhdr import tensor as T
from hyhdr.errors import NumericError, ShapeError

from conftest import rng


def conv2d_bruteforce(x, w, b, stride=1, padding=None):
    """Direct 6-loop cross-correlation; the independent conv oracle."""
    k = w.shape[0]
    if padding is None:
        padding = (k - 1) // 2
    H, W, Cin = x.shape
    Cout = w.shape[3]
    Ho = (H + 2 * padding - k) // stride + 1
    Wo = (W + 2 * padding - k) // stride + 1
    out = np.zeros((Ho, Wo, Cout), dtype=np.float64)
    for ho in range(Ho):
        for wo in range(Wo):
            for co in range(Cout):
                acc = 0.0
                for i in range(k):
                    for j in range(k):
                        hi = ho * stride + i - padding
                        wi = wo * stride + j - padding
                        if 0 <= hi < H and 0 <= wi < W:
                            for ci in range(Cin):
                                acc += float(x[hi, wi, ci]) * float(w[i, j, ci, co])
                out[ho, wo, co] = acc + float(b[co])
    return out


class TestConv2d:
    def test_zero_input_gives_bias(self):
        x = T.Tensor(np.zeros((5, 5, 2), np.float32))
        w = T.Tensor(rng(0).normal(size=(3, 3, 2, 4)).astype(np.float32))
        b = T.Tensor(np.array([1., 2., 3., 4.], np.float32))
        out = T.conv2d(x, w, b)
        assert np.allclose(out.data, np.broadcast_to(b.data, (5, 5, 4)))

    def test_1x1_scalar_scaling(self):
        x = T.Tensor(np.array([[1., 2.], [3., 4.]], np.float32).reshape(2, 2, 1))
        w = T.Tensor(np.full((1, 1, 1, 1), 2.0, np.float32))
        b = T.Tensor(np.zeros(1, np.float32))
        out = T.conv2d(x, w, b)
        assert np.array_equal(out.data.reshape(2, 2), [[2., 4.], [6., 8.]])

    @pytest.mark.parametrize("stride", [1, 2])
    def test_matches_bruteforce(self, stride):
        g = rng(0)
        x = g.normal(size=(5, 5, 2))
        w = g.normal(size=(3, 3, 2, 3))
        b = g.normal(size=3)
        got = T.conv2d(T.Tensor(x, dtype=np.float64), T.Tensor(w, dtype=np.float64),
                       T.Tensor(b, dtype=np.float64), stride=stride).data
        want = conv2d_bruteforce(x, w, b, stride=stride)
        assert np.allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_bruteforce_random_sizes(self):
        # invariant: matches the nested-loop oracle on maps up to 16x16x4
        for seed in range(5):
            g = rng(seed)
            H, W = g.integers(5, 17), g.integers(5, 17)
            cin, cout = g.integers(1, 5), g.integers(1, 4)
            x = g.normal(size=(H, W, cin)).astype(np.float32)
            w = g.normal(size=(3, 3, cin, cout)).astype(np.float32)
            b = g.normal(size=cout).astype(np.float32)
            got = T.conv2d(T.Tensor(x), T.Tensor(w), T.Tensor(b)).data
            want = conv2d_bruteforce(x, w, b)
            rel = np.abs(got - want) / np.maximum(np.abs(want), 1.0)
            assert rel.max() < 1e-5

    def test_shape_errors(self):
        x = T.Tensor(np.zeros((4, 4, 2), np.float32))
        with pytest.raises(ShapeError):
            T.conv2d(x, T.Tensor(np.zeros((2, 2, 2, 2), np.float32)))  # even k
        with pytest.raises(ShapeError):
            T.conv2d(x, T.Tensor(np.zeros((3, 3, 3, 2), np.float32)))  # Cin mismatch

    def test_nonfinite_input_rejected(self):
        bad = np.zeros((4, 4, 1), np.float32)
        bad[0, 0, 0] = np.nan
        with pytest.raises(NumericError):
            T.Tensor(bad)


class TestSoftmax:
    def test_uniform(self):
        out = T.softmax_lastdim(T.Tensor(np.zeros(3, np.float32))).data
        assert np.allclose(out, 1 / 3)

    def test_logistic_closed_form(self):
        # [x, x+1] -> [1/(1+e), e/(1+e)]
        out = T.softmax_lastdim(T.Tensor(np.array([2.0, 3.0]), dtype=np.float64)).data
        e = np.e
        assert np.allclose(out, [1 / (1 + e), e / (1 + e)], atol=1e-12)
        assert np.allclose(out, [0.26894, 0.73106], atol=1e-5)

    def test_large_values_stable(self):
        out = T.softmax_lastdim(T.Tensor(np.array([1000.0, 0.0], np.float32))).data
        assert np.all(np.isfinite(out))
        assert out[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(10))
    def test_rows_sum_to_one(self, seed):
        x = rng(seed).normal(size=(7, 9, 5)).astype(np.float32) * 10
        y = T.softmax_lastdim(T.Tensor(x)).data
        sums = y.astype(np.float64).sum(axis=-1)
        assert np.abs(sums - 1.0).max() <= 1e-6
        y64 = T.softmax_lastdim(T.Tensor(x, dtype=np.float64)).data
        assert np.abs(y64.sum(axis=-1) - 1.0).max() <= 1e-12


class TestLayerNorm:
    def test_constant_vector_zeroed(self):
        x = T.Tensor(np.full((4, 3), 7.0, np.float32))
        out = T.layer_norm(x, T.Tensor(np.ones(3, np.float32)),
                           T.Tensor(np.zeros(3, np.float32)))
        assert np.allclose(out.data, 0.0)

    def test_two_point_values(self):
        x = T.Tensor(np.array([[1.0, 3.0]]), dtype=np.float64)
        out = T.layer_norm(x, T.Tensor(np.ones(2), dtype=np.float64),
                           T.Tensor(np.zeros(2), dtype=np.float64), eps=1e-15)
        assert np.allclose(out.data, [[-1.0, 1.0]], atol=1e-7)

    def test_affine_override(self):
        x = T.Tensor(rng(0).normal(size=(5, 4)).astype(np.float32))
        out = T.layer_norm(x, T.Tensor(np.zeros(4, np.float32)),
                           T.Tensor(np.full(4, 5.0, np.float32)))
        assert np.allclose(out.data, 5.0)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            T.layer_norm(T.Tensor(np.zeros((2, 3), np.float32)),
                         T.Tensor(np.ones(4, np.float32)),
                         T.Tensor(np.zeros(4, np.float32)))


class TestBilinear:
    def test_integer_grid_exact(self):
        x = rng(1).normal(size=(6, 7, 3)).astype(np.float32)
        pts = np.array([[i, j] for i in range(6) for j in range(7)], np.float32)
        out = T.bilinear_sample(T.Tensor(x), T.Tensor(pts)).data
        assert np.array_equal(out, x.reshape(-1, 3))

    def test_midpoint_average(self):
        x = np.zeros((2, 1, 1), np.float32)
        x[0, 0, 0], x[1, 0, 0] = 2.0, 4.0
        out = T.bilinear_sample(T.Tensor(x), T.Tensor(np.array([[0.5, 0.0]], np.float32)))
        assert out.data[0, 0] == pytest.approx(3.0)

    def test_border_clamp(self):
        x = rng(2).normal(size=(4, 4, 2)).astype(np.float32)
        out = T.bilinear_sample(T.Tensor(x), T.Tensor(np.array([[-5., -5.]], np.float32)))
        assert np.array_equal(out.data[0], x[0, 0])


class TestPlumbing:
    def test_matmul_matches_numpy(self):
        g = rng(3)
        a = g.normal(size=(4, 5)).astype(np.float32)
        b = g.normal(size=(5, 6)).astype(np.float32)
        assert np.allclose(T.matmul(T.Tensor(a), T.Tensor(b)).data, a @ b, atol=1e-6)
        a3 = g.normal(size=(2, 4, 5)).astype(np.float32)
        assert np.allclose(T.matmul(T.Tensor(a3), T.Tensor(b)).data, a3 @ b, atol=1e-6)

    def test_concat_roundtrip(self):
        g = rng(4)
        parts = [g.normal(size=(3, n)).astype(np.float32) for n in (2, 3, 4)]
        out = T.concat([T.Tensor(p) for p in parts], axis=1)
        assert np.array_equal(out.data, np.concatenate(parts, axis=1))

    def test_pad2d_reflect_matches_numpy(self):
        x = rng(5).normal(size=(4, 5, 2)).astype(np.float32)
        out = T.pad2d(T.Tensor(x), 1, 2, 0, 3, mode="reflect").data
        want = np.pad(x, ((1, 2), (0, 3), (0, 0)), mode="reflect")
        assert np.array_equal(out, want)

    def test_avg_pool2(self):
        x = np.arange(16, dtype=np.float32).reshape(4, 4, 1)
        out = T.avg_pool2(T.Tensor(x)).data
        want = x.reshape(2, 2, 2, 2, 1).mean(axis=(1, 3))
        assert np.array_equal(out, want)

    def test_clamp_and_abs(self):
        x = T.Tensor(np.array([-2.0, 0.5, 3.0], np.float32))
        assert np.array_equal(T.clamp(x, 0.0, 1.0).data, [0.0, 0.5, 1.0])
        assert np.array_equal(T.abs_(x).data, [2.0, 0.5, 3.0])


def test_determinism_same_seed_bit_identical():
    def make():
        g = rng(42)
        x = T.Tensor(g.normal(size=(8, 8, 3)).astype(np.float32))
        w = T.Tensor(g.normal(size=(3, 3, 3, 4)).astype(np.float32))
        return T.conv2d(x, w, T.Tensor(np.zeros(4, np.float32))).data

    a, b = make(), make()
    assert a.tobytes() == b.tobytes()


def test_tape_requires_scalar_loss():
    x = T.Tensor(np.ones((2, 2), np.float32), requires_grad=True)
    with T.GradTape() as tape:
        y = T.mul(x, x)
        with pytest.raises(ShapeError):
            tape.backward(y)
