"""Tests for the differentiable tensor operations."""

from contextlib import nullcontext as does_not_raise

import numpy as np
import pytest

from pgl.exceptions import ShapeError
from pgl.tensor.core import Tensor, backward
from pgl.tensor.ops import (
    add,
    batchnorm3d,
    concat,
    conv3d,
    conv_transpose3d,
    flip,
    global_avg_pool,
    l2_normalize,
    relu,
    resize_grid,
    softmax,
    trilinear_sample,
    upsample,
)
from pgl.testing.helpers import TestGradients

SEEDS = range(20)


def _away_from_zero(values, margin=0.05):
    return np.sign(values) * (np.abs(values) + margin)


class TestConv3d(TestGradients):
    tolerance = 1e-6

    def test_identity_kernel(self):
        x = Tensor(self._rng.standard_normal((1, 1, 3, 4, 5)))
        weight = Tensor(np.ones((1, 1, 1, 1, 1)))
        self.assert_close(conv3d(x, weight), x, atol=0)

    def test_all_ones_kernel(self):
        x = Tensor(np.ones((1, 1, 5, 5, 5)))
        weight = Tensor(np.ones((1, 1, 3, 3, 3)))
        out = conv3d(x, weight)
        assert out.shape == (1, 1, 3, 3, 3)
        assert np.all(out.data == 27.0)

    @pytest.mark.parametrize(
        "size, kernel, stride, padding, dilation, expected",
        [
            [(8, 32, 32), 3, 2, 1, 1, (4, 16, 16)],
            [(8, 32, 32), 3, (1, 2, 2), 1, 1, (8, 16, 16)],
            [(4, 4, 4), 3, 1, 4, 4, (4, 4, 4)],
            [(5, 7, 9), 2, 2, 0, 1, (2, 3, 4)],
        ],
    )
    def test_output_shape(self, size, kernel, stride, padding, dilation, expected):
        x = Tensor(np.zeros((1, 2, *size)))
        weight = Tensor(np.zeros((3, 2, kernel, kernel, kernel)))
        out = conv3d(x, weight, stride=stride, padding=padding, dilation=dilation)
        assert out.shape == (1, 3, *expected)

    @pytest.mark.parametrize(
        "weight_shape, groups, expectation",
        [
            [(4, 2, 1, 1, 1), 1, does_not_raise()],
            [(4, 3, 1, 1, 1), 1, pytest.raises(ShapeError, match="axis 1")],
            [(2, 1, 3, 3, 3), 2, does_not_raise()],
        ],
    )
    def test_channel_mismatch(self, weight_shape, groups, expectation):
        x = Tensor(np.zeros((1, 2, 4, 4, 4)))
        with expectation:
            conv3d(x, Tensor(np.zeros(weight_shape)), padding=1, groups=groups)

    def test_too_small_input_names_axis(self):
        x = Tensor(np.zeros((1, 1, 2, 8, 8)))
        with pytest.raises(ShapeError, match="depth"):
            conv3d(x, Tensor(np.zeros((1, 1, 3, 3, 3))))

    @pytest.mark.parametrize("seed", SEEDS)
    def test_gradients(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((1, 2, 4, 5, 5))
        weight = rng.standard_normal((3, 2, 3, 3, 3))
        bias = rng.standard_normal(3)
        self.assert_gradients_match(
            lambda x, w, b: conv3d(x, w, b, stride=(1, 2, 1), padding=1, dilation=(1, 1, 2)),
            [x, weight, bias],
        )

    @pytest.mark.parametrize("seed", range(3))
    def test_grouped_gradients(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((2, 4, 3, 4, 4))
        weight = rng.standard_normal((4, 1, 3, 3, 3))
        self.assert_gradients_match(
            lambda x, w: conv3d(x, w, padding=2, dilation=2, groups=4), [x, weight]
        )


class TestConvTranspose3d(TestGradients):
    tolerance = 1e-6

    def test_upsampling_shape(self):
        x = Tensor(np.zeros((2, 4, 2, 4, 4)))
        weight = Tensor(np.zeros((4, 3, 1, 2, 2)))
        out = conv_transpose3d(x, weight, stride=(1, 2, 2))
        assert out.shape == (2, 3, 2, 8, 8)

    def test_adjoint_of_convolution(self):
        # <conv(x), y> == <x, conv_transpose(y)> for the same weight
        x = self._rng.standard_normal((1, 2, 4, 6, 6))
        weight = self._rng.standard_normal((3, 2, 2, 2, 2))
        y = self._rng.standard_normal((1, 3, 2, 3, 3))
        forward = conv3d(Tensor(x), Tensor(weight), stride=2).data
        adjoint = conv_transpose3d(Tensor(y), Tensor(weight), stride=2).data
        assert np.isclose((forward * y).sum(), (x * adjoint).sum(), rtol=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_gradients(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((1, 3, 2, 3, 3))
        weight = rng.standard_normal((3, 2, 2, 2, 2))
        bias = rng.standard_normal(2)
        self.assert_gradients_match(
            lambda x, w, b: conv_transpose3d(x, w, b, stride=2), [x, weight, bias]
        )


class TestBatchNorm3d(TestGradients):
    tolerance = 1e-4

    @staticmethod
    def _stats(channels):
        return np.zeros(channels), np.ones(channels)

    def test_training_normalizes(self):
        x = Tensor(self._rng.normal(3.0, 2.0, (2, 3, 4, 4, 4)))
        out = batchnorm3d(x, Tensor(np.ones(3)), Tensor(np.zeros(3)), *self._stats(3))
        assert np.allclose(out.data.mean(axis=(0, 2, 3, 4)), 0, atol=1e-5)
        assert np.allclose(out.data.var(axis=(0, 2, 3, 4)), 1, atol=1e-4)

    def test_scale_collapse(self):
        x = Tensor(self._rng.standard_normal((2, 2, 2, 2, 2)))
        out = batchnorm3d(x, Tensor(np.zeros(2)), Tensor(np.full(2, 5.0)), *self._stats(2))
        assert np.all(out.data == 5.0)

    def test_running_statistics_update(self):
        x = self._rng.normal(2.0, 1.0, (2, 1, 3, 3, 3))
        running_mean, running_var = self._stats(1)
        batchnorm3d(
            Tensor(x), Tensor(np.ones(1)), Tensor(np.zeros(1)), running_mean, running_var,
            momentum=0.5,
        )
        assert np.isclose(running_mean[0], 0.5 * x.mean())
        assert np.isclose(running_var[0], 0.5 + 0.5 * x.var(ddof=1))

    def test_eval_uses_running_statistics(self):
        x = Tensor(np.full((1, 1, 1, 1, 1), 3.0))
        out = batchnorm3d(
            x, Tensor(np.ones(1)), Tensor(np.zeros(1)), np.array([1.0]), np.array([4.0]),
            eps=1e-12, training=False,
        )
        assert np.isclose(out.item(), 1.0)

    def test_single_value_per_channel(self):
        x = Tensor(np.ones((1, 2, 1, 1, 1)))
        with pytest.raises(ShapeError):
            batchnorm3d(x, Tensor(np.ones(2)), Tensor(np.zeros(2)), *self._stats(2))

    @pytest.mark.parametrize("seed", SEEDS)
    def test_gradients(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((2, 3, 2, 3, 3))
        gamma = rng.standard_normal(3)
        beta = rng.standard_normal(3)
        stats = self._stats(3)
        self.assert_gradients_match(
            lambda x, g, b: batchnorm3d(x, g, b, *stats), [x, gamma, beta]
        )

    def test_eval_gradients(self):
        x = self._rng.standard_normal((1, 2, 2, 2, 2))
        stats = (np.array([0.3, -0.1]), np.array([2.0, 0.5]))
        self.assert_gradients_match(
            lambda x, g, b: batchnorm3d(x, g, b, *stats, training=False),
            [x, np.array([1.5, -0.5]), np.array([0.1, 0.2])],
        )


class TestElementwise(TestGradients):
    def test_relu_values(self):
        out = relu(Tensor(np.array([-2.0, 0.0, 3.5])))
        assert out.data.tolist() == [0.0, 0.0, 3.5]

    def test_relu_subgradient(self):
        x = Tensor(np.array([-1.0, 0.0, 2.0]), requires_grad=True)
        backward((relu(x) * Tensor(np.array([5.0, 5.0, 5.0]))).sum())
        assert x.grad.tolist() == [0.0, 0.0, 5.0]

    def test_relu_keeps_non_finite_values(self):
        out = relu(Tensor(np.array([np.nan, -np.inf, np.inf, 1.0], dtype=np.float32)))
        assert np.isnan(out.data[0])
        assert out.data[1:].tolist() == [0.0, np.inf, 1.0]
        assert out.dtype == np.float32

    def test_add_identity(self):
        x = Tensor(self._rng.standard_normal((2, 3)))
        assert np.array_equal(add(x, Tensor(np.zeros((2, 3)))).data, x.data)

    def test_add_shape_mismatch(self):
        with pytest.raises(ShapeError, match="axis 1"):
            add(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 4))))

    @pytest.mark.parametrize("seed", SEEDS)
    def test_relu_gradients(self, seed):
        x = _away_from_zero(np.random.default_rng(seed).standard_normal((2, 3, 2, 2, 2)))
        self.assert_gradients_match(relu, [x])

    @pytest.mark.parametrize("seed", range(5))
    def test_softmax_gradients(self, seed):
        x = np.random.default_rng(seed).standard_normal((2, 3, 2, 2, 1))
        self.assert_gradients_match(softmax, [x])

    def test_flip_and_concat_gradients(self):
        a = self._rng.standard_normal((1, 2, 2, 3, 2))
        b = self._rng.standard_normal((1, 1, 2, 3, 2))
        self.assert_gradients_match(lambda a, b: flip(concat([a, b]), (2, 4)), [a, b])

    def test_global_pool_gradients(self):
        x = self._rng.standard_normal((2, 3, 2, 2, 2))
        self.assert_gradients_match(global_avg_pool, [x])


class TestTrilinearSample(TestGradients):
    tolerance = 1e-6

    @staticmethod
    def _ramp(shape):
        d, h, w = np.meshgrid(*(np.arange(n, dtype=np.float64) for n in shape), indexing="ij")
        return (d + 2 * h + 3 * w)[None, None]

    def test_grid_point_is_exact(self):
        x = self._rng.standard_normal((1, 2, 4, 5, 3))
        out = trilinear_sample(Tensor(x), np.array([[2.0, 3.0, 1.0]]))
        assert np.array_equal(out.data[0, :, 0], x[0, :, 2, 3, 1])

    def test_linear_field_is_exact(self):
        out = trilinear_sample(Tensor(self._ramp((4, 4, 4))), np.array([[1.5, 0.25, 2.75]]))
        assert np.isclose(out.item(), 10.25)

    def test_border_is_clamped(self):
        x = self._ramp((3, 3, 3))
        out = trilinear_sample(Tensor(x), np.array([[-1.0, 5.0, 1.0]]))
        assert np.isclose(out.item(), x[0, 0, 0, 2, 1])

    def test_empty_points(self):
        out = trilinear_sample(Tensor(np.ones((2, 3, 2, 2, 2))), np.zeros((0, 3)))
        assert out.shape == (2, 3, 0)

    def test_per_batch_points(self):
        x = np.stack([self._ramp((3, 3, 3))[0], 2 * self._ramp((3, 3, 3))[0]])
        points = np.array([[[1.0, 1.0, 1.0]], [[0.5, 0.0, 0.0]]])
        out = trilinear_sample(Tensor(x), points)
        assert out.data[:, 0, 0].tolist() == [6.0, 1.0]

    @pytest.mark.parametrize("seed", SEEDS)
    def test_gradients(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((2, 2, 3, 4, 3))
        points = rng.uniform(-0.5, 3.5, size=(7, 3))
        self.assert_gradients_match(lambda x: trilinear_sample(x, points), [x])

    def test_upsample_from_single_voxel_broadcasts(self):
        x = Tensor(np.array([1.0, -2.0]).reshape(1, 2, 1, 1, 1))
        out = upsample(x, (2, 3, 3))
        assert np.all(out.data[0, 0] == 1.0) and np.all(out.data[0, 1] == -2.0)

    def test_resize_grid_identity(self):
        points = resize_grid((2, 3, 4), (2, 3, 4))
        assert np.array_equal(points[5], [0.0, 1.0, 1.0])


class TestL2Normalize(TestGradients):
    tolerance = 1e-6

    def test_unit_vector(self):
        x = Tensor(np.array([3.0, 4.0]).reshape(1, 2, 1, 1, 1))
        assert np.allclose(l2_normalize(x).data.ravel(), [0.6, 0.8])

    def test_zero_vector(self):
        x = Tensor(np.zeros((1, 3, 1, 1, 1)))
        assert np.all(l2_normalize(x, eps=1e-12).data == 0)

    def test_unit_norm(self):
        x = Tensor(self._rng.standard_normal((2, 4, 2, 3, 3)))
        norms = np.sqrt((l2_normalize(x).data ** 2).sum(axis=1))
        assert np.allclose(norms, 1, atol=1e-6)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_gradients(self, seed):
        x = np.random.default_rng(seed).standard_normal((2, 3, 2, 2, 2))
        self.assert_gradients_match(l2_normalize, [x])
