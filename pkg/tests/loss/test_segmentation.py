"""Tests for the Dice and cross-entropy objectives."""

import math

import numpy as np
import pytest

from pgl.exceptions import ConfigurationError, ShapeError
from pgl.loss.config import LossConfig
from pgl.loss.segmentation import dice_ce_binary, dice_ce_multiclass, one_hot
from pgl.tensor.core import Tensor
from pgl.tensor.ops import sigmoid, softmax
from pgl.testing.helpers import TestGradients

SMOOTH = 1e-5
CLAMPED_LOG_COST = -math.log(1e-7)


def test_one_hot():
    labels = np.array([[[[0, 2], [1, 1]]]])
    indicators = one_hot(labels, 3)
    assert indicators.shape == (1, 3, 1, 2, 2)
    assert indicators[0, :, 0, 0, 1].tolist() == [0, 0, 1]
    assert np.all(indicators.sum(axis=1) == 1)


@pytest.mark.parametrize("value", [-1, 3])
def test_one_hot_out_of_range(value):
    with pytest.raises(ConfigurationError):
        one_hot(np.array([[[[0, value]]]]), 3)


class TestDiceCeBinary(TestGradients):
    def test_perfect_prediction(self):
        gt = np.zeros((1, 1, 2, 4, 4))
        gt[0, 0, 1, :2, :3] = 1
        k, voxels = gt.sum(), gt.size
        loss = dice_ce_binary(Tensor(gt.copy()), gt, SMOOTH).item()
        assert loss == pytest.approx(1 - 2 * k / (2 * k + SMOOTH * voxels), abs=1e-12)
        assert loss < SMOOTH * voxels

    def test_half_overlap(self):
        gt = np.zeros((1, 1, 1, 1, 8))
        pred = np.zeros((1, 1, 1, 1, 8))
        gt[..., :4] = 1
        pred[..., 2:6] = 1
        voxels = gt.size
        dice = 1 - 4 / (8 + SMOOTH * voxels)
        cross_entropy = 4 * CLAMPED_LOG_COST / voxels
        loss = dice_ce_binary(Tensor(pred), gt, SMOOTH).item()
        assert loss == pytest.approx(dice + cross_entropy, rel=1e-9)
        assert dice == pytest.approx(0.5, abs=1e-4)

    def test_empty_foreground(self):
        empty = np.zeros((1, 1, 2, 2, 2))
        assert dice_ce_binary(Tensor(empty), empty, SMOOTH).item() == pytest.approx(1)

    @pytest.mark.parametrize("seed", range(20))
    def test_gradients(self, seed):
        rng = np.random.default_rng(seed)
        logits = rng.uniform(-2.5, 2.5, size=(2, 1, 1, 2, 3))
        gt = (rng.random((2, 1, 1, 2, 3)) < 0.5).astype(float)
        self.assert_gradients_match(lambda x: dice_ce_binary(sigmoid(x), gt, SMOOTH), [logits])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            dice_ce_binary(Tensor(np.zeros((1, 1, 2, 2, 2))), np.zeros((1, 1, 2, 2, 3)))


class TestDiceCeMulticlass(TestGradients):
    def test_perfect_prediction(self):
        labels = np.array([[[[0, 1, 2, 2], [1, 0, 0, 2]]]])
        gt = one_hot(labels, 3, dtype=np.float64)
        loss = dice_ce_multiclass(Tensor(gt.copy()), gt, SMOOTH, 3).item()
        voxels = labels.size
        expected = np.mean(
            [1 - 2 * k / (2 * k + SMOOTH * voxels) for k in gt.sum(axis=(0, 2, 3, 4))]
        )
        assert loss == pytest.approx(expected, abs=1e-12)
        assert loss < 1e-4

    def test_uniform_prediction(self):
        labels = np.array([[[[0, 1], [1, 0]]]])
        gt = one_hot(labels, 2, dtype=np.float64)
        pred = np.full(gt.shape, 0.5)
        loss = dice_ce_multiclass(Tensor(pred), gt, SMOOTH, 2).item()
        # The class-summed cross-entropy is log 2; averaging over two classes halves it
        expected = 1 - 0.5 / (1 + SMOOTH) + math.log(2) / 2
        assert loss == pytest.approx(expected, rel=1e-9)

    def test_moving_mass_to_the_right_class(self):
        gt = one_hot(np.array([[[[0, 1]]]]), 2, dtype=np.float64)
        losses = []
        for right in np.linspace(0.05, 0.95, 10):
            pred = np.empty(gt.shape)
            pred[0, :, 0, 0, 0] = [right, 1 - right]
            pred[0, :, 0, 0, 1] = [1 - right, right]
            losses.append(dice_ce_multiclass(Tensor(pred), gt, SMOOTH).item())
        assert np.all(np.diff(losses) < 0)

    @pytest.mark.parametrize("seed", range(20))
    def test_gradients(self, seed):
        rng = np.random.default_rng(seed)
        logits = rng.standard_normal((1, 3, 1, 2, 3))
        gt = one_hot(rng.integers(0, 3, size=(1, 1, 2, 3)), 3, dtype=np.float64)
        self.assert_gradients_match(
            lambda x: dice_ce_multiclass(softmax(x), gt, SMOOTH, 3), [logits]
        )

    def test_class_count_mismatch(self):
        gt = one_hot(np.zeros((1, 1, 2, 2), dtype=int), 2)
        with pytest.raises(ShapeError):
            dice_ce_multiclass(Tensor(gt), gt, SMOOTH, num_classes=3)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"eps": 0},
        {"smooth": -1e-5},
        {"num_classes": 0},
    ],
)
def test_invalid_loss_config(kwargs):
    with pytest.raises(ConfigurationError):
        LossConfig(**kwargs)
