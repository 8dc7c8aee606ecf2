"""Tests for the local consistency objective."""

import numpy as np
import pytest

from pgl.exceptions import ShapeError
from pgl.loss.consistency import local_consistency, total_ssl_loss
from pgl.tensor.core import Tensor
from pgl.testing.helpers import TestGradients


def unit_fields(rng, shape=(2, 4, 2, 3, 3)):
    # Random channel vectors plus vectors opposite and orthogonal to them
    u = rng.standard_normal(shape)
    v = rng.standard_normal(shape)
    v -= (u * v).sum(axis=1, keepdims=True) / (u * u).sum(axis=1, keepdims=True) * u
    return u, v


class TestLocalConsistency(TestGradients):
    def test_identical_inputs(self):
        u, _ = unit_fields(self._rng)
        assert local_consistency(Tensor(u), Tensor(u)).item() == pytest.approx(0, abs=1e-12)

    def test_opposite_vectors(self):
        u, _ = unit_fields(self._rng)
        assert local_consistency(Tensor(u), Tensor(-u)).item() == pytest.approx(4)

    def test_orthogonal_vectors(self):
        u, v = unit_fields(self._rng)
        assert local_consistency(Tensor(u), Tensor(v)).item() == pytest.approx(2)

    def test_channels_excluded_from_denominator(self):
        u, _ = unit_fields(self._rng)
        loss = local_consistency(Tensor(u), Tensor(-u), normalize_channels=True)
        assert loss.item() == pytest.approx(4 / u.shape[1])

    def test_positive_rescaling(self):
        x = self._rng.standard_normal((2, 4, 2, 3, 3))
        y = self._rng.standard_normal((2, 4, 2, 3, 3))
        factors = self._rng.uniform(0.01, 100, size=(2, 1, 2, 3, 3))
        original = local_consistency(Tensor(x), Tensor(y)).item()
        assert abs(local_consistency(Tensor(x * factors), Tensor(y)).item() - original) < 1e-6
        assert abs(local_consistency(Tensor(x), Tensor(y * factors)).item() - original) < 1e-6

    def test_bounds(self):
        for _ in range(1000):
            shape = (1, int(self._rng.integers(1, 5)), 1, 2, 2)
            x = self._rng.standard_normal(shape)
            y = self._rng.standard_normal(shape)
            loss = local_consistency(Tensor(x), Tensor(y)).item()
            assert 0 <= loss <= 4 + 1e-9
            total = total_ssl_loss([(Tensor(x), Tensor(y)), (Tensor(y), Tensor(x))]).item()
            assert 0 <= total <= 8 + 1e-9

    @pytest.mark.parametrize("seed", range(20))
    def test_gradients(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((2, 3, 1, 2, 2))
        y = rng.standard_normal((2, 3, 1, 2, 2))
        self.assert_gradients_match(local_consistency, [x, y])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            local_consistency(Tensor(np.ones((1, 2, 1, 2, 2))), Tensor(np.ones((1, 3, 1, 2, 2))))


class TestTotalSslLoss:
    def test_sums_both_orders(self):
        rng = np.random.default_rng(0)
        x, y = (Tensor(rng.standard_normal((1, 3, 2, 2, 2))) for _ in range(2))
        total = total_ssl_loss([(x, y), (y, x)]).item()
        assert total == pytest.approx(2 * local_consistency(x, y).item())

    def test_swapped_views(self):
        rng = np.random.default_rng(1)
        a, b, c, d = (Tensor(rng.standard_normal((1, 3, 2, 2, 2))) for _ in range(4))
        forward = total_ssl_loss([(a, b), (c, d)]).item()
        swapped = total_ssl_loss([(c, d), (a, b)]).item()
        assert forward == pytest.approx(swapped, abs=1e-12)

    def test_empty_order_contributes_nothing(self):
        x = Tensor(np.ones((1, 2, 1, 1, 1)))
        y = Tensor(-np.ones((1, 2, 1, 1, 1)))
        assert total_ssl_loss([(x, y), None]).item() == pytest.approx(4)
        assert total_ssl_loss([None, None]) is None
