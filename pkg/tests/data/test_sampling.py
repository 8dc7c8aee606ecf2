"""Tests for patch sampling and batch assembly."""

import numpy as np
import pytest

from pgl.augment.config import AugmentConfig
from pgl.data.sampling import (
    FINETUNE_STREAM,
    SSL_STREAM,
    labeled_batch,
    sample_patch,
    ssl_batch,
    step_rng,
)
from pgl.data.volume import Volume
from pgl.exceptions import ShapeError

VIEW_SHAPE = (8, 32, 32)


@pytest.fixture
def volumes(rng):
    return [
        Volume(rng.normal(size=(16, 48, 48)), rng.integers(0, 3, size=(16, 48, 48)))
        for _ in range(3)
    ]


def test_step_streams_are_reproducible_and_independent():
    first = step_rng(3, SSL_STREAM, 7).random(4)
    np.testing.assert_array_equal(step_rng(3, SSL_STREAM, 7).random(4), first)
    assert not np.array_equal(step_rng(3, SSL_STREAM, 8).random(4), first)
    assert not np.array_equal(step_rng(3, FINETUNE_STREAM, 7).random(4), first)
    assert not np.array_equal(step_rng(4, SSL_STREAM, 7).random(4), first)


def test_sample_patch_positions(rng):
    volume = Volume(np.arange(10 * 12 * 12).reshape(10, 12, 12))
    starts = {sample_patch(volume, (8, 12, 12), rng)[2] for _ in range(200)}
    assert starts == {(0, 0, 0), (1, 0, 0), (2, 0, 0)}


def test_sample_patch_copies_labels(volumes, rng):
    volume = volumes[0]
    patch, labels, start = sample_patch(volume, VIEW_SHAPE, rng)
    region = tuple(slice(s, s + n) for s, n in zip(start, VIEW_SHAPE))
    np.testing.assert_array_equal(patch, volume.values[region])
    np.testing.assert_array_equal(labels, volume.labels[region])
    labels[...] = 0
    assert volume.labels[region].any()


def test_unlabeled_patch(rng):
    _, labels, _ = sample_patch(Volume(np.zeros((8, 8, 8))), (4, 4, 4), rng)
    assert labels is None


def test_volume_too_small(rng):
    volume = Volume(np.zeros((16, 20, 48)), provenance="small")
    with pytest.raises(ShapeError, match="small.*height"):
        sample_patch(volume, VIEW_SHAPE, rng)


class TestSslBatch:
    def test_views_and_records(self, volumes):
        pairs = ssl_batch(volumes, 0, 0, VIEW_SHAPE, 3, AugmentConfig())
        assert len(pairs) == 3
        for pair in pairs:
            assert pair.view1.shape == VIEW_SHAPE
            assert pair.view2.shape == VIEW_SHAPE
            assert pair.rec1.view_shape == VIEW_SHAPE

    def test_reproducible(self, volumes):
        first = ssl_batch(volumes, 5, 1, VIEW_SHAPE, 2)
        again = ssl_batch(volumes, 5, 1, VIEW_SHAPE, 2)
        other = ssl_batch(volumes, 6, 1, VIEW_SHAPE, 2)
        for pair, repeat in zip(first, again):
            np.testing.assert_array_equal(pair.view1, repeat.view1)
            assert pair.rec2 == repeat.rec2
        assert not np.array_equal(first[0].view1, other[0].view1)

    def test_source_patch_must_fit(self, volumes):
        # Views of (16, 32, 32) need source patches of 23 voxels in depth
        with pytest.raises(ShapeError, match="depth"):
            ssl_batch(volumes, 0, 0, (16, 32, 32), 1)


class TestLabeledBatch:
    def test_shapes(self, volumes):
        images, labels = labeled_batch(volumes, 0, 0, VIEW_SHAPE, 2)
        assert images.shape == (2, 1, *VIEW_SHAPE)
        assert images.dtype == np.float32
        assert labels.shape == (2, *VIEW_SHAPE)

    def test_augmented_labels_follow_the_image(self):
        values = np.arange(16 * 48 * 48, dtype=float).reshape(16, 48, 48)
        volume = Volume(values, (values % 3).astype(int))
        images, labels = labeled_batch([volume], 2, 0, VIEW_SHAPE, 1, AugmentConfig())
        raw_images, raw_labels = labeled_batch([volume], 2, 0, VIEW_SHAPE, 1)
        assert images.shape == raw_images.shape
        # Flips permute voxels jointly, so the label histogram is unchanged
        for augmented, raw in zip(labels, raw_labels):
            np.testing.assert_array_equal(np.bincount(augmented.ravel()), np.bincount(raw.ravel()))
