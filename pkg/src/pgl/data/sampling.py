"""
Patch sampling and the assembly of training batches.

Every batch draws from its own random stream, derived from the run seed
and the batch index, so batches can be produced in any order (or ahead
of time on another thread) without changing their content.
"""

import numpy as np

from ..augment.spatial import source_patch_shape
from ..augment.views import augment_labeled, make_view_pair
from ..exceptions import ShapeError
from ..tensor.utils import AXIS_NAMES

# Stream identifiers for `step_rng`
INIT_STREAM = 0
SSL_STREAM = 1
FINETUNE_STREAM = 2
SPLIT_STREAM = 3
SYNTH_STREAM = 4


def step_rng(seed, stream, index=0):
    """Derive an independent generator for one consumer and one step."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


def sample_patch(volume, patch_shape, rng):
    """
    Cut a uniformly positioned patch out of a volume.

    Parameters
    ----------
    volume : Volume
        The source volume.
    patch_shape : tuple of int
        The patch size.
    rng : numpy.random.Generator
        The random stream to draw the position from.

    Returns
    -------
    patch : numpy.ndarray
        The voxel values.
    labels : numpy.ndarray or None
        The matching label patch (copied exactly), if the volume is labeled.
    start : tuple of int
        The patch origin in the volume.
    """
    for axis, size, extent in zip(AXIS_NAMES, volume.shape, patch_shape):
        if extent > size:
            raise ShapeError(
                f"The volume '{volume.provenance}' is too small on the {axis} axis: "
                f"{size} voxels for a patch of {extent}."
            )
    start = tuple(
        int(rng.integers(0, size - extent + 1))
        for size, extent in zip(volume.shape, patch_shape)
    )
    region = tuple(slice(s, s + extent) for s, extent in zip(start, patch_shape))
    labels = volume.labels[region].copy() if volume.labeled else None
    return volume.values[region].copy(), labels, start


def ssl_batch(volumes, index, seed, view_shape, batch_size, augment_config=None):
    """
    Build the view pairs of one pretraining step.

    For each pair a volume is picked at random, a source patch 1.4 times
    the view size is sampled from it, and two views are cropped from the
    patch.

    Returns
    -------
    pairs : list of ViewPair
    """
    rng = step_rng(seed, SSL_STREAM, index)
    source_shape = source_patch_shape(view_shape)
    pairs = []
    for _ in range(batch_size):
        volume = volumes[int(rng.integers(len(volumes)))]
        patch, _, _ = sample_patch(volume, source_shape, rng)
        pairs.append(make_view_pair(patch, view_shape, rng, augment_config))
    return pairs


def labeled_batch(volumes, index, seed, patch_shape, batch_size, augment_config=None):
    """
    Build the labeled patches of one fine-tuning step.

    Parameters
    ----------
    augment_config : AugmentConfig, optional
        When given, patches are flipped (jointly with their labels) and
        intensity-augmented.

    Returns
    -------
    images : numpy.ndarray
        Shaped (N, 1, D, H, W).
    labels : numpy.ndarray
        Shaped (N, D, H, W).
    """
    rng = step_rng(seed, FINETUNE_STREAM, index)
    images, labels = [], []
    for _ in range(batch_size):
        volume = volumes[int(rng.integers(len(volumes)))]
        image, label, _ = sample_patch(volume, patch_shape, rng)
        if augment_config is not None:
            image, label, _ = augment_labeled(image, label, rng, augment_config)
        images.append(image)
        labels.append(label)
    return np.stack(images)[:, np.newaxis].astype(np.float32), np.stack(labels)
