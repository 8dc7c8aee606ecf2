"""
Spatial augmentations: paired random crops, resizing and flips.
"""

import logging
import math

import numpy as np

from ..exceptions import ShapeError
from ..tensor.ops import resize_grid, trilinear_interpolate
from ..tensor.utils import AXIS_NAMES, as_triple, check_rank
from .config import AugmentConfig
from .records import CROP_QUANTUM, TransformRecord

logger = logging.getLogger(__name__)


def quantize_down(value):
    return math.floor(value * CROP_QUANTUM) / CROP_QUANTUM


def quantize_up(value):
    return math.ceil(value * CROP_QUANTUM) / CROP_QUANTUM


def source_patch_shape(view_shape, max_scale=1.4):
    """
    Return the smallest source patch that fits a crop of any allowed size.

    Parameters
    ----------
    view_shape : tuple of int
        The network input size.
    max_scale : float
        The largest crop size relative to the view size.

    Returns
    -------
    shape : tuple of int
        ``ceil(max_scale * view_shape)`` per axis.
    """
    view_shape = as_triple(view_shape, "view_shape", minimum=1)
    # Rounding first keeps products like 1.4 * 16 from drifting upwards
    return tuple(math.ceil(round(max_scale * size, 9)) for size in view_shape)


def overlap_fractions(start1, end1, start2, end2):
    """
    Measure how much of each box is shared with the other.

    Returns
    -------
    fractions : tuple of float
        The intersection volume divided by the volume of the first box
        and by the volume of the second box.
    """
    intersection = 1.0
    for s1, e1, s2, e2 in zip(start1, end1, start2, end2):
        intersection *= max(0.0, min(e1, e2) - max(s1, s2))
    volume1 = np.prod(np.subtract(end1, start1))
    volume2 = np.prod(np.subtract(end2, start2))
    return intersection / volume1, intersection / volume2


def _crop_extent(view_size, scale, scale_range):
    lower = quantize_up(scale_range[0] * view_size)
    upper = quantize_down(scale_range[1] * view_size)
    return min(max(quantize_down(scale * view_size), lower), upper)


def _draw_start(rng, source_shape, extent):
    return tuple(
        quantize_down(rng.random() * (size - length))
        for size, length in zip(source_shape, extent)
    )


def _centered_start(source_shape, extent):
    return tuple(quantize_down((size - length) / 2) for size, length in zip(source_shape, extent))


def sample_crop_pair(source_shape, view_shape, rng, config=None):
    """
    Draw the crop boxes and flips for the two views of one source patch.

    Each crop is between 110% and 140% of the view size along every axis
    (per-axis scales are drawn independently), and the two crops always
    share at least 10% of each crop's volume. Crop positions are
    redrawn until that holds; after `max_attempts` failures the crops are
    centered on the source patch instead.

    Parameters
    ----------
    source_shape : tuple of int
        The shape of the source patch the crops are taken from.
    view_shape : tuple of int
        The shape every crop is resized to.
    rng : numpy.random.Generator
        The random stream to draw from.
    config : AugmentConfig, optional
        The ranges and probabilities (default: the standard settings).

    Returns
    -------
    records : tuple of TransformRecord
        One record per view, without intensity parameters.
    """
    config = config or AugmentConfig()
    source_shape = as_triple(source_shape, "source_shape", minimum=1)
    view_shape = as_triple(view_shape, "view_shape", minimum=1)
    required = source_patch_shape(view_shape, config.scale_range[1])
    for axis, size, needed in zip(AXIS_NAMES, source_shape, required):
        if size < needed:
            raise ShapeError(
                f"The source patch is too small on the {axis} axis for crops of up to "
                f"{config.scale_range[1]:g} times the view: {size} < {needed}."
            )
    scales = [rng.uniform(*config.scale_range, size=3) for _ in range(2)]
    extents = [
        tuple(_crop_extent(v, s, config.scale_range) for v, s in zip(view_shape, scale))
        for scale in scales
    ]
    for attempt in range(1, config.max_attempts + 1):
        starts = [_draw_start(rng, source_shape, extent) for extent in extents]
        ends = [tuple(np.add(start, extent)) for start, extent in zip(starts, extents)]
        fractions = overlap_fractions(starts[0], ends[0], starts[1], ends[1])
        if min(fractions) >= config.min_overlap:
            break
    else:
        logger.debug(
            "No crop pair reached %.0f%% overlap in %d attempts; using concentric crops.",
            100 * config.min_overlap,
            config.max_attempts,
        )
        starts = [_centered_start(source_shape, extent) for extent in extents]
    flips = [
        tuple(bool(flipped) for flipped in rng.random(3) < config.flip_probability)
        for _ in range(2)
    ]
    records = []
    for scale, start, extent, flip in zip(scales, starts, extents, flips):
        draws = (("scale", tuple(scale.tolist())), ("attempts", attempt), ("flip", flip))
        records.append(
            TransformRecord(
                crop_start=start,
                crop_end=tuple(np.add(start, extent)),
                view_shape=view_shape,
                flip_mask=flip,
                draws=draws,
            )
        )
    return tuple(records)


def apply_crop_resize(patch, rec):
    """
    Extract a record's crop box from a patch and resize it to the view shape.

    View voxel ``j`` covers crop interval ``[j, j + 1) * crop / view``;
    its value is the trilinear interpolation of the patch at the center
    of that interval.

    Parameters
    ----------
    patch : numpy.ndarray
        The source patch, shaped (D, H, W).
    rec : TransformRecord
        The record holding the crop box and view shape.

    Returns
    -------
    view : numpy.ndarray
        The resized crop, shaped like `rec.view_shape`.
    """
    patch = np.asarray(patch)
    check_rank(patch, 3, "apply_crop_resize", layout="DHW")
    for axis, start, end, size in zip(AXIS_NAMES, rec.crop_start, rec.crop_end, patch.shape):
        if start < 0 or end > size:
            raise ShapeError(
                f"The crop box leaves the patch on the {axis} axis: "
                f"[{start:g}, {end:g}) is not inside [0, {size})."
            )
    points = resize_grid(rec.crop_shape, rec.view_shape) + np.asarray(rec.crop_start)
    return trilinear_interpolate(patch, points).reshape(rec.view_shape)


def flip_axes(flip_mask, ndim=3):
    """Return the array axes reversed by a flip mask over the last three axes."""
    return tuple(ndim - 3 + axis for axis, flipped in enumerate(flip_mask) if flipped)


def apply_flip(view, flip_mask):
    """Reverse each of the last three axes of `view` whose mask entry is set."""
    view = np.asarray(view)
    axes = flip_axes(flip_mask, view.ndim)
    return np.flip(view, axis=axes).copy() if axes else view.copy()
