"""
The prior-guided aligner: bring the features of two views into
correspondence using the transforms recorded for each view.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..augment.spatial import flip_axes
from ..exceptions import ShapeError
from ..tensor.core import Tensor
from ..tensor.ops import block_mean, concat, flip, global_avg_pool, reshape, take, trilinear_sample
from ..tensor.utils import AXIS_NAMES, as_triple, check_rank
from .geometry import BOUNDS_TOLERANCE, compute_overlap, feature_shape_for, to_feature_coords

logger = logging.getLogger(__name__)


@dataclass
class AlignedPair:
    """
    Online and target features describing the same image regions.

    Attributes
    ----------
    online, target : Tensor
        The aligned features, of identical shape.
    indices : tuple of int
        The batch elements the rows of the aligned features come from.
    skipped : int
        The number of batch elements dropped for lack of overlap.
    """

    online: Tensor
    target: Tensor
    indices: tuple
    skipped: int = 0


def flip_align(f, flip_mask):
    """Reverse the spatial axes of an NCDHW feature map where the view was flipped."""
    axes = flip_axes(flip_mask, f.ndim)
    return flip(f, axes) if axes else f


def roi_sample_points(roi, out_shape, samples_per_bin):
    """
    Place the regularly spaced sample points of every RoIAlign bin.

    Along each axis the region is cut into `out_shape` bins; bin ``b``
    holds `samples_per_bin` points at ``start + (b + (k + 0.5) / S) * w``
    (``w`` the bin width), shifted by half a cell into voxel-center
    indexing.

    Returns
    -------
    points : numpy.ndarray
        Coordinates shaped (prod(out_shape * samples_per_bin), 3), laid
        out bin by bin along each axis.
    """
    axes = []
    fractions = (np.arange(samples_per_bin) + 0.5) / samples_per_bin
    for low, high, bins in zip(roi.start, roi.end, out_shape):
        width = (high - low) / bins
        offsets = (np.arange(bins)[:, np.newaxis] + fractions[np.newaxis, :]).ravel()
        axes.append(low + offsets * width - 0.5)
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([axis.ravel() for axis in grid], axis=-1)


def extract_aligned(f, roi, out_shape=None, samples_per_bin=2):
    """
    Resample a region of a feature map onto a fixed grid (3D RoIAlign).

    The region is split into `out_shape` bins and each bin becomes the
    mean of ``samples_per_bin ** 3`` trilinear samples taken inside it.
    Gradients reach the eight neighbors of every sample.

    Parameters
    ----------
    f : Tensor
        The (flip-aligned) features, shaped (N, C, D, H, W).
    roi : FeatureRoI
        The region, in feature cells.
    out_shape : tuple of int, optional
        The output spatial shape (default: the feature map's own shape).
    samples_per_bin : int
        The number of samples per bin along each axis.

    Returns
    -------
    aligned : Tensor
        The resampled features, shaped (N, C, *out_shape).
    """
    check_rank(f, 5, "extract_aligned")
    out_shape = as_triple(out_shape or f.shape[2:], "out_shape", minimum=1)
    if samples_per_bin < 1:
        raise ValueError(f"Provide at least one sample per bin, not {samples_per_bin}.")
    for axis, low, high, size in zip(AXIS_NAMES, roi.start, roi.end, f.shape[2:]):
        if low < -BOUNDS_TOLERANCE or high > size + BOUNDS_TOLERANCE or not low < high:
            raise ShapeError(
                f"The region of interest is out of bounds on the {axis} axis: "
                f"[{low}, {high}) is not inside [0, {size})."
            )
    points = roi_sample_points(roi, out_shape, samples_per_bin)
    dense_shape = tuple(size * samples_per_bin for size in out_shape)
    dense = reshape(trilinear_sample(f, points), (f.shape[0], f.shape[1], *dense_shape))
    return block_mean(dense, samples_per_bin) if samples_per_bin > 1 else dense


def _as_batch(records, batch_size):
    if not isinstance(records, (list, tuple)):
        records = [records] * batch_size
    if len(records) != batch_size:
        raise ShapeError(
            f"Received {len(records)} transform records for a batch of {batch_size} on axis 0."
        )
    return records


def align_pair(
    f_online,
    f_target,
    rec_online,
    rec_target,
    output_stride,
    samples_per_bin=2,
    use_flipalign=True,
    use_csalign=True,
):
    """
    Align the online and target features of a batch of view pairs.

    Each batch element is flip-aligned (its recorded flips undone), then
    the region both views share is extracted from each feature map onto
    the feature map's own grid. Without the crop/scale stage the whole
    (flip-aligned) maps are compared; with neither stage the features
    are globally average-pooled.

    Parameters
    ----------
    f_online, f_target : Tensor
        Projector features of the two views, shaped (N, C, D, H, W).
    rec_online, rec_target : TransformRecord or sequence of TransformRecord
        The record of each view (one per batch element, or one shared by
        every element).
    output_stride : int or tuple of int
        The encoder's input-to-feature size ratio per axis.
    samples_per_bin : int
        RoIAlign samples per bin along each axis.
    use_flipalign, use_csalign : bool
        Switches for the flip and crop/scale alignment stages.

    Returns
    -------
    pair : AlignedPair or None
        The aligned features, or `None` when no batch element has any
        overlap.
    """
    if f_online.shape != f_target.shape:
        raise ShapeError(
            f"Online features {f_online.shape} and target features {f_target.shape} "
            "must share one shape."
        )
    batch_size = f_online.shape[0]
    rec_online = _as_batch(rec_online, batch_size)
    rec_target = _as_batch(rec_target, batch_size)
    output_stride = as_triple(output_stride, "output_stride", minimum=1)
    online, target, kept = [], [], []
    for index, (rec_o, rec_t) in enumerate(zip(rec_online, rec_target)):
        feature_o, feature_t = take(f_online, index), take(f_target, index)
        if use_flipalign:
            feature_o = flip_align(feature_o, rec_o.flip_mask)
            feature_t = flip_align(feature_t, rec_t.flip_mask)
        if use_csalign:
            boxes = compute_overlap(rec_o, rec_t)
            if boxes is None:
                continue
            feature_shape = feature_shape_for(rec_o.view_shape, output_stride)
            roi_o = to_feature_coords(boxes[0], rec_o, output_stride)
            roi_t = to_feature_coords(boxes[1], rec_t, output_stride)
            feature_o = extract_aligned(feature_o, roi_o, feature_shape, samples_per_bin)
            feature_t = extract_aligned(feature_t, roi_t, feature_shape, samples_per_bin)
        elif not use_flipalign:
            feature_o, feature_t = global_avg_pool(feature_o), global_avg_pool(feature_t)
        online.append(feature_o)
        target.append(feature_t)
        kept.append(index)
    skipped = batch_size - len(kept)
    if not kept:
        logger.warning("None of the %d view pairs in the batch overlap.", batch_size)
        return None
    return AlignedPair(concat(online, axis=0), concat(target, axis=0), tuple(kept), skipped)
