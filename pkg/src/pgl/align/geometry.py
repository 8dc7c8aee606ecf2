"""
Geometry of view overlaps: shared crop regions and their feature-space
coordinates.

Every box is half-open. In image space voxel ``i`` spans ``[i, i + 1)``;
in feature space cell ``i`` spans view interval ``[i * s, (i + 1) * s)``
for an output stride ``s``.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

from ..augment.records import CROP_QUANTUM
from ..exceptions import EmptyOverlapError, ShapeError
from ..tensor.utils import AXIS_NAMES, as_triple

logger = logging.getLogger(__name__)

# Slack for coordinates that land a rounding error outside the feature map
BOUNDS_TOLERANCE = 1e-9


@dataclass(frozen=True)
class OverlapBox:
    """
    The region two crops share, in the frame of one crop.

    Attributes
    ----------
    start, end : tuple of float
        The corners of the box in crop-space voxel units.
    """

    start: Tuple[float, float, float]
    end: Tuple[float, float, float]

    def __post_init__(self):
        for axis, low, high in zip(AXIS_NAMES, self.start, self.end):
            if low < 0 or not low < high:
                raise ValueError(
                    f"Provide a nonempty overlap box with a non-negative start, not "
                    f"[{low}, {high}) on the {axis} axis."
                )

    @property
    def shape(self):
        return tuple(high - low for low, high in zip(self.start, self.end))


@dataclass(frozen=True)
class FeatureRoI:
    """
    A region of interest in continuous feature-map coordinates.

    Attributes
    ----------
    start, end : tuple of float
        The corners of the region in feature cells.
    feature_shape : tuple of int
        The spatial shape of the feature map the region belongs to.
    """

    start: Tuple[float, float, float]
    end: Tuple[float, float, float]
    feature_shape: Tuple[int, int, int]

    @property
    def shape(self):
        return tuple(high - low for low, high in zip(self.start, self.end))

    @property
    def degenerate(self):
        """Whether the region is thinner than one feature cell on some axis."""
        return any(extent < 1 for extent in self.shape)

    @classmethod
    def full(cls, feature_shape):
        feature_shape = tuple(int(_) for _ in feature_shape)
        return cls((0.0, 0.0, 0.0), tuple(float(_) for _ in feature_shape), feature_shape)


def _intersect(rec1, rec2):
    starts, ends = [], []
    bounds = zip(rec1.crop_start, rec1.crop_end, rec2.crop_start, rec2.crop_end)
    for low1, high1, low2, high2 in bounds:
        low, high = max(low1, low2), min(high1, high2)
        if not low < high:
            raise EmptyOverlapError(
                f"The crops [{low1}, {high1}) and [{low2}, {high2}) do not intersect."
            )
        starts.append(low)
        ends.append(high)
    return starts, ends


def compute_overlap(rec1, rec2):
    """
    Find the region two views share, in each view's crop frame.

    Parameters
    ----------
    rec1, rec2 : pgl.augment.records.TransformRecord
        Records of two crops of the same source patch.

    Returns
    -------
    boxes : tuple of OverlapBox or None
        The shared region relative to the first crop and relative to the
        second crop, or `None` when the crops do not intersect.
    """
    try:
        starts, ends = _intersect(rec1, rec2)
    except EmptyOverlapError as exc:
        logger.debug("Skipping a view pair: %s", exc)
        return None
    boxes = []
    for rec in (rec1, rec2):
        origin = rec.crop_start
        boxes.append(
            OverlapBox(
                tuple(low - o for low, o in zip(starts, origin)),
                tuple(high - o for high, o in zip(ends, origin)),
            )
        )
    return tuple(boxes)


def overlap_oracle(rec1, rec2):
    """
    Find the shared region of two crops by enumerating sub-voxel cells.

    Each axis is cut into cells one crop quantum wide; the cells inside
    both crops are collected and their bounding box is mapped into each
    crop's frame with exact rational arithmetic. This is a slow reference
    for `compute_overlap`.

    Returns
    -------
    boxes : tuple or None
        ``((start1, end1), (start2, end2))`` as tuples of `Fraction`, or
        `None` when the crops do not intersect.
    """
    start1, end1, start2, end2 = [], [], [], []
    for axis in range(3):
        cells = []
        for rec in (rec1, rec2):
            first = Fraction(rec.crop_start[axis]) * CROP_QUANTUM
            last = Fraction(rec.crop_end[axis]) * CROP_QUANTUM
            if first.denominator != 1 or last.denominator != 1:
                raise ValueError("The crop box does not lie on the crop quantum grid.")
            cells.append(set(range(int(first), int(last))))
        shared = cells[0] & cells[1]
        if not shared:
            return None
        low = Fraction(min(shared), CROP_QUANTUM)
        high = Fraction(max(shared) + 1, CROP_QUANTUM)
        start1.append(low - Fraction(rec1.crop_start[axis]))
        end1.append(high - Fraction(rec1.crop_start[axis]))
        start2.append(low - Fraction(rec2.crop_start[axis]))
        end2.append(high - Fraction(rec2.crop_start[axis]))
    return (tuple(start1), tuple(end1)), (tuple(start2), tuple(end2))


def agrees_with_oracle(rec1, rec2):
    """Check `compute_overlap` against the cell-enumeration oracle, exactly."""
    boxes = compute_overlap(rec1, rec2)
    expected = overlap_oracle(rec1, rec2)
    if boxes is None or expected is None:
        return boxes is None and expected is None
    for box, (start, end) in zip(boxes, expected):
        if tuple(Fraction(_) for _ in box.start) != start:
            return False
        if tuple(Fraction(_) for _ in box.end) != end:
            return False
    return True


def feature_shape_for(view_shape, output_stride):
    """Return the spatial shape of features for a view, checking divisibility."""
    feature_shape = []
    for axis, size, stride in zip(AXIS_NAMES, view_shape, output_stride):
        if size % stride:
            raise ShapeError(
                f"The output stride {stride} does not divide the {axis} axis of the view "
                f"(size {size})."
            )
        feature_shape.append(size // stride)
    return tuple(feature_shape)


def to_feature_coords(box, rec, output_stride):
    """
    Map an overlap box from crop space into feature-map space.

    Crop-space lengths are first converted to view space with the record's
    resize scale, then divided by the output stride. Coordinates stay
    continuous.

    Parameters
    ----------
    box : OverlapBox
        The region, in the crop frame of `rec`.
    rec : pgl.augment.records.TransformRecord
        The record of the view the features were computed from.
    output_stride : int or tuple of int
        The encoder's input-to-feature size ratio per axis.

    Returns
    -------
    roi : FeatureRoI
        The region in feature cells.
    """
    output_stride = as_triple(output_stride, "output_stride", minimum=1)
    feature_shape = feature_shape_for(rec.view_shape, output_stride)
    start, end = [], []
    for axis, low, high, view, crop, stride, cells in zip(
        AXIS_NAMES, box.start, box.end, rec.view_shape, rec.crop_shape, output_stride,
        feature_shape,
    ):
        low, high = low * view / crop / stride, high * view / crop / stride
        if low < -BOUNDS_TOLERANCE or high > cells + BOUNDS_TOLERANCE:
            raise ShapeError(
                f"The overlap box maps outside the feature map on the {axis} axis: "
                f"[{low}, {high}) is not inside [0, {cells})."
            )
        start.append(min(max(low, 0.0), cells))
        end.append(min(max(high, 0.0), cells))
    roi = FeatureRoI(tuple(start), tuple(end), feature_shape)
    if roi.degenerate:
        logger.debug("Sampling a region thinner than one feature cell: %s", roi)
    return roi
