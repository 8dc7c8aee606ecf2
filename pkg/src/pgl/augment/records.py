"""
Records of the transforms that produced each augmented view.

A record holds everything needed to replay the spatial part of a view
(crop box, resize and flips) and documents the intensity operations
that were applied on top of it.
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

# Crop boxes live on a dyadic grid so that overlap arithmetic is exact
CROP_QUANTUM = 64


@dataclass(frozen=True)
class IntensityParams:
    """
    The intensity operations applied to a view (`None` when skipped).

    Attributes
    ----------
    noise_variance : float, optional
        The variance of the additive white Gaussian noise.
    blur_sigma : float, optional
        The standard deviation of the Gaussian blur kernel (in voxels).
    brightness_factor : float, optional
        The multiplicative brightness/contrast factor.
    gamma : float, optional
        The exponent of the gamma transform.
    """

    noise_variance: Optional[float] = None
    blur_sigma: Optional[float] = None
    brightness_factor: Optional[float] = None
    gamma: Optional[float] = None

    @property
    def applied(self):
        """The names of the operations that were applied, in pipeline order."""
        return tuple(
            item.name for item in dataclasses.fields(self) if getattr(self, item.name) is not None
        )


@dataclass(frozen=True)
class TransformRecord:
    """
    The spatial transform (and intensity parameters) behind one view.

    Coordinates are continuous voxel units in the frame of the source
    patch. Boxes are half-open: voxel ``i`` spans ``[i, i + 1)``.

    Attributes
    ----------
    crop_start, crop_end : tuple of float
        The corners of the crop box, in depth, height, width order.
    view_shape : tuple of int
        The fixed network input size the crop is resized to.
    flip_mask : tuple of bool
        Whether each spatial axis of the resized view was reversed.
    intensity : IntensityParams
        The intensity operations applied after the spatial transform.
    draws : tuple
        The log of random draws that produced the record, as
        ``(name, value)`` pairs.
    """

    crop_start: Tuple[float, float, float]
    crop_end: Tuple[float, float, float]
    view_shape: Tuple[int, int, int]
    flip_mask: Tuple[bool, bool, bool] = (False, False, False)
    intensity: IntensityParams = field(default_factory=IntensityParams)
    draws: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "crop_start", tuple(float(_) for _ in self.crop_start))
        object.__setattr__(self, "crop_end", tuple(float(_) for _ in self.crop_end))
        object.__setattr__(self, "view_shape", tuple(int(_) for _ in self.view_shape))
        object.__setattr__(self, "flip_mask", tuple(bool(_) for _ in self.flip_mask))
        for start, end in zip(self.crop_start, self.crop_end):
            if not start < end:
                raise ValueError(
                    f"A crop box must be nonempty, not {self.crop_start} to {self.crop_end}."
                )

    @property
    def crop_shape(self):
        return tuple(end - start for start, end in zip(self.crop_start, self.crop_end))

    @property
    def resize_scale(self):
        """The factor converting crop-space lengths into view-space lengths."""
        return tuple(view / crop for view, crop in zip(self.view_shape, self.crop_shape))

    @property
    def crop_volume(self):
        return float(np.prod(self.crop_shape))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @classmethod
    def identity(cls, shape):
        """Build the record of a view that equals its (unflipped) source."""
        return cls((0, 0, 0), tuple(shape), tuple(shape))


@dataclass
class ViewPair:
    """
    Two augmented views of one source patch, with their records.

    Attributes
    ----------
    view1, view2 : numpy.ndarray
        The views, each shaped like the records' `view_shape`.
    rec1, rec2 : TransformRecord
        The transforms that produced each view.
    """

    view1: np.ndarray
    view2: np.ndarray
    rec1: TransformRecord
    rec2: TransformRecord

    def swapped(self):
        return ViewPair(self.view2, self.view1, self.rec2, self.rec1)
