"""
Assemble augmented view pairs (for pretraining) and labeled samples
(for fine-tuning).
"""

import numpy as np

from .config import AugmentConfig
from .intensity import intensity_pipeline
from .records import ViewPair
from .spatial import apply_crop_resize, apply_flip, sample_crop_pair


def make_view(patch, rec, rng, config=None):
    """
    Produce one view: crop and resize, flip, then intensity operations.

    Returns
    -------
    view : numpy.ndarray
        The view, shaped like `rec.view_shape`.
    rec : TransformRecord
        The input record, completed with the applied intensity parameters.
    """
    view = apply_flip(apply_crop_resize(patch, rec), rec.flip_mask)
    view, intensity = intensity_pipeline(view, rng, config)
    return view, rec.replace(intensity=intensity)


def make_view_pair(patch, view_shape, rng, config=None, records=None):
    """
    Generate two augmented views of a source patch.

    Parameters
    ----------
    patch : numpy.ndarray
        The preprocessed source patch, shaped (D, H, W).
    view_shape : tuple of int
        The network input size.
    rng : numpy.random.Generator
        The random stream to draw from.
    config : AugmentConfig, optional
        The augmentation settings (default: the standard settings).
    records : tuple of TransformRecord, optional
        Spatial transforms to use instead of drawing new ones.

    Returns
    -------
    pair : ViewPair
        The two views and their complete records.
    """
    config = config or AugmentConfig()
    patch = np.asarray(patch, dtype=np.float32)
    if records is None:
        records = sample_crop_pair(patch.shape, view_shape, rng, config)
    view1, rec1 = make_view(patch, records[0], rng, config)
    view2, rec2 = make_view(patch, records[1], rng, config)
    return ViewPair(view1, view2, rec1, rec2)


def augment_labeled(image, label, rng, config=None):
    """
    Augment a labeled training patch for fine-tuning.

    Flips are applied to the image and label together; intensity
    operations change the image only.

    Parameters
    ----------
    image : numpy.ndarray
        The image patch, shaped (D, H, W).
    label : numpy.ndarray
        The integer label patch of the same shape.
    rng : numpy.random.Generator
        The random stream to draw from.
    config : AugmentConfig, optional
        The augmentation settings (default: the standard settings).

    Returns
    -------
    image, label : numpy.ndarray
        The augmented pair.
    params : IntensityParams
        The intensity operations applied to the image.
    """
    config = config or AugmentConfig()
    flip_mask = tuple(bool(flipped) for flipped in rng.random(3) < config.flip_probability)
    image, params = intensity_pipeline(apply_flip(image, flip_mask), rng, config)
    return image, apply_flip(label, flip_mask), params
