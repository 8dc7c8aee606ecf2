"""
Synthetic labeled volumes for desk-scale experiments.
"""

import functools
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

from ..exceptions import ConfigurationError
from .volume import Volume

logger = logging.getLogger(__name__)

SHAPES = ("ellipsoid", "cuboid")


@dataclass
class SynthSpec:
    """
    The `synth` section of a data generation file.

    Attributes
    ----------
    shape : tuple of int
        Volume dimensions (default: 24, 64, 64).
    num_classes : int
        Classes including the background (default: 3).
    object_count : tuple of int
        Bounds of the number of objects per volume (default: 2 to 5).
    object_size : tuple of float
        Bounds of each object's half-extent, as a share of the volume
        size along each axis (default: 0.1 to 0.3).
    class_means, class_stds : tuple of float
        Intensity distribution of each foreground class, in Hounsfield
        units (defaults: 60, 250 and 20, 40).
    background_mean, background_std : float
        Background intensity distribution (defaults: -300 and 120).
    texture_sigma : float
        Width of the Gaussian filter that gives the background a smooth
        texture; 0 leaves white noise (default: 2).
    """

    shape: Tuple[int, int, int] = (24, 64, 64)
    num_classes: int = 3
    object_count: Tuple[int, int] = (2, 5)
    object_size: Tuple[float, float] = (0.1, 0.3)
    class_means: Tuple[float, ...] = (60.0, 250.0)
    class_stds: Tuple[float, ...] = (20.0, 40.0)
    background_mean: float = -300.0
    background_std: float = 120.0
    texture_sigma: float = 2.0

    def __post_init__(self):
        self.shape = tuple(int(_) for _ in self.shape)
        self.object_count = tuple(int(_) for _ in self.object_count)
        self.class_means = tuple(float(_) for _ in self.class_means)
        self.class_stds = tuple(float(_) for _ in self.class_stds)
        if self.num_classes < 1:
            raise ConfigurationError(f"Provide at least one class, not {self.num_classes}.")
        foreground = self.num_classes - 1
        if len(self.class_means) != foreground or len(self.class_stds) != foreground:
            raise ConfigurationError(
                f"Provide one intensity mean and deviation per foreground class ({foreground}), "
                f"not {len(self.class_means)} and {len(self.class_stds)}."
            )
        low, high = self.object_count
        if not 0 <= low <= high:
            raise ConfigurationError(
                f"Provide a valid object count range, not {self.object_count}."
            )
        if foreground == 0 and high > 0:
            raise ConfigurationError("Objects need at least one foreground class.")
        if len(self.shape) != 3 or min(self.shape) < 1:
            raise ConfigurationError(f"Provide a valid volume shape, not {self.shape}.")


def _background(spec, rng):
    noise = rng.standard_normal(spec.shape)
    if spec.texture_sigma > 0:
        noise = ndimage.gaussian_filter(noise, spec.texture_sigma, mode="wrap")
        noise /= max(noise.std(), 1e-12)
    return spec.background_mean + spec.background_std * noise


def _object_mask(spec, rng):
    grid = np.meshgrid(*(np.arange(n) + 0.5 for n in spec.shape), indexing="ij", sparse=True)
    center = [rng.uniform(0, n) for n in spec.shape]
    radius = [rng.uniform(*spec.object_size) * n for n in spec.shape]
    offsets = [(axis - c) / r for axis, c, r in zip(grid, center, radius)]
    if rng.choice(SHAPES) == "ellipsoid":
        return sum(offset**2 for offset in offsets) <= 1
    return functools.reduce(np.logical_and, (np.abs(offset) <= 1 for offset in offsets))


def synth_generate(spec, rng):
    """
    Generate one labeled volume.

    The background is (optionally smoothed) Gaussian noise. Each object
    is an ellipsoid or cuboid of a random foreground class whose voxels
    are drawn from that class's intensity distribution; objects drawn
    later overwrite earlier ones.

    Parameters
    ----------
    spec : SynthSpec
        The generator settings.
    rng : numpy.random.Generator
        The random stream to draw from.
    """
    values = _background(spec, rng)
    labels = np.zeros(spec.shape, dtype=np.uint8)
    count = int(rng.integers(spec.object_count[0], spec.object_count[1] + 1))
    for _ in range(count):
        label = int(rng.integers(1, spec.num_classes))
        mask = _object_mask(spec, rng)
        values[mask] = rng.normal(
            spec.class_means[label - 1], spec.class_stds[label - 1], size=int(mask.sum())
        )
        labels[mask] = label
    logger.debug("Generated a volume with %d objects.", count)
    return Volume(values, labels, provenance="synthetic")
