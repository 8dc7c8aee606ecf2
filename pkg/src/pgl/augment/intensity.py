"""
Intensity augmentations applied to a view after its spatial transform.
"""

import numpy as np
from scipy.ndimage import gaussian_filter

from .config import AugmentConfig
from .records import IntensityParams


def add_noise(view, variance, rng):
    """Add white Gaussian noise with the given variance."""
    noise = rng.normal(0.0, np.sqrt(variance), size=view.shape)
    return (view + noise).astype(view.dtype)


def gaussian_blur(view, sigma):
    """Blur with a separable Gaussian kernel (edges repeat the border voxel)."""
    return gaussian_filter(view, sigma=sigma, mode="nearest").astype(view.dtype)


def adjust_brightness(view, factor):
    """Scale intensities, then clip to the view's range before scaling."""
    low, high = view.min(), view.max()
    return np.clip(view * factor, low, high).astype(view.dtype)


def gamma_transform(view, gamma):
    """
    Raise min-max normalized intensities to a power.

    The view is mapped onto [0, 1], raised to `gamma`, and mapped back
    onto its original range. Constant views are returned unchanged.

    Parameters
    ----------
    view : numpy.ndarray
        The intensities to transform.
    gamma : float
        The exponent.
    """
    low, high = view.min(), view.max()
    if high <= low:
        return view.copy()
    normalized = (view - low) / (high - low)
    transformed = np.power(normalized, gamma) * (high - low) + low
    return np.clip(transformed, low, high).astype(view.dtype)


def intensity_pipeline(view, rng, config=None):
    """
    Apply the random intensity operations to a view, in order.

    The operations are additive Gaussian noise, Gaussian blur, a
    brightness/contrast factor and a gamma transform. Each one runs with
    its own probability and draws its parameter from its configured
    range.

    Parameters
    ----------
    view : numpy.ndarray
        The (flipped) view.
    rng : numpy.random.Generator
        The random stream to draw from.
    config : AugmentConfig, optional
        The probabilities and ranges (default: the standard settings).

    Returns
    -------
    view : numpy.ndarray
        The transformed view, with the shape of the input.
    params : IntensityParams
        The parameters of the operations that were applied.
    """
    config = config or AugmentConfig()
    view = np.asarray(view)
    if not config.intensity:
        return view.copy(), IntensityParams()
    params = {}
    # One coin toss per operation, then its parameter when it applies
    if rng.random() < config.noise_probability:
        params["noise_variance"] = rng.uniform(*config.noise_variance)
        view = add_noise(view, params["noise_variance"], rng)
    if rng.random() < config.blur_probability:
        params["blur_sigma"] = rng.uniform(*config.blur_sigma)
        view = gaussian_blur(view, params["blur_sigma"])
    if rng.random() < config.brightness_probability:
        params["brightness_factor"] = rng.uniform(*config.brightness_range)
        view = adjust_brightness(view, params["brightness_factor"])
    if rng.random() < config.gamma_probability:
        params["gamma"] = rng.uniform(*config.gamma_range)
        view = gamma_transform(view, params["gamma"])
    return view, IntensityParams(**{key: float(value) for key, value in params.items()})
