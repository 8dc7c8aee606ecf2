"""
Settings for the view augmentation pipeline.
"""

from dataclasses import dataclass
from typing import Tuple

from ..exceptions import ConfigurationError


def _check_probability(name, value):
    if not 0 <= value <= 1:
        raise ConfigurationError(f"Provide a probability for '{name}' in [0, 1], not {value}.")


def _check_range(name, bounds, lowest=None):
    low, high = bounds
    if low > high or (lowest is not None and low < lowest):
        raise ConfigurationError(f"Provide a valid range for '{name}', not {bounds}.")


@dataclass
class AugmentConfig:
    """
    The `augment` section of a run configuration.

    Attributes
    ----------
    scale_range : tuple of float
        Bounds of the per-axis crop size relative to the view size
        (default: 1.1 to 1.4).
    min_overlap : float
        The smallest share of each crop's volume that the two crops of
        a pair must have in common (default: 0.1).
    max_attempts : int
        Crop positions drawn before falling back to concentric crops
        (default: 100).
    flip_probability : float
        The probability of reversing each axis of a view (default: 0.5).
    intensity : bool
        Whether intensity operations run at all (default: true).
    noise_probability, blur_probability, brightness_probability, gamma_probability : float
        Probabilities of the four intensity operations (defaults: 0.1,
        0.2, 0.5 and 0.5).
    noise_variance : tuple of float
        Bounds of the additive noise variance (default: 0 to 0.1).
    blur_sigma : tuple of float
        Bounds of the blur kernel width in voxels (default: 0.5 to 1).
    brightness_range : tuple of float
        Bounds of the brightness factor (default: 0.75 to 1.25).
    gamma_range : tuple of float
        Bounds of the gamma exponent (default: 0.7 to 1.5).
    """

    scale_range: Tuple[float, float] = (1.1, 1.4)
    min_overlap: float = 0.1
    max_attempts: int = 100
    flip_probability: float = 0.5
    intensity: bool = True
    noise_probability: float = 0.1
    noise_variance: Tuple[float, float] = (0.0, 0.1)
    blur_probability: float = 0.2
    blur_sigma: Tuple[float, float] = (0.5, 1.0)
    brightness_probability: float = 0.5
    brightness_range: Tuple[float, float] = (0.75, 1.25)
    gamma_probability: float = 0.5
    gamma_range: Tuple[float, float] = (0.7, 1.5)

    def __post_init__(self):
        _check_range("scale_range", self.scale_range, lowest=1.0)
        _check_range("noise_variance", self.noise_variance, lowest=0.0)
        _check_range("blur_sigma", self.blur_sigma, lowest=0.0)
        _check_range("brightness_range", self.brightness_range, lowest=0.0)
        _check_range("gamma_range", self.gamma_range, lowest=0.0)
        for name in (
            "min_overlap",
            "flip_probability",
            "noise_probability",
            "blur_probability",
            "brightness_probability",
            "gamma_probability",
        ):
            _check_probability(name, getattr(self, name))
        if self.max_attempts < 1:
            raise ConfigurationError(
                f"Provide at least one crop attempt, not {self.max_attempts}."
            )

    @classmethod
    def spatial_only(cls, **kwargs):
        """Build a configuration with every intensity operation disabled."""
        return cls(intensity=False, **kwargs)
