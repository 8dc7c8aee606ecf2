"""
Settings shared by the training objectives.
"""

from dataclasses import dataclass

from ..exceptions import ConfigurationError


@dataclass
class LossConfig:
    """
    The `loss` section of a run configuration.

    Attributes
    ----------
    eps : float
        The norm floor of the channel normalization in the consistency
        loss (default: 1e-12).
    smooth : float
        The Dice smoothing term, added once per voxel in the denominator
        (default: 1e-5).
    num_classes : int
        Segmentation classes, background included (default: 3).
    normalize_channels : bool
        Whether the consistency loss also divides by the channel count
        (default: false).
    """

    eps: float = 1e-12
    smooth: float = 1e-5
    num_classes: int = 3
    normalize_channels: bool = False

    def __post_init__(self):
        if self.eps <= 0 or self.smooth <= 0:
            raise ConfigurationError(
                f"Provide positive 'eps' and 'smooth' values, not {self.eps} and {self.smooth}."
            )
        if self.num_classes < 1:
            raise ConfigurationError(
                f"Provide at least one class for 'num_classes', not {self.num_classes}."
            )
