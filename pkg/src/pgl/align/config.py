"""
Settings for feature alignment during pretraining.
"""

from dataclasses import dataclass

from ..exceptions import ConfigurationError

ARMS = {
    (True, True): "with F&CS",
    (False, True): "w/o F",
    (True, False): "w/o CS",
    (False, False): "w/o F&CS",
}


@dataclass
class AlignConfig:
    """
    The `align` section of a run configuration.

    Attributes
    ----------
    use_flipalign : bool
        Whether recorded flips are undone on the feature maps (default:
        true).
    use_csalign : bool
        Whether only the region shared by both crops is compared
        (default: true). With both switches off the loss compares
        globally pooled features.
    samples_per_bin : int
        Trilinear samples per output bin and axis when extracting the
        shared region (default: 2).
    """

    use_flipalign: bool = True
    use_csalign: bool = True
    samples_per_bin: int = 2

    def __post_init__(self):
        if self.samples_per_bin < 1:
            raise ConfigurationError(
                f"Provide at least one sample per bin, not {self.samples_per_bin}."
            )

    @property
    def arm(self):
        """The name of the ablation arm the switches select."""
        return ARMS[(bool(self.use_flipalign), bool(self.use_csalign))]
