"""
Architecture settings and named presets.
"""

import math
from dataclasses import dataclass, replace
from typing import Tuple

from ..exceptions import ConfigurationError

PREDICTOR_KINDS = ("mlp", "identity")


@dataclass
class EncoderConfig:
    """
    The `network` section of a run configuration.

    The encoder is a strided convolutional stem followed by stages of 3D
    residual blocks; the projector, predictor and segmentation head
    widths live here too. Defaults describe the desk-scale preset.

    Attributes
    ----------
    preset : str
        The name of the preset the settings came from ('desk' or 'full').
    in_channels : int
        Image channels (default: 1).
    stem_channels : int
        Width of the stem convolution (default: 8).
    stem_stride : tuple of int
        Stride of the stem convolution (default: 2, 2, 2).
    blocks : tuple of int
        Residual blocks per stage (default: 1, 1).
    widths : tuple of int
        Output width of each stage (default: 8, 16).
    strides : tuple of tuple of int
        Stride of the first block of each stage (default: (1, 2, 2) and
        (2, 2, 2), for an output stride of 4, 8, 8).
    bottleneck : bool
        Whether stages use bottleneck blocks (default: false).
    projector_hidden, projector_out : int
        Projector widths (default: 32 and 16).
    predictor : str
        'mlp' for a Conv-BN-ReLU-Conv predictor, 'identity' to pass
        features through (default: 'mlp').
    predictor_hidden : int
        Hidden width of the predictor (default: 32).
    aspp_channels : int
        Width of the segmentation head's pyramid pooling branches
        (default: 16).
    aspp_rates : tuple of int
        Dilation rates of the separable pyramid branches (default: 2, 4, 8).
    bn_momentum, bn_eps : float
        Batch normalization settings (defaults: 0.1 and 1e-5).
    """

    preset: str = "desk"
    in_channels: int = 1
    stem_channels: int = 8
    stem_stride: Tuple[int, int, int] = (2, 2, 2)
    blocks: Tuple[int, ...] = (1, 1)
    widths: Tuple[int, ...] = (8, 16)
    strides: Tuple[Tuple[int, int, int], ...] = ((1, 2, 2), (2, 2, 2))
    bottleneck: bool = False
    projector_hidden: int = 32
    projector_out: int = 16
    predictor: str = "mlp"
    predictor_hidden: int = 32
    aspp_channels: int = 16
    aspp_rates: Tuple[int, ...] = (2, 4, 8)
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5

    def __post_init__(self):
        self.stem_stride = tuple(int(_) for _ in self.stem_stride)
        self.blocks = tuple(int(_) for _ in self.blocks)
        self.widths = tuple(int(_) for _ in self.widths)
        self.strides = tuple(tuple(int(s) for s in stride) for stride in self.strides)
        self.aspp_rates = tuple(int(_) for _ in self.aspp_rates)
        if not len(self.blocks) == len(self.widths) == len(self.strides):
            raise ConfigurationError(
                "Provide one block count, width and stride per stage, not "
                f"{len(self.blocks)}, {len(self.widths)} and {len(self.strides)}."
            )
        if any(len(stride) != 3 for stride in (self.stem_stride, *self.strides)):
            raise ConfigurationError("Every stride must have a depth, height and width entry.")
        if min(self.blocks, default=0) < 1 or not self.blocks:
            raise ConfigurationError(f"Every stage needs at least one block, not {self.blocks}.")
        if self.predictor not in PREDICTOR_KINDS:
            raise ConfigurationError(
                f"Provide a valid predictor—either 'mlp' or 'identity', not '{self.predictor}'."
            )
        if self.bottleneck and any(width % 4 for width in self.widths):
            raise ConfigurationError("Bottleneck stages need widths divisible by 4.")

    @property
    def output_stride(self):
        """The input-to-feature size ratio per axis."""
        return tuple(
            math.prod(axis) for axis in zip(self.stem_stride, *self.strides)
        )

    @property
    def feature_channels(self):
        return self.widths[-1]

    @classmethod
    def preset_named(cls, name, **overrides):
        """
        Build the settings of a named preset.

        Parameters
        ----------
        name : str
            'desk' (tiny, used for every test and desk run) or 'full'
            (ResNet-50-scale encoder, 4096-wide projector hidden layer).
        **overrides :
            Fields to change after applying the preset.
        """
        try:
            base = PRESETS[name]
        except KeyError:
            raise ConfigurationError(
                f"Provide a valid network preset—either 'desk' or 'full', not '{name}'."
            ) from None
        return replace(base, **overrides)


PRESETS = {
    "desk": EncoderConfig(),
    "full": EncoderConfig(
        preset="full",
        stem_channels=64,
        stem_stride=(2, 2, 2),
        blocks=(3, 4, 6, 3),
        widths=(256, 512, 1024, 2048),
        strides=((2, 2, 2), (2, 2, 2), (1, 2, 2), (1, 1, 1)),
        bottleneck=True,
        projector_hidden=4096,
        projector_out=256,
        predictor_hidden=4096,
        aspp_channels=256,
    ),
}
