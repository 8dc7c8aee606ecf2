"""
The 3D residual encoder: a strided stem followed by stages of residual
blocks.
"""

from ..exceptions import ShapeError
from ..tensor.ops import add, relu
from ..tensor.utils import AXIS_NAMES, check_rank
from .layers import (
    batchnorm,
    batchnorm_specs,
    conv,
    conv_bn_relu,
    conv_bn_relu_specs,
    conv_specs,
)

PREFIX = "encoder"


def _stage_layout(cfg):
    # (name, input width, output width, stride) for every block
    layout = []
    channels = cfg.stem_channels
    for stage, (count, width, stride) in enumerate(zip(cfg.blocks, cfg.widths, cfg.strides)):
        for block in range(count):
            name = f"{PREFIX}.stage{stage + 1}.block{block + 1}"
            layout.append((stage, name, channels, width, stride if block == 0 else (1, 1, 1)))
            channels = width
    return layout


def _block_specs(name, in_channels, out_channels, stride, cfg):
    if cfg.bottleneck:
        middle = out_channels // 4
        specs = (
            conv_bn_relu_specs(f"{name}.conv1", in_channels, middle, 1)
            + conv_bn_relu_specs(f"{name}.conv2", middle, middle, 3)
            + conv_specs(f"{name}.conv3.conv", middle, out_channels, 1)
            + batchnorm_specs(f"{name}.conv3.bn", out_channels)
        )
    else:
        specs = (
            conv_bn_relu_specs(f"{name}.conv1", in_channels, out_channels, 3)
            + conv_specs(f"{name}.conv2.conv", out_channels, out_channels, 3)
            + batchnorm_specs(f"{name}.conv2.bn", out_channels)
        )
    if tuple(stride) != (1, 1, 1) or in_channels != out_channels:
        specs += conv_specs(f"{name}.shortcut.conv", in_channels, out_channels, 1)
        specs += batchnorm_specs(f"{name}.shortcut.bn", out_channels)
    return specs


def encoder_specs(cfg):
    """Declare every encoder parameter, in forward order."""
    specs = conv_bn_relu_specs(f"{PREFIX}.stem", cfg.in_channels, cfg.stem_channels, 3)
    for _, name, in_channels, out_channels, stride in _stage_layout(cfg):
        specs += _block_specs(name, in_channels, out_channels, stride, cfg)
    return specs


def residual_block(params, name, x, stride, training, cfg):
    """
    Apply one residual block.

    The basic block is conv-BN-ReLU-conv-BN; the bottleneck block is
    1x1 conv-BN-ReLU, strided 3x3 conv-BN-ReLU, 1x1 conv-BN. Either is
    added to the (projected, when shapes change) input and rectified.
    """
    if cfg.bottleneck:
        out = conv_bn_relu(params, f"{name}.conv1", x, training, cfg)
        out = conv_bn_relu(params, f"{name}.conv2", out, training, cfg, stride=stride)
        last = f"{name}.conv3"
    else:
        out = conv_bn_relu(params, f"{name}.conv1", x, training, cfg, stride=stride)
        last = f"{name}.conv2"
    out = batchnorm(params, f"{last}.bn", conv(params, f"{last}.conv", out), training, cfg)
    shortcut = x
    if f"{name}.shortcut.conv.weight" in params:
        shortcut = conv(params, f"{name}.shortcut.conv", x, stride=stride)
        shortcut = batchnorm(params, f"{name}.shortcut.bn", shortcut, training, cfg)
    return relu(add(out, shortcut))


def check_input(x, cfg):
    """Ensure an input batch suits an encoder configuration."""
    check_rank(x, 5, "encode")
    if x.shape[1] != cfg.in_channels:
        raise ShapeError(
            f"The encoder expects {cfg.in_channels} channels on axis 1, not {x.shape[1]}."
        )
    for axis, size, stride in zip(AXIS_NAMES, x.shape[2:], cfg.output_stride):
        if size % stride:
            raise ShapeError(
                f"The input {axis} ({size}) is not divisible by the encoder's output "
                f"stride ({stride}) on that axis."
            )


def encode_stages(params, x, cfg, training=True):
    """
    Run the encoder, keeping the output of every stage.

    Returns
    -------
    features : list of Tensor
        One feature map per stage, from the shallowest to the deepest.
    """
    check_input(x, cfg)
    out = conv_bn_relu(params, f"{PREFIX}.stem", x, training, cfg, stride=cfg.stem_stride)
    features = [None] * len(cfg.widths)
    for stage, name, _, _, stride in _stage_layout(cfg):
        out = residual_block(params, name, out, stride, training, cfg)
        features[stage] = out
    return features


def encode(params, x, cfg, training=True):
    """
    Compute encoder features for a batch of views.

    Parameters
    ----------
    params : ParamStore
        A store holding the `encoder.*` parameters.
    x : Tensor
        The views, shaped (N, C, D, H, W); every spatial size must be a
        multiple of the output stride on its axis.
    cfg : EncoderConfig
        The architecture.
    training : bool
        Whether batch normalization uses (and updates) batch statistics.

    Returns
    -------
    features : Tensor
        The deepest feature map, shaped (N, widths[-1], D / sD, H / sH,
        W / sW) for output stride (sD, sH, sW).
    """
    return encode_stages(params, x, cfg, training)[-1]
