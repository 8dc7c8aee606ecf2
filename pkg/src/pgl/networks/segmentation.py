"""
The downstream segmentation network: the pretrained encoder followed by
a pyramid pooling module and a skip-connected decoder.
"""

from ..exceptions import ConfigurationError
from ..tensor.ops import add, concat, global_avg_pool, relu, upsample
from .encoder import encode_stages, encoder_specs
from .layers import (
    conv,
    conv_bn_relu,
    conv_bn_relu_specs,
    conv_specs,
    conv_transpose,
    conv_transpose_specs,
    separable,
    separable_residual,
    separable_specs,
)

OBJECTIVES = ("binary", "multiclass")
HEAD_INIT = "kaiming_uniform"


def head_channels(num_classes, objective="multiclass"):
    """Return the number of logits the classifier emits."""
    if objective not in OBJECTIVES:
        raise ConfigurationError(
            f"Provide a valid objective—either 'binary' or 'multiclass', not '{objective}'."
        )
    if objective == "binary":
        if num_classes != 2:
            raise ConfigurationError(
                f"The binary objective needs exactly 2 classes, not {num_classes}."
            )
        return 1
    if num_classes < 2:
        raise ConfigurationError(f"Segment at least 2 classes, not {num_classes}.")
    return num_classes


def _decoder_levels(cfg):
    # Skip targets, deepest first: every stage except the last
    return list(reversed(range(len(cfg.widths) - 1)))


def segmentation_specs(cfg, out_channels):
    """Declare the encoder, pyramid pooling, decoder and classifier parameters."""
    specs = encoder_specs(cfg)
    features, width = cfg.feature_channels, cfg.aspp_channels
    specs += conv_bn_relu_specs("segmentation.aspp.branch", features, width, 1, init=HEAD_INIT)
    specs += conv_specs("segmentation.aspp.pooled", features, width, 1, bias=True, init=HEAD_INIT)
    for rate in cfg.aspp_rates:
        specs += separable_specs(f"segmentation.aspp.rate{rate}", features, width)
    fused = width * (2 + len(cfg.aspp_rates))
    specs += conv_bn_relu_specs("segmentation.aspp.fuse", fused, width, 1, init=HEAD_INIT)
    channels = width
    for level in _decoder_levels(cfg):
        skip = cfg.widths[level]
        stride = cfg.strides[level + 1]
        specs += conv_transpose_specs(
            f"segmentation.decoder.up{level + 1}", channels, skip, stride
        )
        specs += separable_specs(f"segmentation.decoder.block{level + 1}", skip, skip)
        channels = skip
    specs += conv_specs(
        "segmentation.classifier", channels, out_channels, 1, bias=True, init=HEAD_INIT
    )
    return specs


def aspp(params, f, training, cfg):
    """Atrous spatial pyramid pooling over the deepest encoder features."""
    prefix = "segmentation.aspp"
    branches = [conv_bn_relu(params, f"{prefix}.branch", f, training, cfg)]
    pooled = relu(conv(params, f"{prefix}.pooled", global_avg_pool(f)))
    branches.append(upsample(pooled, f.shape[2:]))
    for rate in cfg.aspp_rates:
        branches.append(
            relu(separable(params, f"{prefix}.rate{rate}", f, training, cfg, dilation=rate))
        )
    return conv_bn_relu(params, f"{prefix}.fuse", concat(branches), training, cfg)


def segment(
    params, x, cfg, num_classes, training=True, objective="multiclass", encoder_training=None
):
    """
    Compute segmentation logits for a batch of patches.

    Parameters
    ----------
    params : ParamStore
        A store built by `build_segmentation`.
    x : Tensor
        The patches, shaped (N, C, D, H, W) with every spatial size a
        multiple of the encoder output stride.
    cfg : EncoderConfig
        The architecture.
    num_classes : int
        The number of classes, background included.
    training : bool
        Whether batch normalization uses batch statistics.
    objective : str
        'multiclass' for one logit per class or 'binary' for a single
        foreground logit (requires two classes).
    encoder_training : bool, optional
        A separate batch normalization mode for the encoder (default:
        `training`); a frozen encoder runs in eval mode.

    Returns
    -------
    logits : Tensor
        Unactivated scores at input resolution, shaped (N, K, D, H, W)
        where K is `num_classes` (or 1 for the binary objective).
    """
    expected = head_channels(num_classes, objective)
    if encoder_training is None:
        encoder_training = training
    stages = encode_stages(params, x, cfg, encoder_training)
    out = aspp(params, stages[-1], training, cfg)
    for level in _decoder_levels(cfg):
        out = conv_transpose(
            params, f"segmentation.decoder.up{level + 1}", out, cfg.strides[level + 1]
        )
        name = f"segmentation.decoder.block{level + 1}"
        out = separable_residual(params, name, add(out, stages[level]), training, cfg)
    logits = conv(params, "segmentation.classifier", out)
    if logits.shape[1] != expected:
        raise ConfigurationError(
            f"The classifier emits {logits.shape[1]} channels, but {expected} are needed "
            f"for {num_classes} classes with the {objective} objective."
        )
    return upsample(logits, x.shape[2:])
