"""
The projector and predictor heads of the pretraining networks.

Both are Conv-BN-ReLU-Conv stacks of 1x1x1 convolutions, so they keep
the spatial layout of the features they transform.
"""

from ..exceptions import ShapeError
from .layers import conv, conv_bn_relu, conv_bn_relu_specs, conv_specs


def _mlp_specs(prefix, in_channels, hidden, out_channels):
    return conv_bn_relu_specs(f"{prefix}.layer1", in_channels, hidden, 1) + conv_specs(
        f"{prefix}.layer2", hidden, out_channels, 1, bias=True
    )


def projector_specs(cfg):
    return _mlp_specs("projector", cfg.feature_channels, cfg.projector_hidden, cfg.projector_out)


def predictor_specs(cfg):
    if cfg.predictor == "identity":
        return []
    return _mlp_specs("predictor", cfg.projector_out, cfg.predictor_hidden, cfg.projector_out)


def _mlp(params, prefix, f, training, cfg):
    expected = params[f"{prefix}.layer1.conv.weight"].shape[1]
    if f.shape[1] != expected:
        raise ShapeError(
            f"The {prefix} expects {expected} channels on axis 1, not {f.shape[1]}."
        )
    hidden = conv_bn_relu(params, f"{prefix}.layer1", f, training, cfg)
    return conv(params, f"{prefix}.layer2", hidden)


def project(params, f, cfg, training=True):
    """Map encoder features into the consistency space (spatial shape is kept)."""
    return _mlp(params, "projector", f, training, cfg)


def predict(params, f, cfg, training=True):
    """
    Apply the online-only predictor to aligned projector features.

    With an 'identity' predictor the features are returned unchanged.
    """
    if cfg.predictor == "identity":
        return f
    return _mlp(params, "predictor", f, training, cfg)
