"""
Parameter declarations and forward helpers shared by every network.

Networks are described twice: as a list of `ParamSpec` declarations
(names, shapes, roles and initializers), and as forward functions that
look parameters up by the same names.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.stats import truncnorm

from ..tensor.ops import add, batchnorm3d, conv3d, conv_transpose3d, relu
from ..tensor.utils import as_triple

ROLES = ("weight", "bias", "norm-scale", "norm-shift", "running-stat")
INITIALIZERS = ("truncated_normal", "kaiming_uniform", "zeros", "ones")


@dataclass(frozen=True)
class ParamSpec:
    """
    The declaration of one named parameter.

    Attributes
    ----------
    name : str
        The dotted parameter name (e.g. 'encoder.stem.conv.weight').
    shape : tuple of int
        The parameter shape.
    role : str
        One of 'weight', 'bias', 'norm-scale', 'norm-shift' or
        'running-stat'.
    init : str
        One of 'truncated_normal' (std 0.02, cut at two deviations),
        'kaiming_uniform', 'zeros' or 'ones'.
    """

    name: str
    shape: Tuple[int, ...]
    role: str
    init: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"Provide a valid parameter role, not '{self.role}'.")
        if self.init not in INITIALIZERS:
            raise ValueError(f"Provide a valid initializer, not '{self.init}'.")

    @property
    def size(self):
        return int(np.prod(self.shape))

    def initialize(self, rng, dtype=np.float32):
        """Draw initial values for the parameter."""
        if self.init == "zeros":
            return np.zeros(self.shape, dtype=dtype)
        if self.init == "ones":
            return np.ones(self.shape, dtype=dtype)
        if self.init == "truncated_normal":
            values = truncnorm.rvs(-2.0, 2.0, scale=0.02, size=self.shape, random_state=rng)
            return values.astype(dtype)
        if self.init == "kaiming_uniform":
            # Fan-in of a conv weight (O, I, kD, kH, kW) is I * kD * kH * kW
            fan_in = int(np.prod(self.shape[1:]))
            bound = np.sqrt(6.0 / fan_in)
            return rng.uniform(-bound, bound, size=self.shape).astype(dtype)
        raise NotImplementedError


def conv_specs(
    name, in_channels, out_channels, kernel, groups=1, bias=False, init="truncated_normal"
):
    """Declare a convolution weight (and optionally its bias)."""
    kernel = (kernel,) * 3 if isinstance(kernel, int) else tuple(kernel)
    specs = [
        ParamSpec(
            f"{name}.weight", (out_channels, in_channels // groups, *kernel), "weight", init
        )
    ]
    if bias:
        specs.append(ParamSpec(f"{name}.bias", (out_channels,), "bias", "zeros"))
    return specs


def conv_transpose_specs(name, in_channels, out_channels, kernel, init="kaiming_uniform"):
    """Declare a transposed convolution weight, shaped (C, O, kD, kH, kW), and bias."""
    kernel = (kernel,) * 3 if isinstance(kernel, int) else tuple(kernel)
    return [
        ParamSpec(f"{name}.weight", (in_channels, out_channels, *kernel), "weight", init),
        ParamSpec(f"{name}.bias", (out_channels,), "bias", "zeros"),
    ]


def batchnorm_specs(name, channels):
    return [
        ParamSpec(f"{name}.scale", (channels,), "norm-scale", "ones"),
        ParamSpec(f"{name}.shift", (channels,), "norm-shift", "zeros"),
        ParamSpec(f"{name}.running_mean", (channels,), "running-stat", "zeros"),
        ParamSpec(f"{name}.running_var", (channels,), "running-stat", "ones"),
    ]


def conv(params, name, x, stride=1, dilation=1, groups=1):
    """Apply a named convolution with 'same' padding for odd kernels."""
    weight = params[f"{name}.weight"]
    dilation = as_triple(dilation, "dilation", minimum=1)
    padding = tuple(d * (k - 1) // 2 for d, k in zip(dilation, weight.shape[2:]))
    return conv3d(
        x,
        weight,
        params.get(f"{name}.bias"),
        stride=stride,
        padding=padding,
        dilation=dilation,
        groups=groups,
    )


def conv_transpose(params, name, x, stride):
    return conv_transpose3d(
        x, params[f"{name}.weight"], params.get(f"{name}.bias"), stride=stride
    )


def batchnorm(params, name, x, training, cfg):
    return batchnorm3d(
        x,
        params[f"{name}.scale"],
        params[f"{name}.shift"],
        params[f"{name}.running_mean"].data,
        params[f"{name}.running_var"].data,
        momentum=cfg.bn_momentum,
        eps=cfg.bn_eps,
        training=training,
    )


def conv_bn_relu(params, name, x, training, cfg, stride=1, dilation=1, groups=1):
    out = conv(params, f"{name}.conv", x, stride=stride, dilation=dilation, groups=groups)
    return relu(batchnorm(params, f"{name}.bn", out, training, cfg))


def conv_bn_relu_specs(name, in_channels, out_channels, kernel, init="truncated_normal"):
    convolution = conv_specs(f"{name}.conv", in_channels, out_channels, kernel, init=init)
    return convolution + batchnorm_specs(f"{name}.bn", out_channels)


def separable_specs(name, channels, out_channels, init="kaiming_uniform"):
    """Declare a channelwise 3x3x3 convolution followed by a pointwise one, then BN."""
    return (
        conv_specs(f"{name}.depthwise", channels, channels, 3, groups=channels, init=init)
        + conv_specs(f"{name}.pointwise", channels, out_channels, 1, init=init)
        + batchnorm_specs(f"{name}.bn", out_channels)
    )


def separable(params, name, x, training, cfg, dilation=1):
    channels = x.shape[1]
    out = conv(params, f"{name}.depthwise", x, dilation=dilation, groups=channels)
    out = conv(params, f"{name}.pointwise", out)
    return batchnorm(params, f"{name}.bn", out, training, cfg)


def separable_residual(params, name, x, training, cfg):
    """A separable convolution block with an identity shortcut."""
    return relu(add(x, separable(params, name, x, training, cfg)))
