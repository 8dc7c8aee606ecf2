"""
Differentiable operations on `Tensor` objects.

Every operation works on the NCDHW layout used for volumetric feature
maps. No implicit broadcasting is performed apart from per-channel
parameters (convolution biases and normalization scale/shift).
"""

import itertools

import numpy as np

from ..exceptions import ShapeError
from .core import Function, Tensor
from .utils import AXIS_NAMES, as_triple, check_rank, check_same_shape


def conv_output_size(size, kernel, stride, padding, dilation):
    return (size + 2 * padding - dilation * (kernel - 1) - 1) // stride + 1


def _window(offsets, dilation, stride, out_shape):
    # Strided slices selecting the inputs that meet one kernel tap
    return tuple(
        slice(o * d, o * d + s * (n - 1) + 1, s)
        for o, d, s, n in zip(offsets, dilation, stride, out_shape)
    )


def _group(array, groups):
    n, c = array.shape[:2]
    return array.reshape(n, groups, c // groups, *array.shape[2:])


def _conv_forward(x, weight, stride, padding, dilation, groups):
    n, _, *spatial = x.shape
    out_channels, _, *kernel = weight.shape
    out_shape = [
        conv_output_size(*args) for args in zip(spatial, kernel, stride, padding, dilation)
    ]
    padded = np.pad(x, ((0, 0), (0, 0)) + tuple((p, p) for p in padding))
    grouped = _group(padded, groups)
    weight_g = weight.reshape(groups, out_channels // groups, *weight.shape[1:])
    out = np.zeros(
        (n, groups, out_channels // groups, *out_shape), dtype=np.result_type(x, weight)
    )
    for offsets in itertools.product(*(range(k) for k in kernel)):
        window = (slice(None),) * 3 + _window(offsets, dilation, stride, out_shape)
        out += np.einsum(
            "ngcdhw,goc->ngodhw",
            grouped[window],
            weight_g[(Ellipsis, *offsets)],
            optimize=True,
        )
    return out.reshape(n, out_channels, *out_shape)


def _conv_input_grad(grad, weight, input_shape, stride, padding, dilation, groups):
    n, channels, *spatial = input_shape
    out_channels, _, *kernel = weight.shape
    out_shape = grad.shape[2:]
    padded_shape = [size + 2 * p for size, p in zip(spatial, padding)]
    grad_padded = np.zeros(
        (n, groups, channels // groups, *padded_shape), dtype=np.result_type(grad, weight)
    )
    grad_g = _group(grad, groups)
    weight_g = weight.reshape(groups, out_channels // groups, *weight.shape[1:])
    for offsets in itertools.product(*(range(k) for k in kernel)):
        window = (slice(None),) * 3 + _window(offsets, dilation, stride, out_shape)
        grad_padded[window] += np.einsum(
            "ngodhw,goc->ngcdhw", grad_g, weight_g[(Ellipsis, *offsets)], optimize=True
        )
    crop = tuple(slice(p, p + size) for p, size in zip(padding, spatial))
    grad_padded = grad_padded.reshape(n, channels, *padded_shape)
    return grad_padded[(slice(None), slice(None), *crop)]


def _conv_weight_grad(grad, x, weight_shape, stride, padding, dilation, groups):
    out_channels, in_per_group, *kernel = weight_shape
    out_shape = grad.shape[2:]
    padded = np.pad(x, ((0, 0), (0, 0)) + tuple((p, p) for p in padding))
    grouped = _group(padded, groups)
    grad_g = _group(grad, groups)
    grad_weight = np.zeros(
        (groups, out_channels // groups, in_per_group, *kernel),
        dtype=np.result_type(grad, x),
    )
    for offsets in itertools.product(*(range(k) for k in kernel)):
        window = (slice(None),) * 3 + _window(offsets, dilation, stride, out_shape)
        grad_weight[(Ellipsis, *offsets)] = np.einsum(
            "ngodhw,ngcdhw->goc", grad_g, grouped[window], optimize=True
        )
    return grad_weight.reshape(weight_shape)


def _check_conv_operands(x, weight, bias, groups, operation, in_axis):
    check_rank(x, 5, operation)
    check_rank(weight, 5, operation, layout="weight OIDHW")
    channels = x.shape[1]
    expected = weight.shape[in_axis] * (groups if in_axis == 1 else 1)
    if channels != expected:
        raise ShapeError(
            f"'{operation}' received {channels} input channels on axis 1, but the "
            f"weight expects {expected} (groups={groups})."
        )
    if bias is not None and bias.shape[0] != _bias_channels(weight, groups, in_axis):
        raise ShapeError(
            f"'{operation}' bias has {bias.shape[0]} entries on axis 0, but the "
            f"weight produces {_bias_channels(weight, groups, in_axis)} channels."
        )


def _bias_channels(weight, groups, in_axis):
    return weight.shape[0] if in_axis == 1 else weight.shape[1] * groups


class Conv3d(Function):
    def forward(self, x, weight, *bias, stride, padding, dilation, groups):
        self.config = (stride, padding, dilation, groups)
        self.input_shape = x.shape
        self.weight_shape = weight.shape
        self.has_bias = bool(bias)
        out = _conv_forward(x, weight, stride, padding, dilation, groups)
        if bias:
            out += bias[0].reshape(1, -1, 1, 1, 1)
        return out

    def backward(self, grad):
        x, weight = self.inputs[0].data, self.inputs[1].data
        grad_x = grad_w = None
        if self.inputs[0].requires_grad:
            grad_x = _conv_input_grad(grad, weight, self.input_shape, *self.config)
        if self.inputs[1].requires_grad:
            grad_w = _conv_weight_grad(grad, x, self.weight_shape, *self.config)
        if self.has_bias:
            return grad_x, grad_w, grad.sum(axis=(0, 2, 3, 4))
        return grad_x, grad_w


def conv3d(x, weight, bias=None, stride=1, padding=0, dilation=1, groups=1):
    """
    Apply a 3D convolution (cross-correlation) to an NCDHW tensor.

    Parameters
    ----------
    x : Tensor
        The input, shaped (N, C, D, H, W).
    weight : Tensor
        The kernel, shaped (O, C / groups, kD, kH, kW).
    bias : Tensor, optional
        One value per output channel.
    stride, padding, dilation : int or sequence of int
        Per-axis settings (at least 1, 0 and 1, respectively).
    groups : int
        The number of channel groups (equal to C for a channelwise
        convolution).

    Returns
    -------
    output : Tensor
        The output, with each spatial size equal to
        ``floor((in + 2 * pad - dilation * (k - 1) - 1) / stride) + 1``.
    """
    stride = as_triple(stride, "stride", minimum=1)
    padding = as_triple(padding, "padding", minimum=0)
    dilation = as_triple(dilation, "dilation", minimum=1)
    _check_conv_operands(x, weight, bias, groups, "conv3d", in_axis=1)
    for axis, size, k, s, p, d in zip(
        AXIS_NAMES, x.shape[2:], weight.shape[2:], stride, padding, dilation
    ):
        if conv_output_size(size, k, s, p, d) < 1:
            raise ShapeError(
                f"'conv3d' input is too small on the {axis} axis: size {size} with "
                f"kernel {k}, padding {p} and dilation {d}."
            )
    operands = (x, weight) if bias is None else (x, weight, bias)
    return Conv3d.apply(
        *operands, stride=stride, padding=padding, dilation=dilation, groups=groups
    )


class ConvTranspose3d(Function):
    def forward(self, x, weight, *bias, stride, padding, dilation, groups, output_shape):
        self.config = (stride, padding, dilation, groups)
        self.has_bias = bool(bias)
        # A transposed convolution is the input-gradient of the matching convolution
        out = _conv_input_grad(x, weight, output_shape, *self.config)
        if bias:
            out = out + bias[0].reshape(1, -1, 1, 1, 1)
        return out

    def backward(self, grad):
        x, weight = self.inputs[0].data, self.inputs[1].data
        grad_x = grad_w = None
        if self.inputs[0].requires_grad:
            grad_x = _conv_forward(grad, weight, *self.config)
        if self.inputs[1].requires_grad:
            grad_w = _conv_weight_grad(x, grad, weight.shape, *self.config)
        if self.has_bias:
            return grad_x, grad_w, grad.sum(axis=(0, 2, 3, 4))
        return grad_x, grad_w


def conv_transpose3d(
    x, weight, bias=None, stride=1, padding=0, dilation=1, groups=1, output_padding=0
):
    """
    Apply a 3D transposed convolution (used for learned upsampling).

    The weight is shaped (C, O / groups, kD, kH, kW). Each output size is
    ``(in - 1) * stride - 2 * pad + dilation * (k - 1) + 1 + output_padding``.
    """
    stride = as_triple(stride, "stride", minimum=1)
    padding = as_triple(padding, "padding", minimum=0)
    dilation = as_triple(dilation, "dilation", minimum=1)
    output_padding = as_triple(output_padding, "output_padding", minimum=0)
    _check_conv_operands(x, weight, bias, groups, "conv_transpose3d", in_axis=0)
    spatial = [
        (size - 1) * s - 2 * p + d * (k - 1) + 1 + extra
        for size, k, s, p, d, extra in zip(
            x.shape[2:], weight.shape[2:], stride, padding, dilation, output_padding
        )
    ]
    output_shape = (x.shape[0], weight.shape[1] * groups, *spatial)
    operands = (x, weight) if bias is None else (x, weight, bias)
    return ConvTranspose3d.apply(
        *operands,
        stride=stride,
        padding=padding,
        dilation=dilation,
        groups=groups,
        output_shape=output_shape,
    )


class BatchNorm3d(Function):
    def forward(
        self, x, gamma, beta, *, running_mean, running_var, momentum, eps, training
    ):
        axes = (0, 2, 3, 4)
        per_channel = (1, -1, 1, 1, 1)
        count = x.size // x.shape[1]
        if training:
            if count < 2:
                raise ShapeError(
                    "'batchnorm3d' needs more than one value per channel across the "
                    f"batch and spatial axes in training mode, not shape {x.shape}."
                )
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            running_mean *= 1.0 - momentum
            running_mean += momentum * mean.astype(running_mean.dtype)
            running_var *= 1.0 - momentum
            running_var += momentum * (var * count / (count - 1)).astype(running_var.dtype)
        else:
            mean = running_mean.astype(x.dtype)
            var = running_var.astype(x.dtype)
        self.training = training
        self.count = count
        self.inv_std = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
        self.x_hat = (x - mean.reshape(per_channel)) * self.inv_std.reshape(per_channel)
        return gamma.reshape(per_channel) * self.x_hat + beta.reshape(per_channel)

    def backward(self, grad):
        axes = (0, 2, 3, 4)
        per_channel = (1, -1, 1, 1, 1)
        gamma = self.inputs[1].data
        grad_gamma = (grad * self.x_hat).sum(axis=axes)
        grad_beta = grad.sum(axis=axes)
        grad_x_hat = grad * gamma.reshape(per_channel)
        if self.training:
            grad_x = (
                self.count * grad_x_hat
                - grad_x_hat.sum(axis=axes).reshape(per_channel)
                - self.x_hat * (grad_x_hat * self.x_hat).sum(axis=axes).reshape(per_channel)
            ) * (self.inv_std / self.count).reshape(per_channel)
        else:
            grad_x = grad_x_hat * self.inv_std.reshape(per_channel)
        return grad_x, grad_gamma, grad_beta


def batchnorm3d(x, gamma, beta, running_mean, running_var, momentum=0.1, eps=1e-5,
                training=True):
    """
    Normalize each channel of an NCDHW tensor.

    In training mode the batch statistics over (N, D, H, W) are used and
    the running statistics (NumPy arrays) are updated in place; in eval
    mode the running statistics are used.

    Parameters
    ----------
    x : Tensor
        The input.
    gamma, beta : Tensor
        The per-channel scale and shift.
    running_mean, running_var : numpy.ndarray
        The per-channel running statistics.
    momentum : float
        The weight of the current batch in the running statistics.
    eps : float
        The variance guard (must be positive).
    training : bool
        Whether to normalize with batch statistics.
    """
    check_rank(x, 5, "batchnorm3d")
    if eps <= 0:
        raise ValueError(f"Provide a positive 'eps', not {eps}.")
    for name, param in (("gamma", gamma), ("beta", beta)):
        if param.shape != (x.shape[1],):
            raise ShapeError(
                f"'batchnorm3d' {name} has shape {param.shape}, but the input has "
                f"{x.shape[1]} channels on axis 1."
            )
    return BatchNorm3d.apply(
        x,
        gamma,
        beta,
        running_mean=running_mean,
        running_var=running_var,
        momentum=momentum,
        eps=eps,
        training=training,
    )


class ReLU(Function):
    def forward(self, x):
        self.mask = x > 0
        # NaN stays NaN
        return np.maximum(x, 0).astype(x.dtype, copy=False)

    def backward(self, grad):
        return np.where(self.mask, grad, 0)


def relu(x):
    """Rectify elementwise; the gradient at exactly zero is zero."""
    return ReLU.apply(x)


class Add(Function):
    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        return grad, grad


def add(a, b):
    check_same_shape(a, b, "add")
    return Add.apply(a, b)


class Subtract(Function):
    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        return grad, -grad


def subtract(a, b):
    check_same_shape(a, b, "subtract")
    return Subtract.apply(a, b)


class Multiply(Function):
    def forward(self, a, b):
        return a * b

    def backward(self, grad):
        a, b = (tensor.data for tensor in self.inputs)
        return grad * b, grad * a


def multiply(a, b):
    check_same_shape(a, b, "multiply")
    return Multiply.apply(a, b)


class Divide(Function):
    def forward(self, a, b):
        return a / b

    def backward(self, grad):
        a, b = (tensor.data for tensor in self.inputs)
        return grad / b, -grad * a / (b * b)


def divide(a, b):
    check_same_shape(a, b, "divide")
    return Divide.apply(a, b)


class Scale(Function):
    def forward(self, x, factor):
        self.factor = factor
        return (x * factor).astype(x.dtype)

    def backward(self, grad):
        return grad * self.factor


def scale(x, factor):
    return Scale.apply(x, factor=float(factor))


class AddScalar(Function):
    def forward(self, x, value):
        return (x + value).astype(x.dtype)

    def backward(self, grad):
        return grad


def add_scalar(x, value):
    return AddScalar.apply(x, value=float(value))


class Square(Function):
    def forward(self, x):
        return x * x

    def backward(self, grad):
        return 2 * grad * self.inputs[0].data


def square(x):
    return Square.apply(x)


class ClampedLog(Function):
    def forward(self, x, floor):
        self.mask = x > floor
        return np.log(np.maximum(x, floor)).astype(x.dtype)

    def backward(self, grad):
        x = self.inputs[0].data
        return np.where(self.mask, grad / np.where(self.mask, x, 1), 0)


def clamped_log(x, floor=1e-7):
    """Take the natural logarithm of ``max(x, floor)``."""
    return ClampedLog.apply(x, floor=floor)


class Sigmoid(Function):
    def forward(self, x):
        self.out = (0.5 * (1.0 + np.tanh(0.5 * x))).astype(x.dtype)
        return self.out

    def backward(self, grad):
        return grad * self.out * (1 - self.out)


def sigmoid(x):
    return Sigmoid.apply(x)


class Softmax(Function):
    def forward(self, x):
        shifted = np.exp(x - x.max(axis=1, keepdims=True))
        self.out = shifted / shifted.sum(axis=1, keepdims=True)
        return self.out

    def backward(self, grad):
        return self.out * (grad - (grad * self.out).sum(axis=1, keepdims=True))


def softmax(x):
    """Apply a softmax across the channel axis."""
    return Softmax.apply(x)


class Total(Function):
    def forward(self, x):
        self.input_shape = x.shape
        return np.asarray(x.sum(), dtype=x.dtype)

    def backward(self, grad):
        return np.broadcast_to(grad, self.input_shape).copy()


def total(x):
    """Sum every element into a scalar."""
    return Total.apply(x)


def mean(x):
    return scale(total(x), 1.0 / x.size)


class Reshape(Function):
    def forward(self, x, shape):
        self.input_shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return grad.reshape(self.input_shape)


def reshape(x, shape):
    return Reshape.apply(x, shape=tuple(shape))


class Concat(Function):
    def forward(self, *arrays, axis):
        self.axis = axis
        self.sizes = [array.shape[axis] for array in arrays]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        bounds = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, bounds, axis=self.axis))


def concat(tensors, axis=1):
    """Join tensors along an existing axis (channels by default)."""
    first = tensors[0]
    for other in tensors[1:]:
        for dim, (a, b) in enumerate(zip(first.shape, other.shape)):
            if dim != axis and a != b:
                raise ShapeError(
                    f"'concat' operands differ on axis {dim}: {a} vs {b}."
                )
    return Concat.apply(*tensors, axis=axis)


class Take(Function):
    def forward(self, x, index):
        self.index = index
        self.input_shape = x.shape
        return x[index : index + 1].copy()

    def backward(self, grad):
        grad_x = np.zeros(self.input_shape, dtype=grad.dtype)
        grad_x[self.index : self.index + 1] = grad
        return grad_x


def take(x, index):
    """Select one batch element, keeping the batch axis."""
    return Take.apply(x, index=int(index))


class Flip(Function):
    def forward(self, x, axes):
        self.axes = axes
        return np.flip(x, axis=axes).copy() if axes else x.copy()

    def backward(self, grad):
        return np.flip(grad, axis=self.axes).copy() if self.axes else grad


def flip(x, axes):
    """Reverse the given axes."""
    return Flip.apply(x, axes=tuple(axes))


class GlobalAvgPool(Function):
    def forward(self, x):
        self.input_shape = x.shape
        self.count = np.prod(x.shape[2:])
        return x.mean(axis=(2, 3, 4), keepdims=True)

    def backward(self, grad):
        return np.broadcast_to(grad / self.count, self.input_shape).copy()


def global_avg_pool(x):
    """Average each channel over the spatial axes, keeping unit axes."""
    check_rank(x, 5, "global_avg_pool")
    return GlobalAvgPool.apply(x)


class BlockMean(Function):
    def forward(self, x, size):
        self.size = size
        n, c, *spatial = x.shape
        blocks = []
        for extent, s in zip(spatial, size):
            blocks += [extent // s, s]
        return x.reshape(n, c, *blocks).mean(axis=(3, 5, 7))

    def backward(self, grad):
        expanded = grad / np.prod(self.size)
        for axis, s in zip((2, 3, 4), self.size):
            expanded = np.repeat(expanded, s, axis=axis)
        return expanded


def block_mean(x, size):
    """
    Average non-overlapping blocks of an NCDHW tensor.

    Every spatial size must be a multiple of the block size on its axis;
    the output spatial shape is the input shape divided by `size`.
    """
    size = as_triple(size, "size", minimum=1)
    check_rank(x, 5, "block_mean")
    for axis, extent, s in zip(AXIS_NAMES, x.shape[2:], size):
        if extent % s:
            raise ShapeError(
                f"'block_mean' blocks of {s} do not tile the {axis} axis of size {extent}."
            )
    return BlockMean.apply(x, size=size)


class StopGradient(Function):
    stop_gradient = True

    def forward(self, x):
        return x

    def backward(self, grad):
        return None


def stop_gradient(x):
    """Pass values through while blocking gradient propagation."""
    return StopGradient.apply(x)


def _corner_weights(points, spatial):
    # Clamp to the border, then split into integer cells and fractions
    upper = np.asarray(spatial, dtype=points.dtype) - 1
    clamped = np.clip(points, 0, upper)
    low = np.floor(clamped).astype(np.int64)
    low = np.minimum(low, np.asarray(spatial) - 1)
    high = np.minimum(low + 1, np.asarray(spatial) - 1)
    frac = clamped - low
    corners = []
    for choice in itertools.product((0, 1), repeat=3):
        index = tuple(
            high[..., axis] if pick else low[..., axis] for axis, pick in enumerate(choice)
        )
        weight = np.ones(points.shape[:-1], dtype=points.dtype)
        for axis, pick in enumerate(choice):
            weight = weight * (frac[..., axis] if pick else 1 - frac[..., axis])
        corners.append((index, weight))
    return corners


def trilinear_interpolate(volume, points):
    """
    Interpolate a (C, D, H, W) or (D, H, W) array at continuous points.

    Parameters
    ----------
    volume : numpy.ndarray
        The array to sample. Voxel ``i`` has its center at coordinate ``i``.
    points : numpy.ndarray
        Coordinates shaped (P, 3) in (depth, height, width) order.
        Out-of-range coordinates are clamped to the border.

    Returns
    -------
    values : numpy.ndarray
        Values shaped (C, P) (or (P,) for a 3D input).
    """
    points = np.asarray(points, dtype=np.float64)
    spatial = volume.shape[-3:]
    values = 0
    for index, weight in _corner_weights(points, spatial):
        values = values + volume[(Ellipsis, *index)] * weight.astype(volume.dtype)
    if not points.size:
        return np.zeros(volume.shape[:-3] + (0,), dtype=volume.dtype)
    return np.asarray(values, dtype=volume.dtype)


class TrilinearSample(Function):
    def forward(self, x, points):
        self.points = points
        self.input_shape = x.shape
        return np.stack([trilinear_interpolate(x[n], points[n]) for n in range(x.shape[0])])

    def backward(self, grad):
        grad_x = np.zeros(self.input_shape, dtype=grad.dtype)
        spatial = self.input_shape[2:]
        for n in range(self.input_shape[0]):
            points = np.asarray(self.points[n], dtype=np.float64)
            for index, weight in _corner_weights(points, spatial):
                np.add.at(
                    grad_x[n], (slice(None), *index), grad[n] * weight.astype(grad.dtype)
                )
        return grad_x


def trilinear_sample(x, points):
    """
    Sample an NCDHW tensor at continuous (depth, height, width) points.

    Values blend the 8 neighboring voxels (voxel ``i`` has its center at
    coordinate ``i``; coordinates outside the grid are clamped to the
    border). The result is differentiable with respect to the sampled
    values but not the coordinates.

    Parameters
    ----------
    x : Tensor
        The input, shaped (N, C, D, H, W).
    points : numpy.ndarray
        Coordinates shaped (P, 3), shared by every batch element, or
        (N, P, 3), one set per batch element.

    Returns
    -------
    samples : Tensor
        Values shaped (N, C, P).
    """
    check_rank(x, 5, "trilinear_sample")
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 2:
        points = np.broadcast_to(points.reshape(-1, 3), (x.shape[0], len(points), 3))
    if points.shape[0] != x.shape[0] or points.shape[-1] != 3:
        raise ShapeError(
            f"'trilinear_sample' points of shape {points.shape} do not match a batch of "
            f"{x.shape[0]} with (depth, height, width) coordinates."
        )
    return TrilinearSample.apply(x, points=points)


def resize_grid(in_shape, out_shape):
    """
    Map the voxel centers of an output grid onto an input grid.

    Output voxel ``j`` covers ``[j, j + 1)`` of the output box; its center
    maps to ``(j + 0.5) * in / out - 0.5`` in input voxel coordinates.

    Returns
    -------
    points : numpy.ndarray
        Coordinates shaped (prod(out_shape), 3).
    """
    axes = [
        (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        for n_in, n_out in zip(in_shape, out_shape)
    ]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([axis.ravel() for axis in grid], axis=-1)


def upsample(x, size):
    """Resize the spatial axes of an NCDHW tensor with trilinear sampling."""
    size = as_triple(size, "size", minimum=1)
    points = resize_grid(x.shape[2:], size)
    samples = trilinear_sample(x, points)
    return reshape(samples, (x.shape[0], x.shape[1], *size))


class L2Normalize(Function):
    def forward(self, x, eps):
        norm = np.sqrt((x * x).sum(axis=1, keepdims=True))
        self.above = norm > eps
        self.denominator = np.maximum(norm, eps).astype(x.dtype)
        self.out = x / self.denominator
        return self.out

    def backward(self, grad):
        projection = (grad * self.out).sum(axis=1, keepdims=True)
        scaled = np.where(self.above, grad - self.out * projection, grad)
        return scaled / self.denominator


def l2_normalize(x, eps=1e-12):
    """
    Divide each channel vector by ``max(norm, eps)``.

    The norm is taken along axis 1 at every (n, d, h, w) position.
    """
    if eps <= 0:
        raise ValueError(f"Provide a positive 'eps', not {eps}.")
    return L2Normalize.apply(x, eps=eps)


def as_tensor(data, dtype=None):
    """Wrap data in an untracked tensor (tensors pass through)."""
    if isinstance(data, Tensor):
        return data
    return Tensor(data, dtype=dtype)
