"""
Joint Dice and cross-entropy objectives for segmentation fine-tuning.
"""

import numpy as np

from ..exceptions import ConfigurationError, ShapeError
from ..tensor.core import Tensor
from ..tensor.ops import (
    add,
    add_scalar,
    clamped_log,
    divide,
    multiply,
    scale,
    total,
)
from ..tensor.utils import check_same_shape

LOG_FLOOR = 1e-7


def one_hot(labels, num_classes, dtype=np.float32):
    """
    Expand integer label maps into per-class indicator channels.

    Parameters
    ----------
    labels : numpy.ndarray
        Labels shaped (N, D, H, W) with values in [0, num_classes).
    num_classes : int
        The number of classes.

    Returns
    -------
    indicators : numpy.ndarray
        Shaped (N, num_classes, D, H, W).
    """
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ConfigurationError(
            f"Label values must lie in [0, {num_classes}), but the data spans "
            f"[{labels.min()}, {labels.max()}]."
        )
    classes = np.arange(num_classes).reshape(1, -1, *(1,) * (labels.ndim - 1))
    return (labels[:, np.newaxis] == classes).astype(dtype)


def _dice_term(pred_prob, gt, smooth, voxels):
    # 1 - 2 sum(P Y) / sum(P + Y + smooth); the smoothing enters once per voxel
    intersection = total(multiply(pred_prob, gt))
    denominator = add_scalar(total(pred_prob), float(gt.data.sum()) + smooth * voxels)
    return add_scalar(scale(divide(intersection, denominator), -2.0), 1.0)


def dice_ce_binary(pred_prob, gt, smooth=1e-5):
    """
    Sum the binary Dice loss and the binary cross-entropy.

    Parameters
    ----------
    pred_prob : Tensor
        Foreground probabilities (after a sigmoid).
    gt : Tensor or numpy.ndarray
        The binary ground truth, of the same shape.
    smooth : float
        The Dice smoothing term.

    Returns
    -------
    loss : Tensor
        A scalar. Logarithms are clamped at 1e-7, so a confident wrong
        voxel costs at most about 16.1.
    """
    gt = gt if isinstance(gt, Tensor) else Tensor(gt, dtype=pred_prob.dtype)
    check_same_shape(pred_prob, gt, "dice_ce_binary")
    background = Tensor(1 - gt.data)
    log_likelihood = add(
        multiply(gt, clamped_log(pred_prob, LOG_FLOOR)),
        multiply(background, clamped_log(add_scalar(scale(pred_prob, -1.0), 1.0), LOG_FLOOR)),
    )
    cross_entropy = scale(total(log_likelihood), -1.0 / gt.size)
    return add(_dice_term(pred_prob, gt, smooth, gt.size), cross_entropy)


def dice_ce_multiclass(pred_prob, gt_onehot, smooth=1e-5, num_classes=None):
    """
    Average the per-class Dice and cross-entropy terms over classes.

    For each class the loss is the Dice term minus the voxel mean of
    ``Y log P`` for that class's channel; the result is the mean over
    classes. Logarithms are clamped at 1e-7.

    Parameters
    ----------
    pred_prob : Tensor
        A softmax field shaped (N, C, D, H, W).
    gt_onehot : Tensor or numpy.ndarray
        One-hot ground truth of the same shape (see `one_hot`).
    smooth : float
        The Dice smoothing term.
    num_classes : int, optional
        The expected class count C.
    """
    gt = gt_onehot if isinstance(gt_onehot, Tensor) else Tensor(gt_onehot, dtype=pred_prob.dtype)
    check_same_shape(pred_prob, gt, "dice_ce_multiclass")
    classes = pred_prob.shape[1]
    if num_classes is not None and classes != num_classes:
        raise ShapeError(
            f"The prediction has {classes} classes on axis 1, not {num_classes}."
        )
    voxels = gt.size // classes
    loss = scale(total(multiply(gt, clamped_log(pred_prob, LOG_FLOOR))), -1.0 / voxels)
    for c in range(classes):
        mask = np.zeros((1, classes) + (1,) * (gt.ndim - 2), dtype=gt.dtype)
        mask[0, c] = 1
        mask = Tensor(np.broadcast_to(mask, gt.shape))
        dice = _dice_term(multiply(pred_prob, mask), multiply(gt, mask), smooth, voxels)
        loss = add(loss, dice)
    return scale(loss, 1.0 / classes)
