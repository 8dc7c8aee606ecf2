"""
The local consistency objective between aligned online and target features.
"""

import math

from ..tensor.ops import add, l2_normalize, scale, square, subtract, total
from ..tensor.utils import check_rank, check_same_shape


def local_consistency(online_pred, target_feat, eps=1e-12, normalize_channels=False):
    """
    Compare aligned feature maps position by position.

    Both inputs are normalized to unit length along the channel axis;
    the squared differences are summed over every element and divided by
    the number of batch and spatial positions, so each position
    contributes a value in [0, 4].

    Parameters
    ----------
    online_pred : Tensor
        The predictor output of the online path, shaped (N, C, D, H, W).
    target_feat : Tensor
        The aligned target features, of the same shape. Callers pass it
        through `stop_gradient` (or build it from untracked tensors).
    eps : float
        The norm floor of the normalization.
    normalize_channels : bool
        Whether to also divide by the channel count.

    Returns
    -------
    loss : Tensor
        A scalar.
    """
    check_rank(online_pred, 5, "local_consistency")
    check_same_shape(online_pred, target_feat, "local_consistency")
    n, channels, *spatial = online_pred.shape
    positions = n * math.prod(spatial) * (channels if normalize_channels else 1)
    difference = subtract(l2_normalize(online_pred, eps), l2_normalize(target_feat, eps))
    return scale(total(square(difference)), 1.0 / positions)


def total_ssl_loss(forward_pairs, eps=1e-12, normalize_channels=False):
    """
    Sum the consistency loss over both role assignments of a view pair.

    Parameters
    ----------
    forward_pairs : sequence
        One `(online_pred, target_feat)` tuple per role order (the first
        view online with the second as target, then the reverse). An
        entry of `None` marks an order with no overlapping region; it
        contributes nothing.
    eps, normalize_channels :
        See `local_consistency`.

    Returns
    -------
    loss : Tensor or None
        A scalar in [0, 8] for two orders, or `None` when every entry was
        empty.
    """
    loss = None
    for pair in forward_pairs:
        if pair is None:
            continue
        term = local_consistency(*pair, eps=eps, normalize_channels=normalize_channels)
        loss = term if loss is None else add(loss, term)
    return loss
