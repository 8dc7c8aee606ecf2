"""
Whole-volume inference and overlap scores for segmentation networks.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..exceptions import ShapeError
from ..networks.params import build_segmentation
from ..networks.segmentation import segment
from ..tensor.core import Tensor, no_grad
from ..tensor.utils import AXIS_NAMES

logger = logging.getLogger(__name__)


def _window_starts(size, extent):
    starts = list(range(0, size - extent + 1, extent))
    if starts[-1] + extent < size:
        # Shift the last window inward so it ends at the border
        starts.append(size - extent)
    return starts


def sliding_windows(shape, window):
    """
    Tile a volume with windows of a fixed size.

    Windows are laid edge to edge from the origin; along each axis the
    last window is shifted inward to end exactly at the border, so it
    may overlap its neighbor.

    Parameters
    ----------
    shape : tuple of int
        The volume dimensions.
    window : tuple of int
        The window dimensions.

    Returns
    -------
    regions : list of tuple of slice
    """
    for axis, size, extent in zip(AXIS_NAMES, shape, window):
        if extent > size:
            raise ShapeError(
                f"The volume is smaller than the window on the {axis} axis: "
                f"{size} voxels for a window of {extent}."
            )
    starts = [_window_starts(size, extent) for size, extent in zip(shape, window)]
    return [
        tuple(slice(s, s + extent) for s, extent in zip(corner, window))
        for corner in itertools.product(*starts)
    ]


def predict_volume(params, values, cfg, num_classes, window, objective="multiclass"):
    """
    Predict a full label map with sliding-window inference.

    Every window is segmented in evaluation mode and converted to hard
    labels (the arg-max class, or a positive foreground logit for the
    binary objective); overlapping windows keep the later prediction.

    Parameters
    ----------
    params : ParamStore
        A segmentation network.
    values : numpy.ndarray
        The preprocessed volume, shaped (D, H, W).
    cfg : EncoderConfig
        The architecture.
    num_classes : int
        The number of classes, background included.
    window : tuple of int
        The window size; each entry must be a multiple of the encoder
        output stride.
    objective : str
        'multiclass' or 'binary'.

    Returns
    -------
    labels : numpy.ndarray
        An unsigned 8-bit label map shaped like `values`.
    """
    labels = np.zeros(values.shape, dtype=np.uint8)
    dtype = params[next(iter(params))].dtype
    with no_grad():
        for region in sliding_windows(values.shape, window):
            x = Tensor(values[region][np.newaxis, np.newaxis], dtype=dtype)
            logits = segment(params, x, cfg, num_classes, training=False, objective=objective)
            if objective == "binary":
                labels[region] = logits.data[0, 0] > 0
            else:
                labels[region] = logits.data[0].argmax(axis=0)
    return labels


@dataclass(frozen=True)
class SegmentationScores:
    """
    Overlap scores of a predicted label map, one entry per class.

    Attributes
    ----------
    dice, iou : tuple of float
        Per-class Dice coefficients and intersections over unions,
        indexed by class (background first).
    """

    dice: Tuple[float, ...]
    iou: Tuple[float, ...]

    @property
    def num_classes(self):
        return len(self.dice)

    @property
    def mean_dice(self):
        """The mean Dice over the foreground classes."""
        return float(np.mean(self.dice[1:]))

    @property
    def mean_iou(self):
        return float(np.mean(self.iou[1:]))

    def row(self):
        """Flatten the scores into CSV columns."""
        values = {}
        for c, (dice, iou) in enumerate(zip(self.dice, self.iou)):
            values[f"dice_{c}"] = dice
            values[f"iou_{c}"] = iou
        values["mean_dice"] = self.mean_dice
        values["mean_iou"] = self.mean_iou
        return values


def score_columns(num_classes):
    columns = []
    for c in range(num_classes):
        columns += [f"dice_{c}", f"iou_{c}"]
    return tuple(columns) + ("mean_dice", "mean_iou")


def dice_iou(prediction, truth, num_classes):
    """
    Compare hard label maps class by class.

    Dice is ``2|A∩B| / (|A| + |B|)`` and IoU is ``|A∩B| / |A∪B|``; a class
    absent from both maps scores 1 on each.

    Parameters
    ----------
    prediction, truth : numpy.ndarray
        Integer label maps of identical shape.
    num_classes : int
        The number of classes, background included.

    Returns
    -------
    scores : SegmentationScores
    """
    if prediction.shape != truth.shape:
        raise ShapeError(
            f"The prediction {prediction.shape} and ground truth {truth.shape} "
            "must share one shape."
        )
    dice, iou = [], []
    for c in range(num_classes):
        predicted, actual = prediction == c, truth == c
        intersection = int(np.count_nonzero(predicted & actual))
        union = int(np.count_nonzero(predicted | actual))
        if union == 0:
            dice.append(1.0)
            iou.append(1.0)
            continue
        sizes = int(np.count_nonzero(predicted)) + int(np.count_nonzero(actual))
        dice.append(2 * intersection / sizes)
        iou.append(intersection / union)
    return SegmentationScores(tuple(dice), tuple(iou))


def mean_scores(scores):
    """Average per-class scores over several volumes."""
    dice = np.mean([score.dice for score in scores], axis=0)
    iou = np.mean([score.iou for score in scores], axis=0)
    return SegmentationScores(tuple(float(_) for _ in dice), tuple(float(_) for _ in iou))


def evaluate_volumes(params, volumes, cfg, num_classes, window, objective="multiclass"):
    """
    Score a segmentation network on labeled volumes.

    Returns
    -------
    per_volume : list of SegmentationScores
        The scores of each volume.
    overall : SegmentationScores
        Their per-class mean.
    """
    per_volume = []
    for volume in volumes:
        prediction = predict_volume(params, volume.values, cfg, num_classes, window, objective)
        per_volume.append(dice_iou(prediction, volume.labels, num_classes))
        logger.debug(
            "Scored '%s': mean Dice %.4f.", volume.provenance, per_volume[-1].mean_dice
        )
    return per_volume, mean_scores(per_volume)


def segmentation_from_checkpoint(checkpoint, cfg, num_classes, objective="multiclass"):
    """Rebuild a fine-tuned segmentation network from its checkpoint."""
    params = build_segmentation(cfg, num_classes, np.random.default_rng(0), objective)
    params.load_arrays(checkpoint.group("segmentation"))
    return params
