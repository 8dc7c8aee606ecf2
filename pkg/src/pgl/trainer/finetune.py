"""
Segmentation fine-tuning on labeled patches.
"""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from ..data.sampling import INIT_STREAM, step_rng
from ..exceptions import NumericalError
from ..loss.config import LossConfig
from ..loss.segmentation import dice_ce_binary, dice_ce_multiclass, one_hot
from ..networks.config import EncoderConfig
from ..networks.params import build_segmentation, transfer_encoder
from ..networks.segmentation import segment
from ..tensor.core import Tensor, backward
from ..tensor.ops import sigmoid, softmax
from .checkpoint import Checkpoint
from .config import FinetuneConfig
from .evaluation import evaluate_volumes
from .metrics import StepMetrics
from .optim import Sgd
from .prefetch import Prefetcher
from .schedules import cosine_lr

logger = logging.getLogger(__name__)

ENCODER_PREFIX = "encoder."


@dataclass
class FinetuneSetup:
    """The configuration sections a fine-tuning step depends on."""

    network: EncoderConfig = field(default_factory=EncoderConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)


def label_targets(labels, num_classes, objective="multiclass", dtype=np.float32):
    """Turn integer label maps into the ground truth of the chosen objective."""
    indicators = one_hot(labels, num_classes, dtype=dtype)
    if objective == "binary":
        return indicators[:, 1:2]
    return indicators


def segmentation_loss(params, images, labels, setup):
    """Evaluate the Dice plus cross-entropy loss of a labeled batch."""
    cfg, finetune = setup.network, setup.finetune
    num_classes = setup.loss.num_classes
    dtype = params[next(iter(params))].dtype
    x = Tensor(images, dtype=dtype)
    gt = label_targets(labels, num_classes, finetune.objective, dtype=dtype)
    logits = segment(
        params,
        x,
        cfg,
        num_classes,
        training=True,
        objective=finetune.objective,
        encoder_training=not finetune.freeze_encoder,
    )
    if finetune.objective == "binary":
        return dice_ce_binary(sigmoid(logits), gt, smooth=setup.loss.smooth)
    return dice_ce_multiclass(
        softmax(logits), gt, smooth=setup.loss.smooth, num_classes=num_classes
    )


def finetune_step(images, labels, params, optimizer, step, setup):
    """
    Run one fine-tuning step.

    Parameters
    ----------
    images : numpy.ndarray
        The patches, shaped (N, 1, D, H, W).
    labels : numpy.ndarray
        Their integer label maps, shaped (N, D, H, W).
    params : ParamStore
        The segmentation network.
    optimizer : Optimizer
        The optimizer of `params` (freezing the encoder is the
        optimizer's concern).
    step : int
        The index of the step, used by the learning rate schedule.
    setup : FinetuneSetup
        The run configuration.

    Returns
    -------
    metrics : StepMetrics
    """
    started = time.perf_counter()
    finetune = setup.finetune
    lr = cosine_lr(step, finetune.steps, finetune.warmup_steps, finetune.lr)
    params.zero_grad()
    loss = segmentation_loss(params, images, labels, setup)
    value = loss.item()
    if not math.isfinite(value):
        raise NumericalError(f"The segmentation loss became {value} at step {step}.")
    backward(loss)
    optimizer.step(lr)
    wall_ms = (time.perf_counter() - started) * 1000
    return StepMetrics(step, value, lr, wall_ms=wall_ms)


def finetune_columns(num_classes, wall_time=True):
    """The fine-tuning metric columns, with one validation Dice column per class."""
    columns = ("step", "loss", "lr") + (("wall_ms",) if wall_time else ())
    validation = tuple(f"val_dice_{c}" for c in range(num_classes))
    return columns + validation + ("val_mean_dice",)


class FineTuner:
    """
    The state of a fine-tuning run.

    Parameters
    ----------
    setup : FinetuneSetup
        The run configuration.
    params : ParamStore, optional
        An existing segmentation network (default: a fresh one drawn
        from the run seed).
    """

    def __init__(self, setup, params=None):
        self.setup = setup
        finetune = setup.finetune
        if params is None:
            params = build_segmentation(
                setup.network,
                setup.loss.num_classes,
                step_rng(finetune.seed, INIT_STREAM),
                objective=finetune.objective,
            )
        self.params = params
        self.optimizer = Sgd(
            params,
            momentum=finetune.momentum,
            weight_decay=finetune.weight_decay,
            frozen=(ENCODER_PREFIX,) if finetune.freeze_encoder else (),
        )
        self.step = 0
        self.validation = []

    def initialize_encoder(self, pretrained):
        """Copy the encoder of a pretrained online store (see `transfer_encoder`)."""
        return transfer_encoder(pretrained, self.params)

    def train_step(self, images, labels):
        metrics = finetune_step(
            images, labels, self.params, self.optimizer, self.step, self.setup
        )
        self.step += 1
        return metrics

    def validate(self, volumes):
        """Score the current network on whole volumes."""
        _, overall = evaluate_volumes(
            self.params,
            volumes,
            self.setup.network,
            self.setup.loss.num_classes,
            self.setup.finetune.patch_shape,
            self.setup.finetune.objective,
        )
        self.validation.append((self.step, overall))
        logger.info(
            "step %d: validation Dice %s (mean %.4f)",
            self.step,
            ", ".join(f"{dice:.4f}" for dice in overall.dice),
            overall.mean_dice,
        )
        return overall

    def checkpoint(self):
        return Checkpoint(
            self.step, self.setup.finetune.seed, {"segmentation": self.params.state_dict()}
        )

    def run(self, make_batch, val_volumes=(), writer=None, prefetch=2, progress=False):
        """
        Train for the configured number of steps.

        Parameters
        ----------
        make_batch : callable
            Maps a step index to an (images, labels) pair.
        val_volumes : sequence of Volume
            Labeled volumes scored every `eval_every` steps and after the
            final step (validation is skipped when empty).
        writer : MetricsWriter, optional
            Receives one row per step; validation columns stay empty on
            steps without validation.
        prefetch : int
            Batches prepared ahead on a background thread.
        progress : bool
            Whether to show a progress bar.

        Returns
        -------
        history : list of StepMetrics
        """
        finetune = self.setup.finetune
        num_classes = self.setup.loss.num_classes
        history = []
        with Prefetcher(make_batch, self.step, finetune.steps, prefetch) as batches:
            bar = tqdm(batches, desc="finetune", total=finetune.steps, disable=not progress)
            for images, labels in bar:
                metrics = self.train_step(images, labels)
                history.append(metrics)
                row = {f"val_dice_{c}": "" for c in range(num_classes)}
                row["val_mean_dice"] = ""
                due = self.step % finetune.eval_every == 0 or self.step == finetune.steps
                if val_volumes and due:
                    scores = self.validate(val_volumes)
                    row.update({f"val_dice_{c}": d for c, d in enumerate(scores.dice)})
                    row["val_mean_dice"] = scores.mean_dice
                if writer is not None:
                    writer.write(**vars(metrics), **row)
        return history
