"""
Self-supervised pretraining: the online/target training step and loop.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from ..align.aligner import align_pair
from ..align.config import AlignConfig
from ..data.sampling import INIT_STREAM, step_rng
from ..exceptions import NumericalError
from ..loss.config import LossConfig
from ..loss.consistency import local_consistency, total_ssl_loss
from ..networks.config import EncoderConfig
from ..networks.encoder import encode
from ..networks.heads import predict, project
from ..networks.params import build_online, build_target
from ..tensor.core import Tensor, backward
from ..tensor.ops import stop_gradient
from .checkpoint import Checkpoint
from .config import TrainConfig
from .ema import ema_update
from .metrics import StepMetrics
from .optim import Lars
from .prefetch import Prefetcher
from .schedules import cosine_lr, ema_omega

logger = logging.getLogger(__name__)


@dataclass
class SslSetup:
    """The configuration sections a pretraining step depends on."""

    network: EncoderConfig = field(default_factory=EncoderConfig)
    align: AlignConfig = field(default_factory=AlignConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)


def stack_views(pairs, dtype=np.float32):
    """Batch the views of several pairs into two (N, 1, D, H, W) tensors and record lists."""
    x1 = Tensor(np.stack([pair.view1 for pair in pairs])[:, np.newaxis], dtype=dtype)
    x2 = Tensor(np.stack([pair.view2 for pair in pairs])[:, np.newaxis], dtype=dtype)
    return x1, x2, [pair.rec1 for pair in pairs], [pair.rec2 for pair in pairs]


def embed(params, x, cfg):
    """Encode and project a batch of views (batch normalization in training mode)."""
    return project(params, encode(params, x, cfg, training=True), cfg, training=True)


def _order_term(online, online_feat, target_feat, rec_online, rec_target, setup):
    # One role order: align, then predict from the aligned online features
    aligned = align_pair(
        online_feat,
        target_feat,
        rec_online,
        rec_target,
        setup.network.output_stride,
        samples_per_bin=setup.align.samples_per_bin,
        use_flipalign=setup.align.use_flipalign,
        use_csalign=setup.align.use_csalign,
    )
    if aligned is None:
        return None, len(rec_online)
    prediction = predict(online, aligned.online, setup.network, training=True)
    return (prediction, aligned.target), aligned.skipped


def ssl_backward(online, target, pairs, setup):
    """
    Evaluate the symmetrized consistency loss and backpropagate it.

    The target path runs behind a stop-gradient, so only online
    parameters receive gradients. In 'joint' mode both role orders share
    one backward pass; in 'sequential' mode each order is differentiated
    (and released) separately and the gradients accumulate.

    Returns
    -------
    loss : float or None
        The loss, or `None` when no pair has any overlap.
    skipped : int
        Pairs without overlap.
    """
    cfg = setup.network
    eps, normalize_channels = setup.loss.eps, setup.loss.normalize_channels
    dtype = next(iter(online.items()))[1].dtype
    x1, x2, recs1, recs2 = stack_views(pairs, dtype)
    if setup.train.symmetric_mode == "joint":
        online1, online2 = embed(online, x1, cfg), embed(online, x2, cfg)
        target1 = stop_gradient(embed(target, x1, cfg))
        target2 = stop_gradient(embed(target, x2, cfg))
        term1, skipped = _order_term(online, online1, target2, recs1, recs2, setup)
        term2, _ = _order_term(online, online2, target1, recs2, recs1, setup)
        loss = total_ssl_loss([term1, term2], eps=eps, normalize_channels=normalize_channels)
        if loss is None:
            return None, skipped
        backward(loss)
        return loss.item(), skipped
    value, skipped = None, 0
    for first, second, rec_first, rec_second in ((x1, x2, recs1, recs2), (x2, x1, recs2, recs1)):
        online_feat = embed(online, first, cfg)
        target_feat = stop_gradient(embed(target, second, cfg))
        term, skipped = _order_term(online, online_feat, target_feat, rec_first, rec_second, setup)
        if term is None:
            continue
        loss = local_consistency(*term, eps=eps, normalize_channels=normalize_channels)
        backward(loss)
        value = loss.item() if value is None else value + loss.item()
    return value, skipped


def ssl_train_step(pairs, online, target, optimizer, step, setup):
    """
    Run one pretraining step.

    The symmetrized loss is backpropagated through the online path, the
    optimizer updates the online parameters with the scheduled learning
    rate, and the target moves towards the online parameters with the
    scheduled momentum.

    Parameters
    ----------
    pairs : list of ViewPair
        The batch.
    online, target : ParamStore
        The two networks (the target without a predictor).
    optimizer : Optimizer
        The optimizer of the online store.
    step : int
        The index of the step, used by both schedules.
    setup : SslSetup
        The run configuration.

    Returns
    -------
    metrics : StepMetrics
    """
    started = time.perf_counter()
    train = setup.train
    lr = cosine_lr(step, train.steps, train.warmup_steps, train.base_lr)
    omega = ema_omega(step, train.steps, train.omega_base)
    online.zero_grad()
    target.zero_grad()
    loss, skipped = ssl_backward(online, target, pairs, setup)
    if loss is None:
        logger.warning("Skipped step %d: none of the view pairs overlap.", step)
        loss = 0.0
    else:
        if not math.isfinite(loss):
            raise NumericalError(f"The loss became {loss} at step {step}.")
        optimizer.step(lr)
        ema_update(target, online, omega)
    wall_ms = (time.perf_counter() - started) * 1000
    return StepMetrics(step, loss, lr, omega, skipped, wall_ms)


class Pretrainer:
    """
    The state of a pretraining run: both networks, the optimizer and the
    step counter.

    Parameters
    ----------
    setup : SslSetup
        The run configuration.
    online : ParamStore, optional
        An existing online store (default: a fresh one drawn from the
        run seed).
    target : ParamStore, optional
        An existing target store (default: a copy of the online store).
    step : int
        The number of completed steps.
    """

    def __init__(self, setup, online=None, target=None, step=0):
        self.setup = setup
        if online is None:
            online = build_online(setup.network, step_rng(setup.train.seed, INIT_STREAM))
        self.online = online
        self.target = target if target is not None else build_target(online)
        train = setup.train
        self.optimizer = Lars(
            self.online,
            momentum=train.momentum,
            weight_decay=train.weight_decay,
            trust=train.trust,
        )
        self.step = step

    def train_step(self, pairs):
        metrics = ssl_train_step(
            pairs, self.online, self.target, self.optimizer, self.step, self.setup
        )
        self.step += 1
        return metrics

    def checkpoint(self):
        return Checkpoint(
            self.step,
            self.setup.train.seed,
            {
                "online": self.online.state_dict(),
                "target": self.target.state_dict(),
                "optimizer": self.optimizer.state_dict(),
            },
        )

    @classmethod
    def from_checkpoint(cls, checkpoint, setup):
        """Restore a run (raises `ConfigurationError` if the networks differ)."""
        pretrainer = cls(setup, step=checkpoint.step)
        pretrainer.online.load_arrays(checkpoint.group("online"))
        pretrainer.target.load_arrays(checkpoint.group("target"))
        pretrainer.optimizer.load_arrays(checkpoint.group("optimizer"))
        return pretrainer

    def run(self, make_batch, writer=None, checkpoint_dir=None, prefetch=2, progress=False):
        """
        Train until the configured number of steps is reached.

        Parameters
        ----------
        make_batch : callable
            Maps a step index to a list of view pairs.
        writer : MetricsWriter, optional
            Receives one row per step.
        checkpoint_dir : pathlib.Path, optional
            Where to save checkpoints.
        prefetch : int
            Batches prepared ahead on a background thread.
        progress : bool
            Whether to show a progress bar.

        Returns
        -------
        history : list of StepMetrics
        """
        train = self.setup.train
        history = []
        with Prefetcher(make_batch, self.step, train.steps, prefetch) as batches:
            bar = tqdm(
                batches,
                desc="pretrain",
                initial=self.step,
                total=train.steps,
                disable=not progress,
            )
            for pairs in bar:
                metrics = self.train_step(pairs)
                history.append(metrics)
                if writer is not None:
                    writer.write_step(metrics)
                if self.step % train.log_every == 0:
                    logger.info(
                        "step %d: loss %.4f, lr %.4g, omega %.5f, skipped pairs %d",
                        metrics.step,
                        metrics.loss,
                        metrics.lr,
                        metrics.omega,
                        metrics.skipped_pairs,
                    )
                due = self.step == train.steps or self.step % train.checkpoint_every == 0
                if checkpoint_dir is not None and due:
                    self.checkpoint().save(checkpoint_path(checkpoint_dir, self.step))
        return history


def checkpoint_path(directory, step):
    return Path(directory) / f"ckpt-{step:06d}.pgl"
