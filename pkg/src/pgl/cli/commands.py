"""
The work behind each command line subcommand.
"""

import logging
from pathlib import Path

from tqdm import tqdm

from ..align.geometry import agrees_with_oracle, compute_overlap, to_feature_coords
from ..augment.spatial import sample_crop_pair, source_patch_shape
from ..data.manifest import DatasetManifest
from ..data.preprocess import preprocess
from ..data.sampling import SSL_STREAM, SYNTH_STREAM, labeled_batch, ssl_batch, step_rng
from ..data.synth import synth_generate
from ..data.volume import save_volume
from ..exceptions import ConfigurationError
from ..networks.params import count_parameters
from ..trainer.checkpoint import Checkpoint
from ..trainer.evaluation import evaluate_volumes, score_columns, segmentation_from_checkpoint
from ..trainer.finetune import FineTuner, FinetuneSetup, finetune_columns
from ..trainer.metrics import MetricsWriter, ssl_columns
from ..trainer.ssl import Pretrainer, SslSetup
from .config import read_synth_spec

logger = logging.getLogger(__name__)

RESOLVED_CONFIG = "resolved.cfg"
PRETRAIN_METRICS = "pretrain.csv"
FINETUNE_METRICS = "finetune.csv"
EVAL_REPORT = "eval.csv"
SEGMENTATION_CHECKPOINT = "segmentation.pgl"
INIT_REPORT = "encoder-init.txt"


def prepare_output(config):
    """Create the output directory and record the resolved configuration in it."""
    directory = Path(config.output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    config.write(directory / RESOLVED_CONFIG)
    return directory


def load_preprocessed(manifest, config):
    volumes = [
        preprocess(volume, config.data.clip_lo, config.data.clip_hi) for volume in manifest.load()
    ]
    logger.info("Loaded %d volumes from the %s split.", len(volumes), manifest.split)
    return volumes


def _fresh_metrics(path, columns, append=False):
    path = Path(path)
    if path.exists() and not append:
        path.unlink()
    return MetricsWriter(path, columns)


def pretrain(config, resume=None):
    """
    Run self-supervised pretraining.

    Parameters
    ----------
    config : RunConfig
        The resolved run configuration.
    resume : str, optional
        A checkpoint to continue from; metrics are appended to the
        existing metrics file.
    """
    directory = prepare_output(config)
    volumes = load_preprocessed(DatasetManifest.read(config.data.manifest), config)
    train = config.trainer
    setup = SslSetup(config.network, config.align, config.loss, train)
    logger.info(
        "Pretraining arm '%s' with %d online parameters.",
        config.align.arm,
        count_parameters(config.network, "online"),
    )
    if resume is None:
        pretrainer = Pretrainer(setup)
    else:
        checkpoint = Checkpoint.load(resume)
        if checkpoint.seed != train.seed:
            raise ConfigurationError(
                f"The checkpoint was trained with seed {checkpoint.seed}, "
                f"but the configuration sets {train.seed}."
            )
        pretrainer = Pretrainer.from_checkpoint(checkpoint, setup)
        logger.info("Resuming from step %d.", pretrainer.step)
    writer = _fresh_metrics(
        directory / PRETRAIN_METRICS,
        ssl_columns(config.output.wall_time),
        append=resume is not None,
    )

    def make_batch(index):
        return ssl_batch(
            volumes, index, train.seed, train.view_shape, train.batch_size, config.augment
        )

    pretrainer.run(
        make_batch,
        writer=writer,
        checkpoint_dir=directory,
        prefetch=config.data.prefetch,
        progress=config.output.progress,
    )
    return 0


def _labeled_splits(config):
    finetune = config.finetune
    manifest = DatasetManifest.read(config.data.finetune_manifest)
    train, val = manifest.split_off(finetune.val_fraction, finetune.seed, split="val")
    if not len(train):
        raise ConfigurationError(
            f"No labeled volumes remain for training after holding out "
            f"{finetune.val_fraction:.0%} of {len(manifest)}."
        )
    train = train.subset(finetune.label_fraction, finetune.seed)
    train_volumes = load_preprocessed(train, config)
    val_volumes = load_preprocessed(val, config) if len(val) else []
    for volume in train_volumes + val_volumes:
        volume.check_labels(config.loss.num_classes)
    return train_volumes, val_volumes


def finetune(config, init="random", checkpoint=None):
    """
    Fine-tune a segmentation network.

    Parameters
    ----------
    config : RunConfig
        The resolved run configuration.
    init : str
        'random' or 'checkpoint'.
    checkpoint : str, optional
        The pretraining checkpoint whose online encoder initializes the
        network (required for `init='checkpoint'`).
    """
    if init == "checkpoint" and checkpoint is None:
        raise ConfigurationError("Provide a checkpoint path to initialize the encoder from.")
    directory = prepare_output(config)
    train_volumes, val_volumes = _labeled_splits(config)
    settings = config.finetune
    tuner = FineTuner(FinetuneSetup(config.network, config.loss, settings))
    if init == "checkpoint":
        report = tuner.initialize_encoder(Checkpoint.load(checkpoint).group("online"))
        lines = [f"init: checkpoint {checkpoint}", *report.lines()]
    else:
        lines = ["init: random"]
    (directory / INIT_REPORT).write_text("\n".join(lines) + "\n")
    writer = _fresh_metrics(
        directory / FINETUNE_METRICS,
        finetune_columns(config.loss.num_classes, config.output.wall_time),
    )
    augment = config.augment if settings.augment else None

    def make_batch(index):
        return labeled_batch(
            train_volumes, index, settings.seed, settings.patch_shape, settings.batch_size, augment
        )

    tuner.run(
        make_batch,
        val_volumes=val_volumes,
        writer=writer,
        prefetch=config.data.prefetch,
        progress=config.output.progress,
    )
    tuner.checkpoint().save(directory / SEGMENTATION_CHECKPOINT)
    return 0


def evaluate(config, checkpoint, manifest):
    """
    Score a fine-tuned network on labeled volumes and report per-class
    Dice and IoU.
    """
    directory = prepare_output(config)
    num_classes = config.loss.num_classes
    entries = DatasetManifest.read(manifest)
    volumes = load_preprocessed(entries, config)
    for volume in volumes:
        volume.check_labels(num_classes)
    params = segmentation_from_checkpoint(
        Checkpoint.load(checkpoint), config.network, num_classes, config.finetune.objective
    )
    per_volume, overall = evaluate_volumes(
        params,
        volumes,
        config.network,
        num_classes,
        config.finetune.patch_shape,
        config.finetune.objective,
    )
    report = _fresh_metrics(directory / EVAL_REPORT, ("volume",) + score_columns(num_classes))
    for path, scores in zip(entries.paths, per_volume):
        report.write(volume=path.name, **scores.row())
    report.write(volume="mean", **overall.row())
    print(f"{'class':>8} {'dice':>8} {'iou':>8}")
    for c, (dice, iou) in enumerate(zip(overall.dice, overall.iou)):
        print(f"{c:>8} {dice:>8.4f} {iou:>8.4f}")
    print(f"{'mean':>8} {overall.mean_dice:>8.4f} {overall.mean_iou:>8.4f}")
    return 0


def gendata(out_dir, count, seed, spec_path=None, split="pretrain", progress=True):
    """
    Generate synthetic labeled volumes and a manifest listing them.

    Volume ``i`` draws from its own stream of the seed, so any volume can
    be regenerated alone.
    """
    spec = read_synth_spec(spec_path)
    directory = Path(out_dir)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(
            f"The output directory '{out_dir}' cannot be created: {exc}"
        ) from None
    paths = []
    for index in tqdm(range(count), desc="gendata", disable=not progress):
        volume = synth_generate(spec, step_rng(seed, SYNTH_STREAM, index))
        path = directory / f"volume-{index:04d}.rvf"
        save_volume(volume, path)
        paths.append(path)
    DatasetManifest(tuple(paths), split, seed).write(directory / "manifest.txt")
    logger.info("Wrote %d volumes to '%s'.", count, directory)
    return 0


def _format_box(start, end):
    return " x ".join(f"[{low:.4g}, {high:.4g})" for low, high in zip(start, end))


def inspect_align(config, pairs, seed=0, verbose=True):
    """
    Draw crop pairs and print their overlap boxes and feature regions.

    Each pair is also checked against the cell-enumeration oracle; the
    share of pairs that agree is printed last.
    """
    view_shape = config.trainer.view_shape
    source_shape = source_patch_shape(view_shape)
    stride = config.network.output_stride
    agreed = 0
    for index in range(pairs):
        rec1, rec2 = sample_crop_pair(
            source_shape, view_shape, step_rng(seed, SSL_STREAM, index), config.augment
        )
        agreement = agrees_with_oracle(rec1, rec2)
        agreed += agreement
        if not verbose:
            continue
        print(f"pair {index}: oracle {'agrees' if agreement else 'DISAGREES'}")
        for name, rec in (("view 1", rec1), ("view 2", rec2)):
            crop = _format_box(rec.crop_start, rec.crop_end)
            print(f"  {name}: crop {crop} flip {rec.flip_mask}")
        boxes = compute_overlap(rec1, rec2)
        if boxes is None:
            print("  no overlap")
            continue
        for name, box, rec in (("view 1", boxes[0], rec1), ("view 2", boxes[1], rec2)):
            roi = to_feature_coords(box, rec, stride)
            print(f"  {name}: overlap {_format_box(box.start, box.end)}")
            print(f"  {name}: feature region {_format_box(roi.start, roi.end)}")
    print(f"oracle agreement: {agreed}/{pairs} ({agreed / max(pairs, 1):.1%})")
    return 0
