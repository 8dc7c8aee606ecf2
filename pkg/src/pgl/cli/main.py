"""
The `pgl` command line interface.

Every subcommand that reads a run configuration also accepts dotted
overrides such as ``--trainer.steps=50`` or ``--align.use_csalign=false``,
applied after the configuration file.

Exit codes: 0 on success, 2 for usage, configuration and data format
errors, and 3 when training hits non-finite values.
"""

import argparse
import logging
import sys

from ..exceptions import ConfigurationError, FormatError, NumericalError, ShapeError
from . import commands
from .config import RunConfig

logger = logging.getLogger("pgl")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pgl",
        description="Prior-guided local self-supervised pretraining for volumetric images.",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="the logging threshold (default: INFO)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    pretrain = subparsers.add_parser("pretrain", help="run self-supervised pretraining")
    pretrain.add_argument("--config", help="the run configuration file")
    pretrain.add_argument("--resume", metavar="CHECKPOINT", help="continue from a checkpoint")

    finetune = subparsers.add_parser("finetune", help="fine-tune a segmentation network")
    finetune.add_argument("--config", help="the run configuration file")
    finetune.add_argument(
        "--init",
        nargs="+",
        default=["random"],
        metavar="MODE",
        help="'random', or 'checkpoint PATH' to start from a pretrained encoder",
    )

    evaluate = subparsers.add_parser("eval", help="score a fine-tuned network")
    evaluate.add_argument("checkpoint", help="the fine-tuning checkpoint")
    evaluate.add_argument("manifest", help="the manifest of labeled test volumes")
    evaluate.add_argument("--config", help="the run configuration file")

    gendata = subparsers.add_parser("gendata", help="generate synthetic labeled volumes")
    gendata.add_argument("out_dir", help="the directory receiving the volumes and manifest")
    gendata.add_argument("--count", type=int, default=10, help="volumes to generate")
    gendata.add_argument("--seed", type=int, default=0, help="the generator seed")
    gendata.add_argument("--spec", help="a file with a [synth] section")
    gendata.add_argument("--split", default="pretrain", help="the manifest split tag")
    gendata.add_argument("--no-progress", action="store_true", help="hide the progress bar")

    inspect = subparsers.add_parser("inspect-align", help="print crop pairs and aligned regions")
    inspect.add_argument("--config", help="the run configuration file")
    inspect.add_argument("--pairs", type=int, default=10, help="crop pairs to draw")
    inspect.add_argument("--seed", type=int, default=0, help="the sampling seed")
    inspect.add_argument("--quiet", action="store_true", help="print only the agreement summary")
    return parser


def _parse_init(parser, values):
    if values == ["random"]:
        return "random", None
    if len(values) == 2 and values[0] == "checkpoint":
        return "checkpoint", values[1]
    parser.error(f"--init takes 'random' or 'checkpoint PATH', not '{' '.join(values)}'")


def run(args, overrides, parser):
    if args.command == "gendata":
        if overrides:
            parser.error(f"gendata takes no configuration overrides: {' '.join(overrides)}")
        return commands.gendata(
            args.out_dir,
            args.count,
            args.seed,
            spec_path=args.spec,
            split=args.split,
            progress=not args.no_progress,
        )
    config = RunConfig.read(args.config, overrides)
    if args.command == "pretrain":
        return commands.pretrain(config, resume=args.resume)
    if args.command == "finetune":
        init, checkpoint = _parse_init(parser, args.init)
        return commands.finetune(config, init=init, checkpoint=checkpoint)
    if args.command == "eval":
        return commands.evaluate(config, args.checkpoint, args.manifest)
    return commands.inspect_align(config, args.pairs, seed=args.seed, verbose=not args.quiet)


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    unrecognized = [item for item in extra if not (item.startswith("--") and "." in item)]
    if unrecognized:
        parser.error(f"unrecognized arguments: {' '.join(unrecognized)}")
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
    try:
        return run(args, extra, parser)
    except (ConfigurationError, FormatError, ShapeError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except NumericalError as exc:
        logger.error("Training stopped: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
