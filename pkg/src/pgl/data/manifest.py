"""
Dataset manifests: plain-text lists of volume files.

The first line is a header ``# split=<tag> seed=<n>``; every further
non-empty line is a volume path, relative to the manifest's directory
unless absolute.
"""

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from ..exceptions import FormatError
from .volume import load_volume

SPLITS = ("pretrain", "train", "val", "test")
HEADER_PATTERN = re.compile(r"^#\s*split=(?P<split>\S+)\s+seed=(?P<seed>-?\d+)\s*$")


@dataclass
class DatasetManifest:
    """
    A list of volume files belonging to one split.

    Attributes
    ----------
    paths : tuple of pathlib.Path
        The volume files.
    split : str
        One of 'pretrain', 'train', 'val' or 'test'.
    seed : int
        The seed used to draw the split.
    """

    paths: Tuple[Path, ...]
    split: str = "pretrain"
    seed: int = 0

    def __post_init__(self):
        self.paths = tuple(Path(path) for path in self.paths)
        if self.split not in SPLITS:
            raise FormatError(f"Provide a valid split—one of {SPLITS}, not '{self.split}'.")

    def __len__(self):
        return len(self.paths)

    def write(self, path):
        """Write the manifest, storing paths relative to its directory where possible."""
        path = Path(path)
        lines = [f"# split={self.split} seed={self.seed}"]
        for volume_path in self.paths:
            try:
                volume_path = volume_path.resolve().relative_to(path.parent.resolve())
            except ValueError:
                pass
            lines.append(volume_path.as_posix())
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path):
        path = Path(path)
        lines = path.read_text().splitlines()
        match = HEADER_PATTERN.match(lines[0]) if lines else None
        if match is None:
            raise FormatError(
                f"The manifest '{path}' must start with a '# split=<tag> seed=<n>' header."
            )
        paths = [
            path.parent / line.strip() for line in lines[1:]
            if line.strip() and not line.startswith("#")
        ]
        return cls(tuple(paths), match["split"], int(match["seed"]))

    def load(self):
        return [load_volume(path) for path in self.paths]

    def split_off(self, fraction, seed, split="val"):
        """
        Divide the manifest into two disjoint manifests.

        Parameters
        ----------
        fraction : float
            The share of volumes moved to the second manifest (rounded up
            when positive).
        seed : int
            The seed of the random permutation.
        split : str
            The split tag of the second manifest.

        Returns
        -------
        kept, held_out : DatasetManifest
        """
        order = np.random.default_rng(seed).permutation(len(self.paths))
        count = math.ceil(fraction * len(self.paths)) if fraction > 0 else 0
        held_out = sorted(order[:count])
        kept = sorted(order[count:])
        return (
            type(self)(tuple(self.paths[i] for i in kept), self.split, seed),
            type(self)(tuple(self.paths[i] for i in held_out), split, seed),
        )

    def subset(self, fraction, seed):
        """Keep a random share of the volumes (at least one)."""
        order = np.random.default_rng(seed).permutation(len(self.paths))
        count = max(1, math.ceil(fraction * len(self.paths)))
        return type(self)(tuple(self.paths[i] for i in sorted(order[:count])), self.split, seed)
