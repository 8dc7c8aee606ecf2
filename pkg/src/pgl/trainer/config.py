"""
Settings for pretraining and fine-tuning runs.
"""

from dataclasses import dataclass
from typing import Tuple

from ..exceptions import ConfigurationError

SYMMETRIC_MODES = ("joint", "sequential")
OBJECTIVES = ("binary", "multiclass")


def _check_positive(section, **values):
    for name, value in values.items():
        if value <= 0:
            raise ConfigurationError(f"Provide a positive '{section}.{name}', not {value}.")


@dataclass
class TrainConfig:
    """
    The `trainer` section of a run configuration (self-supervised pretraining).

    Attributes
    ----------
    steps : int
        Optimizer steps in the run (default: 200).
    warmup_steps : int
        Steps of linear learning rate warmup (default: 20).
    batch_size : int
        View pairs per step (default: 4).
    view_shape : tuple of int
        The size of each view (default: 8, 32, 32).
    base_lr : float
        The peak learning rate (default: 0.2).
    momentum, weight_decay, trust : float
        LARS settings (defaults: 0.9, 1.5e-6 and 0.001).
    omega_base : float
        The initial target momentum (default: 0.996).
    symmetric_mode : str
        'joint' to differentiate both view orders in one backward pass,
        'sequential' to run one backward pass per order (default: 'joint').
    seed : int
        The run seed (default: 0).
    checkpoint_every : int
        Steps between checkpoints; the final step is always saved
        (default: 100).
    log_every : int
        Steps between progress log lines (default: 10).
    """

    steps: int = 200
    warmup_steps: int = 20
    batch_size: int = 4
    view_shape: Tuple[int, int, int] = (8, 32, 32)
    base_lr: float = 0.2
    momentum: float = 0.9
    weight_decay: float = 1.5e-6
    trust: float = 0.001
    omega_base: float = 0.996
    symmetric_mode: str = "joint"
    seed: int = 0
    checkpoint_every: int = 100
    log_every: int = 10

    def __post_init__(self):
        self.view_shape = tuple(int(_) for _ in self.view_shape)
        _check_positive(
            "trainer",
            steps=self.steps,
            batch_size=self.batch_size,
            base_lr=self.base_lr,
            checkpoint_every=self.checkpoint_every,
            log_every=self.log_every,
        )
        if not 0 <= self.warmup_steps < self.steps:
            raise ConfigurationError(
                f"The warmup ({self.warmup_steps} steps) must be shorter than the run "
                f"({self.steps} steps)."
            )
        if not 0 <= self.omega_base <= 1:
            raise ConfigurationError(
                f"Provide a target momentum in [0, 1], not {self.omega_base}."
            )
        if self.symmetric_mode not in SYMMETRIC_MODES:
            raise ConfigurationError(
                "Provide a valid symmetric mode—either 'joint' or 'sequential', "
                f"not '{self.symmetric_mode}'."
            )
        if len(self.view_shape) != 3 or min(self.view_shape) < 1:
            raise ConfigurationError(f"Provide a valid view shape, not {self.view_shape}.")


@dataclass
class FinetuneConfig:
    """
    The `finetune` section of a run configuration (downstream segmentation).

    Attributes
    ----------
    steps : int
        Optimizer steps (default: 300).
    warmup_steps : int
        Steps of linear learning rate warmup (default: 0).
    batch_size : int
        Labeled patches per step (default: 2).
    patch_shape : tuple of int
        The size of each training patch and inference window (default:
        8, 32, 32).
    lr : float
        The initial SGD learning rate, decayed along a half cosine
        (default: 0.01).
    momentum, weight_decay : float
        SGD settings (defaults: 0.9 and 0).
    objective : str
        'multiclass' (softmax, Dice plus cross-entropy) or 'binary'
        (sigmoid, Dice plus binary cross-entropy; needs two classes)
        (default: 'multiclass').
    freeze_encoder : bool
        Whether the encoder parameters stay fixed (default: false).
    augment : bool
        Whether training patches are flipped and intensity-augmented
        (default: true).
    val_fraction : float
        The share of labeled volumes held out for validation (default: 0.2).
    label_fraction : float
        The share of the remaining volumes used for training (default: 1).
    eval_every : int
        Steps between validation passes; the final step is always
        evaluated (default: 50).
    seed : int
        The run seed (default: 0).
    """

    steps: int = 300
    warmup_steps: int = 0
    batch_size: int = 2
    patch_shape: Tuple[int, int, int] = (8, 32, 32)
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0
    objective: str = "multiclass"
    freeze_encoder: bool = False
    augment: bool = True
    val_fraction: float = 0.2
    label_fraction: float = 1.0
    eval_every: int = 50
    seed: int = 0

    def __post_init__(self):
        self.patch_shape = tuple(int(_) for _ in self.patch_shape)
        _check_positive(
            "finetune",
            steps=self.steps,
            batch_size=self.batch_size,
            lr=self.lr,
            eval_every=self.eval_every,
        )
        if not 0 <= self.warmup_steps < self.steps:
            raise ConfigurationError(
                f"The warmup ({self.warmup_steps} steps) must be shorter than the run "
                f"({self.steps} steps)."
            )
        if self.objective not in OBJECTIVES:
            raise ConfigurationError(
                "Provide a valid objective—either 'binary' or 'multiclass', "
                f"not '{self.objective}'."
            )
        if not 0 <= self.val_fraction < 1:
            raise ConfigurationError(
                f"Provide a validation fraction in [0, 1), not {self.val_fraction}."
            )
        if not 0 < self.label_fraction <= 1:
            raise ConfigurationError(
                f"Provide a label fraction in (0, 1], not {self.label_fraction}."
            )
        if len(self.patch_shape) != 3 or min(self.patch_shape) < 1:
            raise ConfigurationError(f"Provide a valid patch shape, not {self.patch_shape}.")
