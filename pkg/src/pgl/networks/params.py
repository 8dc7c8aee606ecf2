"""
Named parameter stores and the builders for every network.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..exceptions import ConfigurationError
from ..tensor.core import Tensor
from .encoder import encoder_specs
from .heads import predictor_specs, projector_specs
from .layers import ROLES
from .segmentation import head_channels, segmentation_specs

logger = logging.getLogger(__name__)

TRAINABLE_ROLES = ("weight", "bias", "norm-scale", "norm-shift")
# Roles updated with plain momentum SGD (no trust ratio, no weight decay)
EXEMPT_ROLES = ("bias", "norm-scale", "norm-shift")
PARTS = ("online", "target", "segmentation")


@dataclass(frozen=True)
class TransferReport:
    """The outcome of copying parameters between stores."""

    copied: Tuple[str, ...] = ()
    missing: Tuple[str, ...] = ()
    unexpected: Tuple[str, ...] = ()

    @property
    def clean(self):
        return not (self.missing or self.unexpected)

    def lines(self):
        yield f"copied: {len(self.copied)} parameters"
        for label, names in (("missing", self.missing), ("unexpected", self.unexpected)):
            for name in names:
                yield f"{label}: {name}"


class ParamStore:
    """
    An ordered map from parameter names to tensors.

    Each tensor carries a role: 'weight', 'bias', 'norm-scale' and
    'norm-shift' tensors are trainable (they own gradient buffers), while
    'running-stat' tensors hold batch normalization statistics and never
    receive gradients.
    """

    def __init__(self):
        self._tensors = {}
        self._roles = {}

    def __repr__(self):
        return f"ParamStore({len(self)} tensors, {self.num_parameters()} parameters)"

    def __getitem__(self, name):
        try:
            return self._tensors[name]
        except KeyError:
            raise KeyError(f"The store has no parameter named '{name}'.") from None

    def __contains__(self, name):
        return name in self._tensors

    def __iter__(self):
        return iter(self._tensors)

    def __len__(self):
        return len(self._tensors)

    def get(self, name, default=None):
        return self._tensors.get(name, default)

    def items(self):
        return self._tensors.items()

    def role(self, name):
        return self._roles[name]

    def add(self, name, value, role):
        """
        Register a new parameter.

        Parameters
        ----------
        name : str
            The unique dotted name.
        value : numpy.ndarray
            The initial values (stored as given, without copying).
        role : str
            The parameter role.
        """
        if name in self._tensors:
            raise ValueError(f"The parameter '{name}' is already in the store.")
        if role not in ROLES:
            raise ValueError(f"Provide a valid parameter role, not '{role}'.")
        tensor = Tensor(value, requires_grad=role in TRAINABLE_ROLES)
        self._tensors[name] = tensor
        self._roles[name] = role
        return tensor

    @classmethod
    def from_specs(cls, specs, rng, dtype=np.float32):
        """Initialize a store from parameter declarations, drawing from `rng`."""
        store = cls()
        for spec in specs:
            store.add(spec.name, spec.initialize(rng, dtype=dtype), spec.role)
        return store

    def trainable_items(self):
        for name, tensor in self._tensors.items():
            if self._roles[name] in TRAINABLE_ROLES:
                yield name, tensor

    def is_exempt(self, name):
        """Whether a parameter is exempt from trust-ratio scaling and decay."""
        return self._roles[name] in EXEMPT_ROLES

    def zero_grad(self):
        for _, tensor in self.trainable_items():
            tensor.zero_grad()

    def num_parameters(self):
        return sum(
            tensor.size for name, tensor in self._tensors.items()
            if self._roles[name] in TRAINABLE_ROLES
        )

    def copy(self, exclude=()):
        """
        Deep-copy the store.

        Parameters
        ----------
        exclude : tuple of str
            Name prefixes of parameters to leave out of the copy.
        """
        store = type(self)()
        for name, tensor in self._tensors.items():
            if not name.startswith(tuple(exclude)):
                store.add(name, tensor.data.copy(), self._roles[name])
        return store

    def state_dict(self):
        """Return the parameter values by name (the arrays are not copied)."""
        return {name: tensor.data for name, tensor in self._tensors.items()}

    def load_arrays(self, arrays, prefix="", strict=True):
        """
        Overwrite parameter values in place from an array mapping.

        Parameters
        ----------
        arrays : dict
            A mapping from parameter names to arrays.
        prefix : str
            Only parameters whose names start with this prefix (on either
            side) take part.
        strict : bool
            Whether any missing or unexpected name raises an error.

        Returns
        -------
        report : TransferReport
            The copied, missing and unexpected parameter names.
        """
        ours = [name for name in self._tensors if name.startswith(prefix)]
        theirs = [name for name in arrays if name.startswith(prefix)]
        missing = tuple(name for name in ours if name not in arrays)
        unexpected = tuple(name for name in theirs if name not in self._tensors)
        report = TransferReport(
            tuple(name for name in ours if name in arrays), missing, unexpected
        )
        if strict and not report.clean:
            raise ConfigurationError(
                "The stored parameters do not match the network:\n  "
                + "\n  ".join(report.lines())
            )
        for name in report.copied:
            tensor = self._tensors[name]
            value = np.asarray(arrays[name])
            if value.shape != tensor.shape:
                raise ConfigurationError(
                    f"The stored parameter '{name}' has shape {value.shape}, but the "
                    f"network expects {tensor.shape}."
                )
            np.copyto(tensor.data, value, casting="same_kind")
        return report


def online_specs(cfg):
    return encoder_specs(cfg) + projector_specs(cfg) + predictor_specs(cfg)


def target_specs(cfg):
    return encoder_specs(cfg) + projector_specs(cfg)


def build_online(cfg, rng, dtype=np.float32):
    """Initialize the online encoder, projector and predictor."""
    store = ParamStore.from_specs(online_specs(cfg), rng, dtype=dtype)
    logger.debug("Built the online network (%d parameters).", store.num_parameters())
    return store


def build_target(online):
    """Start the target network as an exact copy of the online one, minus the predictor."""
    return online.copy(exclude=("predictor.",))


def build_segmentation(cfg, num_classes, rng, objective="multiclass", dtype=np.float32):
    """Initialize a segmentation network with randomly initialized encoder and head."""
    specs = segmentation_specs(cfg, head_channels(num_classes, objective))
    return ParamStore.from_specs(specs, rng, dtype=dtype)


def transfer_encoder(source, destination):
    """
    Copy every `encoder.*` parameter of one store into another.

    Parameters
    ----------
    source : ParamStore or dict
        The pretrained store, or its arrays by name (as read from the
        'online' group of a checkpoint).
    destination : ParamStore
        The store to initialize.

    Raises
    ------
    ConfigurationError
        When the encoder parameters of the two stores differ in names or
        shapes; the message lists each mismatch.
    """
    arrays = source.state_dict() if isinstance(source, ParamStore) else source
    report = destination.load_arrays(arrays, prefix="encoder.")
    logger.info("Initialized %d encoder parameters from the pretrained store.", len(report.copied))
    return report


def count_parameters(cfg, part="online", num_classes=None, objective="multiclass"):
    """
    Count the trainable parameters of a network without allocating it.

    Parameters
    ----------
    cfg : EncoderConfig
        The architecture.
    part : str
        'online' (encoder, projector and predictor), 'target' (encoder
        and projector) or 'segmentation'.
    num_classes : int, optional
        The class count (required for 'segmentation').
    objective : str
        The segmentation objective ('binary' or 'multiclass').
    """
    if part == "online":
        specs = online_specs(cfg)
    elif part == "target":
        specs = target_specs(cfg)
    elif part == "segmentation":
        if num_classes is None:
            raise ValueError("Provide a class count to size the segmentation network.")
        specs = segmentation_specs(cfg, head_channels(num_classes, objective))
    else:
        raise ValueError(f"Provide a valid network part—one of {PARTS}, not '{part}'.")
    return sum(spec.size for spec in specs if spec.role in TRAINABLE_ROLES)
