"""
Run configuration files.

A run configuration is an INI-style text file with one ``[section]`` per
settings group and ``key = value`` lines. Tuples are written as
comma-separated values (``8, 32, 32``); tuples of tuples separate their
members with semicolons (``1,2,2; 2,2,2``). Booleans accept the usual
spellings (``true``/``false``, ``yes``/``no``, ``on``/``off``, ``1``/``0``).
"""

import configparser
import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path

from ..align.config import AlignConfig
from ..augment.config import AugmentConfig
from ..data.synth import SynthSpec
from ..exceptions import ConfigurationError
from ..loss.config import LossConfig
from ..networks.config import EncoderConfig
from ..trainer.config import FinetuneConfig, TrainConfig

BOOLEAN_STATES = configparser.ConfigParser.BOOLEAN_STATES


@dataclass
class DataConfig:
    """
    The `data` section of a run configuration.

    Attributes
    ----------
    manifest : str
        The manifest of pretraining volumes (default: 'data/manifest.txt').
    labeled_manifest : str
        The manifest of labeled fine-tuning volumes (default: the
        pretraining manifest).
    clip_lo, clip_hi : float
        The intensity window applied before normalization, in Hounsfield
        units (defaults: -1024 and 325).
    prefetch : int
        Batches prepared ahead of the training step; 0 makes batches on
        demand (default: 2).
    """

    manifest: str = "data/manifest.txt"
    labeled_manifest: str = ""
    clip_lo: float = -1024.0
    clip_hi: float = 325.0
    prefetch: int = 2

    def __post_init__(self):
        if not self.clip_lo < self.clip_hi:
            raise ConfigurationError(
                f"The clip window [{self.clip_lo}, {self.clip_hi}] must be nonempty."
            )
        if self.prefetch < 0:
            raise ConfigurationError(
                f"Provide a non-negative prefetch capacity, not {self.prefetch}."
            )

    @property
    def finetune_manifest(self):
        return self.labeled_manifest or self.manifest


@dataclass
class OutputConfig:
    """
    The `output` section of a run configuration.

    Attributes
    ----------
    directory : str
        Where checkpoints, metrics and the resolved configuration are
        written (default: 'runs').
    progress : bool
        Whether long loops show a progress bar (default: true).
    wall_time : bool
        Whether metrics files record step durations; turn off for
        byte-identical reruns (default: true).
    """

    directory: str = "runs"
    progress: bool = True
    wall_time: bool = True


SECTIONS = {
    "data": DataConfig,
    "augment": AugmentConfig,
    "align": AlignConfig,
    "network": EncoderConfig,
    "loss": LossConfig,
    "trainer": TrainConfig,
    "finetune": FinetuneConfig,
    "output": OutputConfig,
}


def _coerce(text, annotation, where):
    text = text.strip()
    if typing.get_origin(annotation) is tuple:
        args = typing.get_args(annotation)
        inner = args[0]
        separator = ";" if typing.get_origin(inner) is tuple else ","
        items = [item for item in text.split(separator) if item.strip()]
        if args[-1] is not Ellipsis and len(items) != len(args):
            raise ConfigurationError(
                f"'{where}' takes {len(args)} values, not {len(items)} ('{text}')."
            )
        return tuple(_coerce(item, inner, where) for item in items)
    if annotation is bool:
        try:
            return BOOLEAN_STATES[text.lower()]
        except KeyError:
            raise ConfigurationError(
                f"Provide a valid boolean for '{where}'—for example 'true' or 'false', "
                f"not '{text}'."
            ) from None
    try:
        return annotation(text)
    except ValueError:
        raise ConfigurationError(
            f"Provide a valid {annotation.__name__} for '{where}', not '{text}'."
        ) from None


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(_format(item) for item in value)
        return ", ".join(_format(item) for item in value)
    return str(value)


def build_section(section_class, name, values):
    """Build one settings dataclass from the raw text of its `name` section."""
    hints = typing.get_type_hints(section_class)
    known = {f.name for f in dataclasses.fields(section_class)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigurationError(
            f"The '{name}' section has no setting named '{unknown[0]}' "
            f"(known settings: {', '.join(sorted(known))})."
        )
    kwargs = {key: _coerce(text, hints[key], f"{name}.{key}") for key, text in values.items()}
    if section_class is EncoderConfig:
        return EncoderConfig.preset_named(kwargs.pop("preset", "desk"), **kwargs)
    return section_class(**kwargs)


def parse_override(text):
    """
    Split a ``section.key=value`` override.

    Returns
    -------
    section, key, value : str
    """
    name, separator, value = text.partition("=")
    section, dot, key = name.removeprefix("--").partition(".")
    if not separator or not dot or not section or not key:
        raise ConfigurationError(
            f"Provide overrides as '--section.key=value', not '{text}'."
        )
    return section, key, value


@dataclass
class RunConfig:
    """Every settings section of a run."""

    data: DataConfig = field(default_factory=DataConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    align: AlignConfig = field(default_factory=AlignConfig)
    network: EncoderConfig = field(default_factory=EncoderConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    trainer: TrainConfig = field(default_factory=TrainConfig)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_text(cls, text, overrides=(), source="<string>"):
        """
        Parse a configuration and apply command line overrides.

        Parameters
        ----------
        text : str
            The configuration file content.
        overrides : sequence of str
            ``section.key=value`` settings, applied after the file.
        source : str
            The name used in error messages.
        """
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigurationError(f"The configuration '{source}' is malformed: {exc}") from None
        if parser.defaults():
            raise ConfigurationError("Settings must belong to a named section, not [DEFAULT].")
        values = {name: {} for name in SECTIONS}
        for name in parser.sections():
            if name not in SECTIONS:
                raise ConfigurationError(
                    f"Provide a valid section—one of {tuple(SECTIONS)}, not '{name}'."
                )
            values[name].update(parser[name])
        for override in overrides:
            section, key, value = parse_override(override)
            if section not in SECTIONS:
                raise ConfigurationError(
                    f"Provide a valid section—one of {tuple(SECTIONS)}, not '{section}'."
                )
            values[section][key] = value
        sections = {name: build_section(SECTIONS[name], name, values[name]) for name in SECTIONS}
        return cls(**sections)

    @classmethod
    def read(cls, path=None, overrides=()):
        """Read a configuration file (or only the defaults when `path` is `None`)."""
        if path is None:
            return cls.from_text("", overrides)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"The configuration '{path}' cannot be read: {exc}") from None
        return cls.from_text(text, overrides, source=str(path))

    def to_text(self):
        lines = []
        for name in SECTIONS:
            lines.append(f"[{name}]")
            section = getattr(self, name)
            for section_field in dataclasses.fields(section):
                value = getattr(section, section_field.name)
                lines.append(f"{section_field.name} = {_format(value)}")
            lines.append("")
        return "\n".join(lines)

    def write(self, path):
        """Write the fully resolved configuration; reading it back yields an equal one."""
        Path(path).write_text(self.to_text())


def read_synth_spec(path=None):
    """Read the `[synth]` section of a data generation file (or the defaults)."""
    if path is None:
        return SynthSpec()
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(Path(path).read_text(), source=str(path))
    except OSError as exc:
        raise ConfigurationError(
            f"The generator settings '{path}' cannot be read: {exc}"
        ) from None
    except configparser.Error as exc:
        raise ConfigurationError(
            f"The generator settings '{path}' are malformed: {exc}"
        ) from None
    unknown = [name for name in parser.sections() if name != "synth"]
    if unknown:
        raise ConfigurationError(
            f"Generator settings hold a single [synth] section, not '{unknown[0]}'."
        )
    values = dict(parser["synth"]) if parser.has_section("synth") else {}
    return build_section(SynthSpec, "synth", values)
