"""
Exception types shared across the package.
"""


class ShapeError(ValueError):
    """An operation received tensors (or boxes) of incompatible shapes."""


class NumericalError(ArithmeticError):
    """A NaN or infinite value appeared where finite values are required."""


class FormatError(ValueError):
    """A file on disk does not follow the expected binary or text format."""


class ConfigurationError(ValueError):
    """A run configuration (or a checkpoint matched against it) is invalid."""


class EmptyOverlapError(ValueError):
    """Two views share no region of their source patch."""
