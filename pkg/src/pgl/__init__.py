"""
Prior-guided local self-supervised pretraining for volumetric images.
"""

try:
    from ._version import __version__
except ImportError:  # pragma: no cover
    __version__ = "0.0.0"
