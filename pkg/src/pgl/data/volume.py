"""
Image volumes and their on-disk format.

A volume file holds the magic bytes ``RVF1``, a u8 value type code (1
for 32-bit floats), three little-endian u32 dimensions (depth, height,
width), a u8 label flag, the row-major voxel values and, when the flag
is set, one unsigned byte of label per voxel.
"""

import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..exceptions import FormatError

logger = logging.getLogger(__name__)

MAGIC = b"RVF1"
FLOAT32_CODE = 1
HEADER = struct.Struct("<4sB3IB")
MAX_VOXELS = 2**31 - 1


@dataclass
class Volume:
    """
    A 3D image with an optional label map.

    Parameters
    ----------
    values : numpy.ndarray
        Voxel values, shaped (D, H, W) and stored as 32-bit floats.
    labels : numpy.ndarray, optional
        Integer class labels of the same shape, stored as unsigned bytes.
    provenance : str
        Where the volume came from (a file path or a generator seed).
    """

    values: np.ndarray
    labels: Optional[np.ndarray] = None
    provenance: str = ""

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float32)
        if self.values.ndim != 3 or min(self.values.shape) < 1:
            raise FormatError(
                f"A volume needs three nonzero dimensions, not shape {self.values.shape}."
            )
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != self.values.shape:
                raise FormatError(
                    f"The label map has shape {labels.shape}, but the values have "
                    f"shape {self.values.shape}."
                )
            if labels.size and (labels.min() < 0 or labels.max() > 255):
                raise FormatError("Labels must lie in [0, 255] to be stored as bytes.")
            self.labels = np.ascontiguousarray(labels, dtype=np.uint8)

    @property
    def shape(self):
        return self.values.shape

    @property
    def labeled(self):
        return self.labels is not None

    def check_labels(self, num_classes):
        """Ensure every label lies in [0, num_classes)."""
        if self.labels is None:
            raise FormatError(f"The volume '{self.provenance}' has no labels.")
        highest = int(self.labels.max())
        if highest >= num_classes:
            raise FormatError(
                f"The volume '{self.provenance}' has label {highest}, outside "
                f"[0, {num_classes})."
            )


def save_volume(volume, path):
    """Write a volume in the RVF1 format."""
    header = HEADER.pack(MAGIC, FLOAT32_CODE, *volume.shape, int(volume.labeled))
    parts = [header, volume.values.astype("<f4").tobytes()]
    if volume.labeled:
        parts.append(volume.labels.tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_volume(path):
    """
    Read a volume in the RVF1 format.

    Raises
    ------
    FormatError
        When the magic bytes, value type or dimensions are invalid, or
        when the file size differs from what the header announces.
    """
    content = Path(path).read_bytes()
    if len(content) < HEADER.size:
        raise FormatError(
            f"The volume '{path}' is truncated: expected at least {HEADER.size} header "
            f"bytes, found {len(content)}."
        )
    magic, code, *dims, labeled = HEADER.unpack_from(content)
    if magic != MAGIC:
        raise FormatError(f"The file '{path}' is not a volume (magic bytes {magic!r}).")
    if code != FLOAT32_CODE:
        raise FormatError(f"The volume '{path}' has an unknown value type code {code}.")
    if min(dims) < 1:
        raise FormatError(f"The volume '{path}' has an empty dimension: {tuple(dims)}.")
    voxels = math.prod(dims)
    if voxels > MAX_VOXELS:
        raise FormatError(f"The volume '{path}' dimensions {tuple(dims)} overflow the format.")
    expected = HEADER.size + voxels * (4 + (1 if labeled else 0))
    if len(content) != expected:
        raise FormatError(
            f"The volume '{path}' should hold {expected} bytes, but holds {len(content)}."
        )
    values = np.frombuffer(content, dtype="<f4", count=voxels, offset=HEADER.size)
    labels = None
    if labeled:
        offset = HEADER.size + 4 * voxels
        labels = np.frombuffer(content, dtype=np.uint8, count=voxels, offset=offset)
        labels = labels.reshape(dims).copy()
    logger.debug("Loaded the volume '%s' %s.", path, tuple(dims))
    return Volume(values.reshape(dims).astype(np.float32), labels, str(path))
