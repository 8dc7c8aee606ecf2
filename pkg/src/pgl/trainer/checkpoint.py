"""
Reading and writing training checkpoints.

A checkpoint file holds named arrays: the magic bytes ``PGLCKPT1``, a
little-endian u32 tensor count, then per tensor a manifest entry (u16
name length, UTF-8 name, u8 dtype code, u8 rank, u32 dims), followed by
the raw little-endian values of every tensor in manifest order.

Names are grouped by a prefix: ``online/``, ``target/``, ``optimizer/``,
``segmentation/`` and ``meta/`` (step counter and seed).
"""

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict

import numpy as np

from ..exceptions import FormatError

logger = logging.getLogger(__name__)

MAGIC = b"PGLCKPT1"
DTYPE_CODES = {
    1: np.dtype("<f4"),
    2: np.dtype("<f8"),
    3: np.dtype("<i8"),
    4: np.dtype("u1"),
}
CODES_BY_DTYPE = {dtype: code for code, dtype in DTYPE_CODES.items()}
GROUPS = ("online", "target", "optimizer", "segmentation")


def write_arrays(path, arrays):
    """
    Write named arrays in the checkpoint format.

    Parameters
    ----------
    path : str or pathlib.Path
        The destination file.
    arrays : dict
        Arrays by name, written in iteration order.
    """
    manifest = [struct.pack("<I", len(arrays))]
    payload = []
    for name, array in arrays.items():
        array = np.asarray(array)
        dtype = array.dtype.newbyteorder("<") if array.dtype.itemsize > 1 else array.dtype
        try:
            code = CODES_BY_DTYPE[dtype]
        except KeyError:
            raise ValueError(
                f"Arrays of type {array.dtype} cannot be checkpointed ('{name}')."
            ) from None
        encoded = name.encode("utf-8")
        manifest.append(struct.pack("<H", len(encoded)) + encoded)
        manifest.append(struct.pack(f"<BB{array.ndim}I", code, array.ndim, *array.shape))
        payload.append(np.ascontiguousarray(array, dtype=dtype).tobytes())
    Path(path).write_bytes(MAGIC + b"".join(manifest) + b"".join(payload))


class _Reader:
    def __init__(self, content, path):
        self.content = content
        self.path = path
        self.offset = 0

    def take(self, size, what):
        if self.offset + size > len(self.content):
            raise FormatError(
                f"The checkpoint '{self.path}' is truncated while reading {what}: "
                f"expected at least {self.offset + size} bytes, found {len(self.content)}."
            )
        chunk = self.content[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_arrays(path):
    """Read every named array of a checkpoint file, in manifest order."""
    reader = _Reader(Path(path).read_bytes(), path)
    magic = reader.take(len(MAGIC), "the magic bytes")
    if magic != MAGIC:
        raise FormatError(f"The file '{path}' is not a checkpoint (magic bytes {magic!r}).")
    (count,) = reader.unpack("<I", "the tensor count")
    entries = []
    for _ in range(count):
        (length,) = reader.unpack("<H", "a name length")
        name = reader.take(length, "a name").decode("utf-8")
        code, rank = reader.unpack("<BB", f"the type of '{name}'")
        if code not in DTYPE_CODES:
            raise FormatError(f"The tensor '{name}' has an unknown type code {code}.")
        shape = reader.unpack(f"<{rank}I", f"the shape of '{name}'")
        entries.append((name, DTYPE_CODES[code], shape))
    arrays = {}
    for name, dtype, shape in entries:
        size = int(np.prod(shape)) * dtype.itemsize
        values = np.frombuffer(reader.take(size, f"the values of '{name}'"), dtype=dtype)
        arrays[name] = values.reshape(shape).astype(dtype.newbyteorder("="))
    if reader.offset != len(reader.content):
        raise FormatError(
            f"The checkpoint '{path}' has {len(reader.content) - reader.offset} trailing bytes."
        )
    return arrays


@dataclass
class Checkpoint:
    """
    The saved state of a run.

    Attributes
    ----------
    step : int
        The number of completed steps.
    seed : int
        The run seed. Every step derives its random streams from the
        seed and its index, so the two restore the random state.
    groups : dict
        Array mappings keyed by group ('online', 'target', 'optimizer'
        or 'segmentation').
    """

    step: int
    seed: int
    groups: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)

    def save(self, path):
        arrays = {
            "meta/step": np.array(self.step, dtype=np.int64),
            "meta/seed": np.array(self.seed, dtype=np.int64),
        }
        for group, group_arrays in self.groups.items():
            if group not in GROUPS:
                raise ValueError(f"Provide a valid checkpoint group, not '{group}'.")
            for name, array in group_arrays.items():
                arrays[f"{group}/{name}"] = array
        write_arrays(path, arrays)
        logger.info("Saved a checkpoint of step %d to '%s'.", self.step, path)

    @classmethod
    def load(cls, path):
        arrays = read_arrays(path)
        try:
            step = int(arrays.pop("meta/step"))
            seed = int(arrays.pop("meta/seed"))
        except KeyError:
            raise FormatError(f"The checkpoint '{path}' has no step counter or seed.") from None
        groups = {}
        for key, array in arrays.items():
            group, _, name = key.partition("/")
            if group not in GROUPS or not name:
                raise FormatError(f"The checkpoint '{path}' holds an unknown tensor '{key}'.")
            groups.setdefault(group, {})[name] = array
        return cls(step, seed, groups)

    def group(self, name):
        try:
            return self.groups[name]
        except KeyError:
            raise FormatError(f"The checkpoint holds no '{name}' parameters.") from None
