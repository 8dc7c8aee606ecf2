"""Tests for the checkpoint file format."""

import numpy as np
import pytest

from pgl.exceptions import FormatError
from pgl.networks.encoder import encode
from pgl.networks.params import build_online
from pgl.tensor.core import Tensor
from pgl.trainer.checkpoint import MAGIC, Checkpoint, read_arrays, write_arrays


@pytest.fixture
def arrays():
    rng = np.random.default_rng(3)
    return {
        "online/encoder.stem.conv.weight": rng.standard_normal((4, 1, 3, 3, 3)).astype(np.float32),
        "online/encoder.stem.bn.running_mean": rng.standard_normal(4),
        "meta/step": np.array(12, dtype=np.int64),
        "segmentation/mask": np.arange(6, dtype=np.uint8).reshape(2, 3),
    }


def test_round_trip(tmp_path, arrays):
    path = tmp_path / "arrays.pgl"
    write_arrays(path, arrays)
    loaded = read_arrays(path)
    assert list(loaded) == list(arrays)
    for name, array in arrays.items():
        assert loaded[name].dtype == array.dtype
        np.testing.assert_array_equal(loaded[name], array)


def test_magic_bytes(tmp_path, arrays):
    path = tmp_path / "arrays.pgl"
    write_arrays(path, arrays)
    assert path.read_bytes().startswith(MAGIC)


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.pgl"
    path.write_bytes(b"NOTACKPT" + bytes(8))
    with pytest.raises(FormatError, match="not a checkpoint"):
        read_arrays(path)


def test_truncated_file(tmp_path, arrays):
    path = tmp_path / "arrays.pgl"
    write_arrays(path, arrays)
    content = path.read_bytes()
    path.write_bytes(content[:-5])
    with pytest.raises(FormatError, match=f"expected at least {len(content)} bytes, found"):
        read_arrays(path)


def test_trailing_bytes(tmp_path, arrays):
    path = tmp_path / "arrays.pgl"
    write_arrays(path, arrays)
    path.write_bytes(path.read_bytes() + b"\x00\x00")
    with pytest.raises(FormatError, match="2 trailing bytes"):
        read_arrays(path)


def test_unsupported_dtype(tmp_path):
    with pytest.raises(ValueError, match="complex"):
        write_arrays(tmp_path / "x.pgl", {"z": np.ones(2, dtype=np.complex64)})


def test_checkpoint_groups(tmp_path, online):
    checkpoint = Checkpoint(5, 42, {"online": online.state_dict()})
    path = tmp_path / "ckpt.pgl"
    checkpoint.save(path)
    loaded = Checkpoint.load(path)
    assert (loaded.step, loaded.seed) == (5, 42)
    assert list(loaded.group("online")) == list(online)
    with pytest.raises(FormatError, match="no 'target' parameters"):
        loaded.group("target")


def test_unknown_group(tmp_path):
    with pytest.raises(ValueError):
        Checkpoint(0, 0, {"scratch": {"a": np.ones(1)}}).save(tmp_path / "x.pgl")


def test_missing_meta(tmp_path):
    path = tmp_path / "x.pgl"
    write_arrays(path, {"online/a": np.ones(1)})
    with pytest.raises(FormatError, match="step counter"):
        Checkpoint.load(path)


def test_forward_is_unchanged_after_reload(tmp_path, desk_config, views):
    params = build_online(desk_config, np.random.default_rng(0))
    x = Tensor(views, dtype=np.float32)
    before = encode(params, x, desk_config, training=False).data
    path = tmp_path / "ckpt.pgl"
    Checkpoint(0, 0, {"online": params.state_dict()}).save(path)
    restored = build_online(desk_config, np.random.default_rng(1))
    restored.load_arrays(Checkpoint.load(path).group("online"))
    after = encode(restored, x, desk_config, training=False).data
    np.testing.assert_array_equal(before, after)
