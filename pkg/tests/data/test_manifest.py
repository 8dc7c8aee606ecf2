"""Tests for dataset manifests."""

import numpy as np
import pytest

from pgl.data.manifest import DatasetManifest
from pgl.data.volume import Volume, save_volume
from pgl.exceptions import FormatError


@pytest.fixture
def manifest(tmp_path):
    return DatasetManifest(tuple(tmp_path / f"volume-{i}.rvf" for i in range(10)), "train", 4)


def test_round_trip(tmp_path, manifest):
    path = tmp_path / "manifest.txt"
    manifest.write(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# split=train seed=4"
    assert lines[1] == "volume-0.rvf"
    loaded = DatasetManifest.read(path)
    assert loaded.split == "train"
    assert loaded.seed == 4
    assert [p.resolve() for p in loaded.paths] == [p.resolve() for p in manifest.paths]


def test_absolute_paths_outside_the_directory(tmp_path):
    outside = tmp_path / "elsewhere" / "volume.rvf"
    (tmp_path / "lists").mkdir()
    path = tmp_path / "lists" / "manifest.txt"
    DatasetManifest((outside,), "test").write(path)
    assert DatasetManifest.read(path).paths == (outside,)


@pytest.mark.parametrize("header", ["", "split=train seed=1", "# split=train", "# seed=1"])
def test_bad_header(tmp_path, header):
    path = tmp_path / "manifest.txt"
    path.write_text(f"{header}\nvolume.rvf\n")
    with pytest.raises(FormatError, match="header"):
        DatasetManifest.read(path)


def test_unknown_split():
    with pytest.raises(FormatError, match="split"):
        DatasetManifest((), "holdout")


def test_split_off_is_disjoint(manifest):
    kept, held_out = manifest.split_off(0.2, seed=1)
    assert len(kept) == 8
    assert len(held_out) == 2
    assert held_out.split == "val"
    assert set(kept.paths).isdisjoint(held_out.paths)
    assert set(kept.paths) | set(held_out.paths) == set(manifest.paths)


def test_split_off_is_reproducible(manifest):
    assert manifest.split_off(0.3, seed=2) == manifest.split_off(0.3, seed=2)
    _, nothing = manifest.split_off(0, seed=2)
    assert len(nothing) == 0


def test_subset(manifest):
    subset = manifest.subset(0.25, seed=0)
    assert len(subset) == 3
    assert set(subset.paths) <= set(manifest.paths)
    assert len(manifest.subset(0.01, seed=0)) == 1


def test_load(tmp_path):
    paths = []
    for i in range(2):
        path = tmp_path / f"volume-{i}.rvf"
        save_volume(Volume(np.full((2, 2, 2), float(i))), path)
        paths.append(path)
    manifest_path = tmp_path / "manifest.txt"
    DatasetManifest(tuple(paths)).write(manifest_path)
    volumes = DatasetManifest.read(manifest_path).load()
    assert [volume.values[0, 0, 0] for volume in volumes] == [0.0, 1.0]
