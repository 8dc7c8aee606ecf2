"""Tests for the pretraining step and loop."""

import logging

import numpy as np
import pytest

from pgl.align.config import AlignConfig
from pgl.augment.config import AugmentConfig
from pgl.augment.records import TransformRecord, ViewPair
from pgl.data.sampling import ssl_batch
from pgl.data.volume import Volume
from pgl.exceptions import NumericalError
from pgl.networks.config import EncoderConfig
from pgl.networks.params import build_online, build_target
from pgl.trainer.checkpoint import Checkpoint
from pgl.trainer.config import TrainConfig
from pgl.trainer.metrics import MetricsWriter, read_rows, ssl_columns
from pgl.trainer.optim import Lars
from pgl.trainer.ssl import Pretrainer, SslSetup, checkpoint_path, ssl_backward, ssl_train_step

VIEW_SHAPE = (8, 32, 32)


@pytest.fixture
def volumes():
    rng = np.random.default_rng(5)
    return [Volume(rng.standard_normal((16, 48, 48)), provenance=f"noise-{i}") for i in range(2)]


@pytest.fixture
def pairs(volumes):
    return ssl_batch(volumes, 0, 3, VIEW_SHAPE, 2, AugmentConfig())


def small_setup(**train):
    settings = dict(steps=10, warmup_steps=2, batch_size=2, view_shape=VIEW_SHAPE)
    settings.update(train)
    return SslSetup(train=TrainConfig(**settings))


def trainable_snapshot(store):
    return {name: tensor.data.copy() for name, tensor in store.trainable_items()}


class TestSslBackward:
    def test_target_receives_no_gradient(self, online, target, pairs):
        loss, skipped = ssl_backward(online, target, pairs, small_setup())
        assert loss > 0
        assert skipped == 0
        for _, tensor in target.trainable_items():
            assert not np.any(tensor.grad)
        assert any(np.any(tensor.grad) for _, tensor in online.trainable_items())

    def test_identity_pair_has_zero_loss(self):
        cfg = EncoderConfig(predictor="identity")
        online = build_online(cfg, np.random.default_rng(2), dtype=np.float64)
        target = build_target(online)
        rng = np.random.default_rng(8)
        rec = TransformRecord.identity(VIEW_SHAPE)
        pairs = [
            ViewPair(view, view, rec, rec)
            for view in rng.standard_normal((2, *VIEW_SHAPE)).astype(np.float32)
        ]
        setup = SslSetup(network=cfg, train=TrainConfig(batch_size=2))
        loss, _ = ssl_backward(online, target, pairs, setup)
        assert loss == pytest.approx(0, abs=1e-6)

    def test_joint_and_sequential_modes_agree(self, online, target, pairs):
        results = []
        for mode in ("joint", "sequential"):
            online_copy, target_copy = online.copy(), target.copy()
            loss, _ = ssl_backward(
                online_copy, target_copy, pairs, small_setup(symmetric_mode=mode)
            )
            grads = {name: tensor.grad.copy() for name, tensor in online_copy.trainable_items()}
            results.append((loss, grads))
        (joint_loss, joint_grads), (sequential_loss, sequential_grads) = results
        assert joint_loss == pytest.approx(sequential_loss, rel=1e-10)
        for name, grad in joint_grads.items():
            np.testing.assert_allclose(sequential_grads[name], grad, rtol=1e-8, atol=1e-12)

    @pytest.mark.parametrize(
        "use_flipalign, use_csalign",
        [[True, True], [False, True], [True, False], [False, False]],
    )
    def test_every_ablation_arm(self, online, target, pairs, use_flipalign, use_csalign):
        setup = small_setup()
        setup.align = AlignConfig(use_flipalign=use_flipalign, use_csalign=use_csalign)
        loss, skipped = ssl_backward(online, target, pairs, setup)
        assert 0 <= loss <= 8
        assert skipped == 0

    def test_nan_weights_give_a_non_finite_loss(self, online, target, pairs):
        online["encoder.stem.conv.weight"].data[...] = np.nan
        loss, _ = ssl_backward(online, target, pairs, small_setup())
        assert not np.isfinite(loss)


class TestSslTrainStep:
    def test_target_moves_only_by_the_moving_average(self, online, target, pairs):
        setup = small_setup()
        optimizer = Lars(online)
        before = {name: tensor.data.copy() for name, tensor in target.items()}
        metrics = ssl_train_step(pairs, online, target, optimizer, 5, setup)
        for name, tensor in target.items():
            if target.role(name) == "running-stat":
                np.testing.assert_array_equal(tensor.data, online[name].data)
            else:
                expected = metrics.omega * before[name] + (1 - metrics.omega) * online[name].data
                np.testing.assert_array_equal(tensor.data, expected)

    def test_metrics(self, online, target, pairs):
        metrics = ssl_train_step(pairs, online, target, Lars(online), 5, small_setup())
        assert metrics.step == 5
        assert metrics.lr == pytest.approx(0.2 * (np.cos(np.pi * 3 / 8) + 1) / 2)
        assert 0.996 < metrics.omega < 1
        assert metrics.skipped_pairs == 0
        assert metrics.wall_ms > 0

    def test_first_step_has_zero_learning_rate(self, online, target, pairs):
        before = trainable_snapshot(online)
        metrics = ssl_train_step(pairs, online, target, Lars(online), 0, small_setup())
        assert metrics.lr == 0
        for name, value in trainable_snapshot(online).items():
            np.testing.assert_array_equal(value, before[name])

    def test_pairs_without_overlap_skip_the_step(self, online, target, caplog):
        rng = np.random.default_rng(0)
        first = TransformRecord((0, 0, 0), (4, 16, 16), VIEW_SHAPE)
        second = TransformRecord((6, 20, 20), (10, 36, 36), VIEW_SHAPE)
        view = rng.standard_normal(VIEW_SHAPE).astype(np.float32)
        pairs = [ViewPair(view, view, first, second)] * 2
        before = trainable_snapshot(online)
        with caplog.at_level(logging.WARNING):
            metrics = ssl_train_step(pairs, online, target, Lars(online), 5, small_setup())
        assert metrics.loss == 0.0
        assert metrics.skipped_pairs == 2
        assert "Skipped step 5" in caplog.text
        for name, value in trainable_snapshot(online).items():
            np.testing.assert_array_equal(value, before[name])

    def test_non_finite_loss(self, online, target, pairs):
        online["encoder.stem.conv.weight"].data[...] = np.nan
        with pytest.raises(NumericalError, match="step 5"):
            ssl_train_step(pairs, online, target, Lars(online), 5, small_setup())


class TestPretrainer:
    @pytest.fixture
    def make_batch(self, volumes):
        def make_batch(index):
            return ssl_batch(volumes, index, 0, VIEW_SHAPE, 2)

        return make_batch

    def test_target_starts_as_a_copy(self):
        pretrainer = Pretrainer(small_setup())
        assert "predictor.layer1.conv.weight" in pretrainer.online
        assert "predictor.layer1.conv.weight" not in pretrainer.target
        for name, tensor in pretrainer.target.items():
            np.testing.assert_array_equal(tensor.data, pretrainer.online[name].data)

    def test_resume_matches_an_uninterrupted_run(self, tmp_path, make_batch):
        setup = small_setup(steps=4, warmup_steps=1, checkpoint_every=2)
        uninterrupted = Pretrainer(setup)
        history = uninterrupted.run(make_batch, checkpoint_dir=tmp_path, prefetch=0)
        assert checkpoint_path(tmp_path, 2).exists()
        assert checkpoint_path(tmp_path, 4).exists()
        resumed = Pretrainer.from_checkpoint(Checkpoint.load(checkpoint_path(tmp_path, 2)), setup)
        assert resumed.step == 2
        resumed_history = resumed.run(make_batch, prefetch=2)
        assert [m.loss for m in resumed_history] == [m.loss for m in history[2:]]
        stores = [(resumed.online, uninterrupted.online), (resumed.target, uninterrupted.target)]
        for store, reference in stores:
            for name, tensor in store.items():
                np.testing.assert_array_equal(tensor.data, reference[name].data)

    def test_target_checkpoints_replay_from_the_logged_momentum(self, tmp_path, make_batch):
        setup = small_setup(steps=4, warmup_steps=1, checkpoint_every=1)
        writer = MetricsWriter(tmp_path / "pretrain.csv", ssl_columns(wall_time=False))
        initial = Pretrainer(setup)
        target = {name: value.copy() for name, value in initial.target.state_dict().items()}
        roles = {name: initial.target.role(name) for name in target}
        Pretrainer(setup).run(make_batch, writer=writer, checkpoint_dir=tmp_path, prefetch=0)
        rows = read_rows(tmp_path / "pretrain.csv")
        assert len(rows) == 4
        for row in rows:
            omega = float(row["omega"])
            saved = Checkpoint.load(checkpoint_path(tmp_path, int(row["step"]) + 1))
            online = saved.group("online")
            # A step without any overlapping pair leaves the target alone
            moved = int(row["skipped_pairs"]) < setup.train.batch_size
            for name, previous in target.items():
                if not moved:
                    replayed = previous
                elif roles[name] == "running-stat":
                    replayed = online[name].copy()
                else:
                    replayed = np.empty_like(previous)
                    replayed[...] = omega * previous + (1 - omega) * online[name]
                np.testing.assert_array_equal(saved.group("target")[name], replayed)
                target[name] = replayed

    def test_metrics_file(self, tmp_path, make_batch):
        path = tmp_path / "pretrain.csv"
        writer = MetricsWriter(path, ssl_columns(wall_time=False))
        Pretrainer(small_setup(steps=3, warmup_steps=1)).run(make_batch, writer=writer)
        lines = path.read_text().splitlines()
        assert len(lines) == 4
        assert [line.split(",")[0] for line in lines[1:]] == ["0", "1", "2"]

    def test_reruns_are_identical(self, tmp_path, make_batch):
        contents = []
        for run in range(2):
            path = tmp_path / f"run{run}.csv"
            writer = MetricsWriter(path, ssl_columns(wall_time=False))
            Pretrainer(small_setup(steps=2, warmup_steps=1)).run(make_batch, writer=writer)
            contents.append(path.read_text())
        assert contents[0] == contents[1]


@pytest.mark.slow
def test_desk_pretraining_reduces_the_loss():
    from pgl.data.preprocess import preprocess
    from pgl.data.sampling import SYNTH_STREAM, step_rng
    from pgl.data.synth import SynthSpec, synth_generate

    improved = 0
    for seed in range(5):
        volumes = [
            preprocess(synth_generate(SynthSpec(), step_rng(seed, SYNTH_STREAM, i)))
            for i in range(10)
        ]
        setup = SslSetup(train=TrainConfig(steps=200, seed=seed))
        history = Pretrainer(setup).run(
            lambda index: ssl_batch(volumes, index, seed, VIEW_SHAPE, 4)
        )
        losses = [metrics.loss for metrics in history]
        assert all(np.isfinite(losses))
        improved += np.mean(losses[-50:]) < np.mean(losses[:50])
    assert improved >= 4
