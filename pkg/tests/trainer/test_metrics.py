"""Tests for metric rows and their CSV files."""

from pgl.trainer.metrics import MetricsWriter, StepMetrics, read_rows, ssl_columns


def test_columns():
    assert ssl_columns() == ("step", "loss", "lr", "omega", "skipped_pairs", "wall_ms")
    assert ssl_columns(wall_time=False) == ("step", "loss", "lr", "omega", "skipped_pairs")


def test_write_steps(tmp_path):
    path = tmp_path / "metrics.csv"
    writer = MetricsWriter(path, ssl_columns(wall_time=False))
    for step in range(3):
        writer.write_step(StepMetrics(step, 0.1 * step, 0.2, 0.996, 0, wall_ms=12.5))
    lines = path.read_text().splitlines()
    assert len(lines) == 4
    assert lines[0] == "step,loss,lr,omega,skipped_pairs"
    assert lines[2] == "1,0.1,0.2,0.996,0"


def test_floats_round_trip(tmp_path):
    path = tmp_path / "metrics.csv"
    value = 1 / 3
    MetricsWriter(path, ("step", "loss")).write(step=0, loss=value)
    assert float(read_rows(path)[0]["loss"]) == value


def test_reopening_appends(tmp_path):
    path = tmp_path / "metrics.csv"
    MetricsWriter(path, ("step",)).write(step=0)
    MetricsWriter(path, ("step",)).write(step=1)
    assert [row["step"] for row in read_rows(path)] == ["0", "1"]
