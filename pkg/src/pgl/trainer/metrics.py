"""
Per-step training metrics and the CSV files that record them.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

SSL_COLUMNS = ("step", "loss", "lr", "omega", "skipped_pairs")


@dataclass
class StepMetrics:
    """
    The outcome of one training step.

    Attributes
    ----------
    step : int
        The index of the step (counting from 0).
    loss : float
        The training loss.
    lr : float
        The learning rate applied.
    omega : float
        The target momentum applied (pretraining only).
    skipped_pairs : int
        View pairs that contributed nothing for lack of overlap.
    wall_ms : float
        The duration of the step in milliseconds.
    """

    step: int
    loss: float
    lr: float
    omega: float = 1.0
    skipped_pairs: int = 0
    wall_ms: float = 0.0


def format_value(value):
    """Write integers as they are and floats with full round-trip precision."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class MetricsWriter:
    """
    An append-only CSV file of metric rows.

    The header is written when the file is new; reopening an existing
    file (to resume a run) appends after the rows already present.

    Parameters
    ----------
    path : str or pathlib.Path
        The CSV file.
    columns : tuple of str
        The column names, in order.
    """

    def __init__(self, path, columns):
        self.path = Path(path)
        self.columns = tuple(columns)
        if not self.path.exists() or self.path.stat().st_size == 0:
            with self.path.open("w", newline="") as csv_file:
                csv.writer(csv_file).writerow(self.columns)

    def write(self, **values):
        row = [format_value(values[column]) for column in self.columns]
        with self.path.open("a", newline="") as csv_file:
            csv.writer(csv_file).writerow(row)

    def write_step(self, metrics):
        self.write(**vars(metrics))


def ssl_columns(wall_time=True):
    """The pretraining metric columns (the wall time is optional so reruns compare equal)."""
    return SSL_COLUMNS + (("wall_ms",) if wall_time else ())


def read_rows(path):
    with Path(path).open(newline="") as csv_file:
        return list(csv.DictReader(csv_file))
