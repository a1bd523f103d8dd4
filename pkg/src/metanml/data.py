"""Labelled datasets and their CSV round-trip.

CSV layout: header ``x_1,...,x_m,y`` with 1-based class labels, RFC
4180 quoting, '.' decimal separator.  In memory labels are 0-based.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["Dataset", "dataset_to_csv", "dataset_from_csv"]


@dataclass
class Dataset:
    """Encoded query points ``X`` (one row each) and 0-based labels ``y``."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.y = np.ascontiguousarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-d (n, m)")
        if self.y.shape != (self.X.shape[0],):
            raise ValueError("y must have one label per row of X")
        if self.n and self.y.min() < 0:
            raise ValueError("labels must be nonnegative")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def num_features(self):
        return self.X.shape[1]


def dataset_to_csv(dataset, path):
    """Write a dataset; labels go out 1-based, floats as shortest repr."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            m = dataset.num_features
            writer.writerow([f"x_{j + 1}" for j in range(m)] + ["y"])
            for i in range(dataset.n):
                row = [repr(float(v)) for v in dataset.X[i]]
                row.append(str(int(dataset.y[i]) + 1))
                writer.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write dataset to {path}: {exc}") from exc


def dataset_from_csv(path):
    """Read a dataset written by :func:`dataset_to_csv`."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or header[-1] != "y":
                raise ValueError(f"{path}: expected header x_1..x_m,y")
            m = len(header) - 1
            xs, ys = [], []
            for row in reader:
                if not row:
                    continue
                if len(row) != m + 1:
                    raise ValueError(f"{path}: row width {len(row)} != {m + 1}")
                xs.append([float(v) for v in row[:m]])
                label = int(row[m])
                if label < 1:
                    raise ValueError(f"{path}: labels are 1-based, got {label}")
                ys.append(label - 1)
    except OSError as exc:
        raise OSError(f"cannot read dataset from {path}: {exc}") from exc
    X = np.asarray(xs, dtype=float).reshape(len(ys), m)
    return Dataset(X=X, y=np.asarray(ys, dtype=np.int64))
