"""Unlabeled pretraining rows, modulo label splits and seeded batching.

Split formulas are 1-based: sample ``i`` (1..N) is labeled for training when
``i mod m == 1``.  Everything returned here is 0-based.
"""
import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidModulus, LengthMismatch

DEFAULT_BATCH = 64
LABEL_FRACTIONS = {2: "50%", 4: "25%", 8: "12.5%"}


@dataclass(frozen=True)
class StepOneDataset:
    """All N rows, labeled and unlabeled alike; no labels are attached."""

    rows: np.ndarray

    def __len__(self):
        return self.rows.shape[0]


@dataclass(frozen=True)
class StepTwoDataset:
    train_rows: np.ndarray
    train_labels: np.ndarray
    test_rows: np.ndarray
    test_labels: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    modulus: int

    @property
    def label_fraction(self):
        return LABEL_FRACTIONS.get(self.modulus, f"{100 / self.modulus:g}%")


def split_indices(n, m):
    """0-based ``(train_idx, test_idx)`` for the 1-based rule ``i mod m == 1``."""
    if m < 2:
        raise InvalidModulus(f"modulus must be at least 2, got {m}")
    if n < m:
        raise LengthMismatch(f"need at least {m} rows for modulus {m}, got {n}")
    one_based = np.arange(1, n + 1)
    train = one_based % m == 1
    return np.flatnonzero(train), np.flatnonzero(~train)


def build_step_one(X):
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] == 0:
        raise LengthMismatch(f"expected a non-empty 2-D matrix, got shape {X.shape}")
    rows = X.copy()
    rows.setflags(write=False)
    return StepOneDataset(rows)


def build_step_two(X, y, m):
    X = np.asarray(X)
    y = np.asarray(y).ravel()
    if X.shape[0] != y.size:
        raise LengthMismatch(f"{X.shape[0]} rows but {y.size} labels")
    train, test = split_indices(X.shape[0], m)
    parts = [X[train], y[train], X[test], y[test]]
    for p in parts:
        p.setflags(write=False)
    return StepTwoDataset(*parts, train, test, int(m))


def batch_iterator(data, batch_size=DEFAULT_BATCH, seed=0, epoch=0):
    """Index batches for one epoch; the permutation depends on (seed, epoch) only.

    ``data`` is a row count or anything with a length.
    """
    n_rows = data if isinstance(data, (int, np.integer)) else len(data)
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    order = np.random.default_rng([seed, epoch]).permutation(n_rows)
    for start in range(0, n_rows, batch_size):
        yield order[start : start + batch_size]


def write_split_manifest(path, ds):
    """``index,partition`` rows for all samples, 0-based, ascending."""
    part = np.empty(ds.train_idx.size + ds.test_idx.size, dtype=object)
    part[ds.train_idx] = "train"
    part[ds.test_idx] = "test"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "partition"])
        for i, p in enumerate(part):
            w.writerow([i, p])
