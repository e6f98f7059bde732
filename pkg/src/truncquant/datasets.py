"""Seeded synthetic 2-D classification datasets for the toy QAT harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

BLOBS = "blobs"
MOONS = "moons"


@dataclass(frozen=True)
class DatasetSpec:
    """Everything needed to regenerate a dataset deterministically."""

    kind: str = BLOBS
    n_train: int = 3000
    n_test: int = 600
    classes: int = 3
    sigma: float = 0.3
    noise: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (BLOBS, MOONS):
            raise DomainError(f"unknown dataset kind {self.kind!r}")
        if self.n_train <= 0 or self.n_test <= 0:
            raise DomainError("dataset sizes must be positive")
        if self.kind == BLOBS and self.classes < 2:
            raise DomainError("blobs need at least two classes")

    @property
    def num_classes(self) -> int:
        return self.classes if self.kind == BLOBS else 2


@dataclass(frozen=True)
class Dataset:
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray


def _balanced_counts(total: int, classes: int) -> list[int]:
    base, extra = divmod(total, classes)
    return [base + (1 if c < extra else 0) for c in range(classes)]


def _blobs(rng: np.random.Generator, total: int, classes: int, sigma: float):
    angles = 2.0 * np.pi * np.arange(classes) / classes
    means = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    xs, ys = [], []
    for c, count in enumerate(_balanced_counts(total, classes)):
        xs.append(means[c] + rng.normal(0.0, sigma, size=(count, 2)))
        ys.append(np.full(count, c, dtype=np.int64))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    order = rng.permutation(total)
    return x[order], y[order]


def _moons(rng: np.random.Generator, total: int, noise: float):
    counts = _balanced_counts(total, 2)
    t0 = rng.uniform(0.0, np.pi, counts[0])
    t1 = rng.uniform(0.0, np.pi, counts[1])
    x0 = np.stack([np.cos(t0), np.sin(t0)], axis=1)
    x1 = np.stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)], axis=1)
    x = np.concatenate([x0, x1]) + rng.normal(0.0, noise, size=(total, 2))
    y = np.concatenate([np.zeros(counts[0], np.int64), np.ones(counts[1], np.int64)])
    order = rng.permutation(total)
    return x[order], y[order]


def make_dataset(spec: DatasetSpec) -> Dataset:
    """Generate the train/test split; identical specs give identical data."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == BLOBS:
        train_x, train_y = _blobs(rng, spec.n_train, spec.classes, spec.sigma)
        test_x, test_y = _blobs(rng, spec.n_test, spec.classes, spec.sigma)
    else:
        train_x, train_y = _moons(rng, spec.n_train, spec.noise)
        test_x, test_y = _moons(rng, spec.n_test, spec.noise)
    return Dataset(train_x, train_y, test_x, test_y)
