"""Holdout MSE of regressors trained on a feature subset.

Subsets are bitmasks: bit ``i`` set means feature column ``i`` is used.
The empty subset predicts the (standardized) train-target mean.
"""
from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ArgumentError, NumericalError
from .synthgen import Dataset

MAX_FEATURES = 64
RIDGE = 1e-8
_KNN_BLOCK = 256


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ArgumentError(f"train_fraction must be in (0, 1), got {self.train_fraction}")

    def partition(self, n_samples: int) -> tuple[np.ndarray, np.ndarray]:
        """Seeded shuffle, then the first ``round(train_fraction * n)`` rows train."""
        rng = np.random.default_rng(int(self.seed) & ((1 << 64) - 1))
        perm = rng.permutation(n_samples)
        n_train = min(max(int(round(self.train_fraction * n_samples)), 1), n_samples - 1)
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "knn"
    k: Optional[int] = None  # None -> max(5, round(sqrt(n_train)))

    def __post_init__(self) -> None:
        if self.kind not in ("knn", "linear"):
            raise ArgumentError(f"model kind must be 'knn' or 'linear', got {self.kind!r}")
        if self.k is not None and (int(self.k) != self.k or self.k < 1):
            raise ArgumentError(f"k must be a positive integer, got {self.k!r}")

    def neighbours(self, n_train: int) -> int:
        k = self.k if self.k is not None else max(5, int(math.floor(math.sqrt(n_train) + 0.5)))
        if k > n_train:
            raise ArgumentError(f"k={k} exceeds the {n_train} training rows")
        return k

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": self.k}


def _fingerprint(dataset: Dataset, model: ModelSpec, split: SplitSpec) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(dataset.features).tobytes())
    h.update(np.ascontiguousarray(dataset.target).tobytes())
    h.update(repr((model, split)).encode())
    return h.hexdigest()


class SubsetMseCache:
    """Memo of holdout MSE per subset mask for one (dataset, model, split).

    Thread-safe. ``misses`` counts actual model fits.
    """

    def __init__(self) -> None:
        self._values: dict[int, float] = {}
        self._lock = threading.Lock()
        self._context: Optional[str] = None
        self.misses = 0
        self.hits = 0

    def __len__(self) -> int:
        return len(self._values)

    def __contains__(self, mask: int) -> bool:
        return mask in self._values

    def bind(self, context: str) -> None:
        with self._lock:
            if self._context is None:
                self._context = context
            elif self._context != context:
                raise ArgumentError("cache already holds values for a different dataset/model/split")

    def get(self, mask: int) -> Optional[float]:
        with self._lock:
            value = self._values.get(mask)
            if value is not None:
                self.hits += 1
            return value

    def put(self, mask: int, value: float) -> float:
        with self._lock:
            # first writer wins so concurrent duplicate fits stay invisible
            if mask not in self._values:
                self._values[mask] = value
                self.misses += 1
            return self._values[mask]

    def items(self):
        with self._lock:
            return sorted(self._values.items())


def standardize(values: np.ndarray, train_idx: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Z-score ``values`` column-wise using statistics of the train rows only.

    Returns ``(scaled, mean, scale)``; zero-variance columns get scale 1.
    """
    values = np.asarray(values, dtype=float)
    train = values[train_idx]
    mean = train.mean(axis=0)
    scale = train.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return (values - mean) / scale, mean, scale


def mask_columns(mask: int, n_features: int) -> list[int]:
    if mask < 0 or mask >> n_features:
        raise ArgumentError(f"subset mask {mask:#x} has bits outside {n_features} features")
    return [i for i in range(n_features) if mask >> i & 1]


def knn_predict(x_train: np.ndarray, y_train: np.ndarray, x_test: np.ndarray, k: int) -> np.ndarray:
    """Uniform-weight k-NN regression; equal distances resolve to the lower train row."""
    out = np.empty(len(x_test))
    for start in range(0, len(x_test), _KNN_BLOCK):
        block = x_test[start:start + _KNN_BLOCK]
        d2 = ((block[:, None, :] - x_train[None, :, :]) ** 2).sum(axis=2)
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1:k]
        closer = d2 < kth
        tied = d2 == kth
        # fill the remaining slots from the tied rows in index order
        room = k - closer.sum(axis=1, keepdims=True)
        chosen = closer | (tied & (np.cumsum(tied, axis=1) <= room))
        out[start:start + len(block)] = (chosen @ y_train) / k
    return out


def linear_predict(x_train: np.ndarray, y_train: np.ndarray, x_test: np.ndarray) -> np.ndarray:
    """Least squares with intercept via ridge-conditioned normal equations."""
    a = np.column_stack([np.ones(len(x_train)), x_train])
    gram = a.T @ a + RIDGE * np.eye(a.shape[1])
    coef = np.linalg.solve(gram, a.T @ y_train)
    return np.column_stack([np.ones(len(x_test)), x_test]) @ coef


def _compute(dataset: Dataset, cols: list[int], model: ModelSpec, split: SplitSpec) -> float:
    train_idx, test_idx = split.partition(dataset.n_samples)
    if len(test_idx) < 10:
        raise ArgumentError(f"split leaves {len(test_idx)} test rows; at least 10 required")
    k = model.neighbours(len(train_idx)) if model.kind == "knn" else None
    y, _, _ = standardize(dataset.target, train_idx)
    y_train, y_test = y[train_idx], y[test_idx]
    if not cols:
        pred = np.full(len(test_idx), y_train.mean())
    else:
        x, _, _ = standardize(dataset.features[:, cols], train_idx)
        if model.kind == "knn":
            pred = knn_predict(x[train_idx], y_train, x[test_idx], k)
        else:
            pred = linear_predict(x[train_idx], y_train, x[test_idx])
    return float(np.mean((y_test - pred) ** 2))


def subset_mse(dataset: Dataset, subset: int, model: ModelSpec = ModelSpec(),
               split: SplitSpec = SplitSpec(), cache: Optional[SubsetMseCache] = None) -> float:
    """Holdout MSE (standardized target units) of ``model`` fit on the columns in ``subset``."""
    if dataset.n_features > MAX_FEATURES:
        raise ArgumentError(f"{dataset.n_features} features exceeds the {MAX_FEATURES}-feature limit")
    cols = mask_columns(int(subset), dataset.n_features)
    if cache is not None:
        cache.bind(_fingerprint(dataset, model, split))
        hit = cache.get(int(subset))
        if hit is not None:
            return hit
    value = _compute(dataset, cols, model, split)
    if cache is not None:
        value = cache.put(int(subset), value)
    return value


def marginal_reduction(mse_before: float, mse_after: float) -> float:
    """MSE drop from adding one feature; negative when the addition hurts."""
    if not (math.isfinite(mse_before) and math.isfinite(mse_after)):
        raise NumericalError(f"non-finite MSE: before={mse_before}, after={mse_after}")
    return mse_before - mse_after
