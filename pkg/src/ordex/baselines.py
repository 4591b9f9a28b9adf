"""Reference measures to set beside the L-score.

Pearson correlation and binned mutual information look only at the
features; Shapley values and pairwise Shapley interaction indices are exact
enumerations over the same subset-MSE game the orderings use,
``v(S) = MSE(empty) - MSE(S)``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import CapacityError, InsufficientData
from .model import ModelSpec, SplitSpec, SubsetMseCache, subset_mse
from .ordering import worker_count
from .synthgen import Dataset

MAX_SHAPLEY_FEATURES = 12
MIN_MI_SAMPLES = 50

METRICS = ("pearson", "mutual_information", "shapley_value", "shapley_interaction")


@dataclass
class MetricMatrix:
    metric: str
    feature_names: list[str]
    values: np.ndarray  # (n, n), or (n,) for shapley_value
    units: str = "dimensionless"

    def __getitem__(self, idx):
        return self.values[idx]

    def to_dict(self) -> dict:
        vals = self.values.tolist()
        return {"metric": self.metric, "feature_names": list(self.feature_names),
                "units": self.units, "values": vals}

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if self.values.ndim == 1:
                w.writerow(self.feature_names)
                w.writerow([repr(float(v)) for v in self.values])
            else:
                w.writerow(["feature", *self.feature_names])
                for name, row in zip(self.feature_names, self.values):
                    w.writerow([name, *(repr(float(v)) for v in row)])


def pearson_matrix(dataset: Dataset) -> MetricMatrix:
    """Sample correlation of every feature pair; constant columns give 0 off the diagonal."""
    x = dataset.features
    if x.shape[0] < 2:
        raise InsufficientData("Pearson correlation needs at least 2 samples")
    c = x - x.mean(axis=0)
    norms = np.sqrt((c ** 2).sum(axis=0))
    constant = norms == 0
    if constant.any():
        names = [n for n, k in zip(dataset.feature_names, constant) if k]
        warnings.warn(f"constant feature columns {names}; their correlations are reported as 0")
    safe = np.where(constant, 1.0, norms)
    r = (c.T @ c) / np.outer(safe, safe)
    r[constant, :] = 0.0
    r[:, constant] = 0.0
    r = np.clip(r, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return MetricMatrix("pearson", list(dataset.feature_names), r)


def mi_bins(n_samples: int) -> int:
    return int(min(max(math.floor(math.sqrt(n_samples / 5)), 4), 32))


def equal_frequency_codes(column: np.ndarray, bins: int) -> np.ndarray:
    """Bin index per sample from ranks; tied values always share a bin."""
    ranks = rankdata(column, method="min") - 1
    return np.minimum((ranks * bins) // len(column), bins - 1).astype(int)


def binned_mutual_information(x_codes: np.ndarray, y_codes: np.ndarray, bins: int,
                              bias_correction: Optional[str] = None) -> float:
    """Mutual information in bits from two integer code vectors.

    The plug-in estimate is biased upward by roughly (B-1)^2 / (2 n ln 2);
    ``bias_correction="miller_madow"`` subtracts the occupied-cell version of
    that term.
    """
    joint = np.zeros((bins, bins))
    np.add.at(joint, (x_codes, y_codes), 1.0)
    n = joint.sum()
    occupied = (int(np.count_nonzero(joint)), int(np.count_nonzero(joint.sum(axis=1))),
                int(np.count_nonzero(joint.sum(axis=0))))
    joint /= n
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log2(joint[nz] / (px @ py)[nz])))
    if bias_correction == "miller_madow":
        cells, rows, cols = occupied
        mi -= (cells - rows - cols + 1) / (2.0 * n * math.log(2))
    elif bias_correction is not None:
        raise ValueError(f"unknown bias correction {bias_correction!r}")
    return max(mi, 0.0)


def mutual_information_matrix(dataset: Dataset, bias_correction: Optional[str] = None) -> MetricMatrix:
    """Equal-frequency binned MI for every pair; the diagonal holds the log2(B) ceiling."""
    n = dataset.n_samples
    if n < MIN_MI_SAMPLES:
        raise InsufficientData(f"mutual information needs at least {MIN_MI_SAMPLES} samples, got {n}")
    bins = mi_bins(n)
    codes = [equal_frequency_codes(dataset.features[:, j], bins) for j in range(dataset.n_features)]
    p = dataset.n_features
    out = np.zeros((p, p))
    for i in range(p):
        out[i, i] = math.log2(bins)
        for j in range(i + 1, p):
            out[i, j] = out[j, i] = binned_mutual_information(codes[i], codes[j], bins,
                                                               bias_correction)
    return MetricMatrix("mutual_information", list(dataset.feature_names), out, units="bits")


# --- exact Shapley quantities on a subset game ------------------------------

def _popcounts(n: int) -> np.ndarray:
    masks = np.arange(1 << n)
    return np.array([bin(m).count("1") for m in masks.tolist()])


def shapley_from_game(v: np.ndarray, n: int) -> np.ndarray:
    """Shapley values from a game table ``v[mask]`` of length 2**n."""
    v = np.asarray(v, dtype=float)
    size = _popcounts(n)
    fact = [math.factorial(i) for i in range(n + 1)]
    weight = np.array([fact[s] * fact[n - s - 1] / fact[n] if s < n else 0.0 for s in size])
    masks = np.arange(1 << n)
    phi = np.zeros(n)
    for i in range(n):
        without = masks[(masks >> i & 1) == 0]
        phi[i] = float(np.sum(weight[without] * (v[without | (1 << i)] - v[without])))
    return phi


def interactions_from_game(v: np.ndarray, n: int) -> np.ndarray:
    """Pairwise Shapley interaction index; diagonal left at 0."""
    v = np.asarray(v, dtype=float)
    size = _popcounts(n)
    fact = [math.factorial(i) for i in range(n + 1)]
    masks = np.arange(1 << n)
    out = np.zeros((n, n))
    if n < 2:
        return out
    weight = np.array([fact[s] * fact[n - s - 2] / (2 * fact[n - 1]) if s <= n - 2 else 0.0
                       for s in size])
    for i in range(n):
        for j in range(i + 1, n):
            bi, bj = 1 << i, 1 << j
            s = masks[(masks & (bi | bj)) == 0]
            second = v[s | bi | bj] - v[s | bi] - v[s | bj] + v[s]
            out[i, j] = out[j, i] = float(np.sum(weight[s] * second))
    return out


def mse_game(dataset: Dataset, model: ModelSpec = ModelSpec(), split: SplitSpec = SplitSpec(),
             cache: Optional[SubsetMseCache] = None) -> np.ndarray:
    """Table of ``v(S) = MSE(empty) - MSE(S)`` over every subset mask."""
    n = dataset.n_features
    if n > MAX_SHAPLEY_FEATURES:
        raise CapacityError(f"exact Shapley enumeration supports at most {MAX_SHAPLEY_FEATURES} "
                            f"features ({n} given)")
    cache = cache if cache is not None else SubsetMseCache()
    masks = list(range(1 << n))
    fn: Callable[[int], float] = lambda m: subset_mse(dataset, m, model, split, cache)
    workers = worker_count()
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            mse = np.array(list(pool.map(fn, masks)))
    else:
        mse = np.array([fn(m) for m in masks])
    return mse[0] - mse


def shapley_values(dataset: Dataset, model: ModelSpec = ModelSpec(), split: SplitSpec = SplitSpec(),
                   cache: Optional[SubsetMseCache] = None) -> MetricMatrix:
    v = mse_game(dataset, model, split, cache)
    return MetricMatrix("shapley_value", list(dataset.feature_names),
                        shapley_from_game(v, dataset.n_features), units="mse_reduction")


def shapley_interaction_matrix(dataset: Dataset, model: ModelSpec = ModelSpec(),
                               split: SplitSpec = SplitSpec(),
                               cache: Optional[SubsetMseCache] = None) -> MetricMatrix:
    v = mse_game(dataset, model, split, cache)
    return MetricMatrix("shapley_interaction", list(dataset.feature_names),
                        interactions_from_game(v, dataset.n_features), units="mse_reduction")


def top_pair(matrix: np.ndarray, key: Callable[[np.ndarray], np.ndarray] = np.abs) -> tuple[int, int]:
    """Off-diagonal pair ``(i, j)``, ``i < j``, with the largest ``key(value)``."""
    m = key(np.asarray(matrix, dtype=float)).copy()
    n = m.shape[0]
    m[np.tril_indices(n)] = -np.inf
    i, j = np.unravel_index(int(np.argmax(m)), m.shape)
    return int(i), int(j)


def pairs_table(names: Sequence[str]) -> list[tuple[int, int]]:
    return [(i, j) for i in range(len(names)) for j in range(i + 1, len(names))]
