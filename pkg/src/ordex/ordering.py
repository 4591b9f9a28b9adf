"""Sequential feature-addition trials and the order-conditioned point clouds built from them."""
from __future__ import annotations

import csv
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ArgumentError, CapacityError
from .model import ModelSpec, SplitSpec, SubsetMseCache, marginal_reduction, subset_mse
from .synthgen import Dataset

MAX_EXHAUSTIVE = 8
TRIALS_PER_FEATURE = 20


def worker_count() -> int:
    """Thread cap from ``ORDEX_THREADS``; outputs never depend on it."""
    raw = os.environ.get("ORDEX_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ArgumentError(f"ORDEX_THREADS must be an integer, got {raw!r}") from None
    return min(4, os.cpu_count() or 1)


@dataclass
class TrialRecord:
    trial_index: int
    order: tuple[int, ...]
    step_mse: np.ndarray  # length n+1, entry 0 is the empty-subset MSE
    deltas: np.ndarray  # deltas[j] is credited to feature order[j]

    def contribution(self, feature: int) -> float:
        return float(self.deltas[self.order.index(feature)])


@dataclass
class TrialSet:
    trials: list[TrialRecord]
    mode: str
    feature_names: list[str]
    model: ModelSpec
    split: SplitSpec
    seed: Optional[int] = None
    n_fits: int = 0
    _contrib: Optional[np.ndarray] = field(default=None, repr=False)
    _position: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def __len__(self) -> int:
        return len(self.trials)

    def _tabulate(self) -> None:
        n = self.n_features
        contrib = np.empty((len(self.trials), n))
        position = np.empty((len(self.trials), n), dtype=int)
        for t, rec in enumerate(self.trials):
            order = np.asarray(rec.order)
            contrib[t, order] = rec.deltas
            position[t, order] = np.arange(n)
        self._contrib, self._position = contrib, position

    @property
    def contributions(self) -> np.ndarray:
        """``(n_trials, n_features)`` delta credited to each feature in each trial."""
        if self._contrib is None:
            self._tabulate()
        return self._contrib

    @property
    def positions(self) -> np.ndarray:
        """``(n_trials, n_features)`` step at which each feature entered."""
        if self._position is None:
            self._tabulate()
        return self._position

    def summary(self) -> dict:
        return {"mode": self.mode, "n_trials": len(self.trials), "n_model_fits": self.n_fits,
                "seed": self.seed}


@dataclass
class PairCloud:
    """Points are ``(delta_a, delta_b)``; red holds trials where ``a`` came before ``b``."""
    pair: tuple[int, int]
    red: np.ndarray
    blue: np.ndarray
    names: tuple[str, str] = ("", "")
    red_trials: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    blue_trials: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def n_points(self) -> int:
        return len(self.red) + len(self.blue)


def _prefix_masks(order: Sequence[int]) -> list[int]:
    masks, m = [0], 0
    for f in order:
        m |= 1 << f
        masks.append(m)
    return masks


def _evaluate(dataset: Dataset, masks: Iterable[int], model: ModelSpec, split: SplitSpec,
              cache: SubsetMseCache) -> dict[int, float]:
    todo = sorted(set(masks))
    workers = worker_count()
    if workers > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda m: subset_mse(dataset, m, model, split, cache), todo))
    else:
        values = [subset_mse(dataset, m, model, split, cache) for m in todo]
    return dict(zip(todo, values))


def _records(orders: Sequence[tuple[int, ...]], mse: dict[int, float]) -> list[TrialRecord]:
    out = []
    for t, order in enumerate(orders):
        steps = np.array([mse[m] for m in _prefix_masks(order)])
        deltas = np.array([marginal_reduction(steps[j], steps[j + 1]) for j in range(len(order))])
        out.append(TrialRecord(t, tuple(order), steps, deltas))
    return out


def _run(dataset, orders, mode, model, split, cache, seed) -> TrialSet:
    cache = cache if cache is not None else SubsetMseCache()
    before = cache.misses
    masks = itertools.chain.from_iterable(_prefix_masks(o) for o in orders)
    mse = _evaluate(dataset, masks, model, split, cache)
    return TrialSet(_records(orders, mse), mode, list(dataset.feature_names), model, split,
                    seed=seed, n_fits=cache.misses - before)


def run_exhaustive(dataset: Dataset, model: ModelSpec = ModelSpec(), split: SplitSpec = SplitSpec(),
                   cache: Optional[SubsetMseCache] = None) -> TrialSet:
    """Every addition order, lexicographic. n! trials but only 2^n model fits."""
    n = dataset.n_features
    if n > MAX_EXHAUSTIVE:
        raise CapacityError(f"exhaustive ordering supports at most {MAX_EXHAUSTIVE} features "
                            f"({n} given); use run_sampled instead")
    orders = list(itertools.permutations(range(n)))
    return _run(dataset, orders, "exhaustive", model, split, cache, None)


def trial_order(seed: int, trial_index: int, n_features: int) -> tuple[int, ...]:
    """Uniform random permutation for one trial, independent of how many trials run."""
    rng = np.random.default_rng([int(seed) & ((1 << 64) - 1), int(trial_index)])
    return tuple(int(i) for i in rng.permutation(n_features))


def run_sampled(dataset: Dataset, model: ModelSpec = ModelSpec(), split: SplitSpec = SplitSpec(),
                n_trials: Optional[int] = None, seed: int = 0,
                cache: Optional[SubsetMseCache] = None) -> TrialSet:
    """``n_trials`` random addition orders (default ``20 * n_features``)."""
    if n_trials is None:
        n_trials = TRIALS_PER_FEATURE * dataset.n_features
    if int(n_trials) != n_trials or n_trials < 1:
        raise ArgumentError(f"n_trials must be a positive integer, got {n_trials!r}")
    orders = [trial_order(seed, t, dataset.n_features) for t in range(n_trials)]
    return _run(dataset, orders, "sampled", model, split, cache, seed)


def _check_indices(idx: Sequence[int], n: int) -> None:
    if len(set(idx)) != len(idx):
        raise ArgumentError(f"feature indices must be distinct, got {tuple(idx)}")
    for i in idx:
        if not 0 <= i < n:
            raise ArgumentError(f"feature index {i} out of range for {n} features")


def build_pair_clouds(trials: TrialSet, pair: tuple[int, int]) -> PairCloud:
    a, b = pair
    _check_indices((a, b), trials.n_features)
    contrib, pos = trials.contributions, trials.positions
    points = contrib[:, [a, b]]
    first = pos[:, a] < pos[:, b]
    idx = np.arange(len(trials))
    names = (trials.feature_names[a], trials.feature_names[b])
    return PairCloud((a, b), points[first], points[~first], names, idx[first], idx[~first])


def export_triad_cloud(trials: TrialSet, triple: tuple[int, int, int]) -> np.ndarray:
    """``(n_trials, 3)`` array of the deltas credited to the three features."""
    _check_indices(tuple(triple), trials.n_features)
    return trials.contributions[:, list(triple)].copy()


# --- CSV exports ----------------------------------------------------------

def write_trials_csv(trials: TrialSet, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial_index", "position", "feature_name", "mse_before", "mse_after", "delta"])
        for rec in trials.trials:
            for j, f in enumerate(rec.order):
                w.writerow([rec.trial_index, j, trials.feature_names[f], repr(float(rec.step_mse[j])),
                            repr(float(rec.step_mse[j + 1])), repr(float(rec.deltas[j]))])


def write_pair_cloud_csv(cloud: PairCloud, path: str | Path) -> None:
    rows = [(int(t), "red", p) for t, p in zip(cloud.red_trials, cloud.red)]
    rows += [(int(t), "blue", p) for t, p in zip(cloud.blue_trials, cloud.blue)]
    rows.sort(key=lambda r: r[0])
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial_index", "arm", "x", "y"])
        for t, arm, (x, y) in rows:
            w.writerow([t, arm, repr(float(x)), repr(float(y))])


def write_triad_csv(points: np.ndarray, names: Sequence[str], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial_index", *names])
        for t, p in enumerate(points):
            w.writerow([t, *(repr(float(v)) for v in p)])
