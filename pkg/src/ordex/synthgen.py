"""Synthetic synergy, redundancy and triad datasets with distractor features.

Every generator is a pure function of its arguments: the same kind, sizes,
noise level and seed always give a bit-identical :class:`Dataset`.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ArgumentError

DEFAULT_NOISE_SD = 0.05
DEFAULT_DISTRACTORS = 3

SYNERGY_KINDS = ("multiplicative", "asymmetric_cubic", "trigonometric")
REDUNDANCY_KINDS = ("cubic", "square", "trigonometric", "absolute")

_SEED_MASK = (1 << 64) - 1


@dataclass
class Dataset:
    feature_names: list[str]
    features: np.ndarray
    target: np.ndarray
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        self.target = np.asarray(self.target, dtype=float)
        if self.features.ndim != 2:
            raise ArgumentError("features must be a 2-D matrix")
        if self.target.shape != (self.features.shape[0],):
            raise ArgumentError("target length must match the number of feature rows")
        if len(self.feature_names) != self.features.shape[1]:
            raise ArgumentError("one name per feature column is required")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ArgumentError("feature names must be unique")
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.target))):
            raise ArgumentError("dataset contains non-finite values")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def index_of(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise ArgumentError(f"unknown feature {name!r}") from None


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & _SEED_MASK)


def _check(n_samples: int, n_distractors: int, noise_sd: float) -> None:
    if int(n_samples) != n_samples or n_samples < 10:
        raise ArgumentError(f"n_samples must be an integer >= 10, got {n_samples!r}")
    if int(n_distractors) != n_distractors or n_distractors < 0:
        raise ArgumentError(f"n_distractors must be a non-negative integer, got {n_distractors!r}")
    if not np.isfinite(noise_sd) or noise_sd < 0:
        raise ArgumentError(f"noise_sd must be finite and non-negative, got {noise_sd!r}")


def _assemble(generator, params, seed, informative, target, distractors) -> Dataset:
    features = np.column_stack(informative + [distractors[:, j] for j in range(distractors.shape[1])])
    names = [f"x{i + 1}" for i in range(features.shape[1])]
    provenance = {"generator": generator, "params": dict(params), "seed": int(seed)}
    return Dataset(names, features, target, provenance)


def gen_synergy(kind: str = "multiplicative", n_samples: int = 1000,
                n_distractors: int = DEFAULT_DISTRACTORS,
                noise_sd: float = DEFAULT_NOISE_SD, seed: int = 0) -> Dataset:
    """Target driven jointly by x1 and x2; x1 alone and x2 alone carry little signal.

    ``kind`` selects ``x1*x2``, ``x1**3 * x2`` or ``sin(x1*x2)``.
    """
    if kind not in SYNERGY_KINDS:
        raise ArgumentError(f"unknown synergy kind {kind!r}; valid kinds: {', '.join(SYNERGY_KINDS)}")
    _check(n_samples, n_distractors, noise_sd)
    rng = _rng(seed)
    a = rng.standard_normal(n_samples)
    b = rng.standard_normal(n_samples)
    distractors = rng.standard_normal((n_samples, n_distractors))
    eps = noise_sd * rng.standard_normal(n_samples)
    if kind == "multiplicative":
        y = a * b
    elif kind == "asymmetric_cubic":
        y = a ** 3 * b
    else:
        y = np.sin(a * b)
    params = {"kind": kind, "n_samples": n_samples, "n_distractors": n_distractors,
              "noise_sd": float(noise_sd)}
    return _assemble("synergy", params, seed, [a, b], y + eps, distractors)


def gen_redundancy(kind: str = "cubic", n_samples: int = 1000,
                   n_distractors: int = DEFAULT_DISTRACTORS,
                   noise_sd: float = DEFAULT_NOISE_SD, seed: int = 0) -> Dataset:
    """x1 is the latent signal and the target is x1 plus noise; x2 is a noisy
    transform of x1 (``cubic``, ``square``, ``trigonometric`` = cos(pi*x1),
    or ``absolute``).
    """
    if kind not in REDUNDANCY_KINDS:
        raise ArgumentError(f"unknown redundancy kind {kind!r}; valid kinds: {', '.join(REDUNDANCY_KINDS)}")
    _check(n_samples, n_distractors, noise_sd)
    rng = _rng(seed)
    a = rng.standard_normal(n_samples)
    distractors = rng.standard_normal((n_samples, n_distractors))
    eps_feature = noise_sd * rng.standard_normal(n_samples)
    eps_target = noise_sd * rng.standard_normal(n_samples)
    if kind == "cubic":
        b = a ** 3
    elif kind == "square":
        b = a ** 2
    elif kind == "trigonometric":
        b = np.cos(np.pi * a)
    else:
        b = np.abs(a)
    params = {"kind": kind, "n_samples": n_samples, "n_distractors": n_distractors,
              "noise_sd": float(noise_sd)}
    return _assemble("redundancy", params, seed, [a, b + eps_feature], a + eps_target, distractors)


def gen_triple(n_samples: int = 1000, n_distractors: int = DEFAULT_DISTRACTORS,
               noise_sd: float = DEFAULT_NOISE_SD, seed: int = 0) -> Dataset:
    """Target is x1*x2*x3 plus noise; no single feature or pair predicts it."""
    _check(n_samples, n_distractors, noise_sd)
    rng = _rng(seed)
    x = rng.standard_normal((n_samples, 3))
    distractors = rng.standard_normal((n_samples, n_distractors))
    eps = noise_sd * rng.standard_normal(n_samples)
    params = {"n_samples": n_samples, "n_distractors": n_distractors, "noise_sd": float(noise_sd)}
    return _assemble("triple", params, seed, [x[:, 0], x[:, 1], x[:, 2]],
                     x[:, 0] * x[:, 1] * x[:, 2] + eps, distractors)


def gen_independent(n_samples: int = 1000, n_features: int = 4,
                    noise_sd: float = 1.0, seed: int = 0) -> Dataset:
    """Distractor-only control: the target is pure noise, independent of every feature."""
    if int(n_features) != n_features or n_features < 1:
        raise ArgumentError("n_features must be a positive integer")
    _check(n_samples, n_features, noise_sd)
    rng = _rng(seed)
    x = rng.standard_normal((n_samples, n_features))
    y = max(noise_sd, 1e-12) * rng.standard_normal(n_samples)
    params = {"n_samples": n_samples, "n_features": n_features, "noise_sd": float(noise_sd)}
    return _assemble("independent", params, seed, [], y, x)


GENERATORS = {
    "synergy": gen_synergy,
    "redundancy": gen_redundancy,
    "triple": gen_triple,
    "independent": gen_independent,
}


def regenerate(provenance: dict[str, Any]) -> Dataset:
    """Rebuild a dataset from its provenance record."""
    try:
        gen = GENERATORS[provenance["generator"]]
    except KeyError:
        raise ArgumentError(f"provenance names no known generator: {provenance!r}") from None
    return gen(**provenance["params"], seed=provenance["seed"])


# --- CSV round trip -------------------------------------------------------

def write_csv(dataset: Dataset, path: str | Path, provenance_path: str | Path | None = None) -> Path:
    """Write features then target (column ``y``) as CSV plus a JSON provenance sidecar.

    Floats use Python's shortest round-trip repr, so reading the file back
    reproduces the arrays exactly.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(dataset.feature_names) + ["y"])
        for row, y in zip(dataset.features.tolist(), dataset.target.tolist()):
            w.writerow([repr(v) for v in row] + [repr(y)])
    if provenance_path is None:
        provenance_path = path.with_suffix(".json")
    prov = dataset.provenance or {"generator": "csv", "params": {}, "seed": 0}
    Path(provenance_path).write_text(json.dumps(prov, sort_keys=True, indent=2) + "\n")
    return path


def read_csv(path: str | Path, target: str = "y") -> Dataset:
    """Load a numeric CSV; every column other than ``target`` becomes a feature."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ArgumentError(f"{path} is empty")
    header, body = rows[0], [r for r in rows[1:] if r]
    if target not in header:
        raise ArgumentError(f"target column {target!r} not found in {path}")
    data = np.empty((len(body), len(header)))
    for j, name in enumerate(header):
        for i, row in enumerate(body):
            try:
                data[i, j] = float(row[j])
            except (ValueError, IndexError):
                raise ArgumentError(f"column {name!r} has non-numeric value at data row {i + 1}") from None
    t = header.index(target)
    names = [h for j, h in enumerate(header) if j != t]
    features = np.delete(data, t, axis=1)
    prov: dict[str, Any] = {"generator": "csv", "params": {"path": path.name, "target": target}, "seed": 0}
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        try:
            prov = json.loads(sidecar.read_text())
        except json.JSONDecodeError:
            pass
    return Dataset(names, features, data[:, t], prov)
