"""Run configuration, the end-to-end pipeline, and canonical report output."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .baselines import (MAX_SHAPLEY_FEATURES, MetricMatrix, mutual_information_matrix, pearson_matrix,
                        shapley_interaction_matrix, shapley_values)
from .errors import ArgumentError, CapacityError
from .geometry import (DEFAULT_TAU, FlaggedTriple, ScoreMatrix, detect_higher_order,
                       score_matrix)
from .model import ModelSpec, SplitSpec, SubsetMseCache
from .ordering import (TrialSet, build_pair_clouds, export_triad_cloud, run_exhaustive,
                       run_sampled, write_pair_cloud_csv, write_triad_csv)
from .synthgen import (DEFAULT_DISTRACTORS, DEFAULT_NOISE_SD, Dataset, gen_independent,
                       gen_redundancy, gen_synergy, gen_triple, read_csv)

BASELINES = ("pearson", "mutual_information", "shapley")

# CLI generator names -> (generator, kind)
GENERATOR_KINDS = {
    "synergy-multiplicative": ("synergy", "multiplicative"),
    "synergy-cubic": ("synergy", "asymmetric_cubic"),
    "synergy-trig": ("synergy", "trigonometric"),
    "redundancy-cubic": ("redundancy", "cubic"),
    "redundancy-square": ("redundancy", "square"),
    "redundancy-trig": ("redundancy", "trigonometric"),
    "redundancy-absolute": ("redundancy", "absolute"),
    "triple": ("triple", None),
    "independent": ("independent", None),
}


@dataclass
class GeneratorSpec:
    kind: str = "synergy-cubic"
    samples: int = 2000
    distractors: int = DEFAULT_DISTRACTORS
    noise: float = DEFAULT_NOISE_SD
    seed: int = 42

    def build(self) -> Dataset:
        if self.kind not in GENERATOR_KINDS:
            raise ArgumentError(f"unknown generator kind {self.kind!r}; valid kinds: "
                                f"{', '.join(GENERATOR_KINDS)}")
        gen, kind = GENERATOR_KINDS[self.kind]
        if gen == "synergy":
            return gen_synergy(kind, self.samples, self.distractors, self.noise, self.seed)
        if gen == "redundancy":
            return gen_redundancy(kind, self.samples, self.distractors, self.noise, self.seed)
        if gen == "triple":
            return gen_triple(self.samples, self.distractors, self.noise, self.seed)
        # independent: every feature is a distractor
        return gen_independent(self.samples, max(self.distractors, 1), max(self.noise, 1e-12), self.seed)


@dataclass
class RunConfig:
    data: Optional[str] = None
    target: str = "y"
    generator: Optional[GeneratorSpec] = None
    mode: str = "sampled"
    n_trials: Optional[int] = None
    model: ModelSpec = field(default_factory=ModelSpec)
    split: SplitSpec = field(default_factory=SplitSpec)
    seed: int = 0
    baselines: list[str] = field(default_factory=list)
    tau: float = DEFAULT_TAU

    def __post_init__(self) -> None:
        if (self.data is None) == (self.generator is None):
            raise ArgumentError("exactly one of a CSV path or a generator spec is required")
        if self.mode not in ("exhaustive", "sampled"):
            raise ArgumentError(f"mode must be 'exhaustive' or 'sampled', got {self.mode!r}")
        if self.n_trials is not None and self.n_trials < 1:
            raise ArgumentError("n_trials must be positive")
        unknown = set(self.baselines) - set(BASELINES)
        if unknown:
            raise ArgumentError(f"unknown baselines {sorted(unknown)}; valid: {', '.join(BASELINES)}")
        self.baselines = sorted(set(self.baselines))
        if not 0 < self.tau <= 1:
            raise ArgumentError(f"tau must lie in (0, 1], got {self.tau}")

    def to_dict(self) -> dict:
        return {
            "data": self.data,
            "target": self.target,
            "generator": dataclasses.asdict(self.generator) if self.generator else None,
            "mode": self.mode,
            "n_trials": self.n_trials,
            "model": self.model.to_dict(),
            "split": {"train_fraction": self.split.train_fraction, "seed": self.split.seed},
            "seed": self.seed,
            "baselines": list(self.baselines),
            "tau": self.tau,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        """Inverse of :meth:`to_dict`; any key not in the schema is rejected."""
        _reject_unknown(raw, {f.name for f in dataclasses.fields(cls)}, "config")
        raw = dict(raw)
        if raw.get("generator") is not None:
            _reject_unknown(raw["generator"], {f.name for f in dataclasses.fields(GeneratorSpec)},
                            "generator")
            raw["generator"] = GeneratorSpec(**raw["generator"])
        if "model" in raw:
            _reject_unknown(raw["model"], {"kind", "k"}, "model")
            raw["model"] = ModelSpec(**raw["model"])
        if "split" in raw:
            _reject_unknown(raw["split"], {"train_fraction", "seed"}, "split")
            raw["split"] = SplitSpec(**raw["split"])
        return cls(**raw)

    def load_dataset(self) -> Dataset:
        if self.generator is not None:
            return self.generator.build()
        return read_csv(self.data, self.target)


def _reject_unknown(raw: Any, allowed: set[str], where: str) -> None:
    if not isinstance(raw, dict):
        raise ArgumentError(f"{where} must be a mapping")
    extra = set(raw) - allowed
    if extra:
        raise ArgumentError(f"unknown {where} keys: {sorted(extra)}")


@dataclass
class RunResult:
    config: RunConfig
    dataset: Dataset
    trials: TrialSet
    scores: ScoreMatrix
    triples: list[FlaggedTriple]
    baselines: dict[str, MetricMatrix]
    cache: SubsetMseCache


def run(config: RunConfig, dataset: Optional[Dataset] = None) -> RunResult:
    dataset = dataset if dataset is not None else config.load_dataset()
    if "shapley" in config.baselines and dataset.n_features > MAX_SHAPLEY_FEATURES:
        # fail before the trials rather than after them
        raise CapacityError(f"exact Shapley enumeration supports at most {MAX_SHAPLEY_FEATURES} "
                            f"features, dataset has {dataset.n_features}")
    cache = SubsetMseCache()
    if config.mode == "exhaustive":
        trials = run_exhaustive(dataset, config.model, config.split, cache)
    else:
        trials = run_sampled(dataset, config.model, config.split, config.n_trials, config.seed, cache)
    scores = score_matrix(trials)
    triples = detect_higher_order(scores, config.tau)
    baselines: dict[str, MetricMatrix] = {}
    if "pearson" in config.baselines:
        baselines["pearson"] = pearson_matrix(dataset)
    if "mutual_information" in config.baselines:
        baselines["mutual_information"] = mutual_information_matrix(dataset)
    if "shapley" in config.baselines:
        baselines["shapley_value"] = shapley_values(dataset, config.model, config.split, cache)
        baselines["shapley_interaction"] = shapley_interaction_matrix(dataset, config.model,
                                                                      config.split, cache)
    return RunResult(config, dataset, trials, scores, triples, baselines, cache)


# --- report ---------------------------------------------------------------

def _clean(obj: Any) -> Any:
    """Plain-JSON copy with numpy scalars unwrapped and non-finite floats as None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def canonical_json(obj: Any) -> str:
    """Sorted keys, shortest round-trip floats, trailing newline."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def build_report(result: RunResult) -> dict:
    ds = result.dataset
    return _clean({
        "tool": {"name": "ordex", "version": __version__},
        "config": result.config.to_dict(),
        "dataset": {"n_samples": ds.n_samples, "n_features": ds.n_features,
                    "feature_names": list(ds.feature_names), "provenance": ds.provenance},
        "trials": result.trials.summary(),
        "pairs": [s.to_dict() for _, s in sorted(result.scores.scores.items())],
        "baselines": {k: m.to_dict() for k, m in sorted(result.baselines.items())},
        "triples": [t.to_dict() for t in result.triples],
        "timing": {"model_fits": result.cache.misses, "cached_subsets": len(result.cache)},
    })


_NUM = {"type": ["number", "null"]}
_GEOM = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lambda1", "lambda2", "theta", "skinny", "horiz", "n_points", "degenerate"],
    "properties": {"lambda1": _NUM, "lambda2": _NUM, "theta": _NUM, "skinny": _NUM,
                   "horiz": _NUM, "n_points": {"type": "integer"}, "degenerate": {"type": "boolean"}},
}
_METRIC = {
    "type": "object",
    "additionalProperties": False,
    "required": ["metric", "feature_names", "units", "values"],
    "properties": {"metric": {"enum": ["pearson", "mutual_information", "shapley_value",
                                       "shapley_interaction"]},
                   "feature_names": {"type": "array", "items": {"type": "string"}},
                   "units": {"type": "string"},
                   "values": {"type": "array"}},
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["tool", "config", "dataset", "trials", "pairs", "baselines", "triples", "timing"],
    "properties": {
        "tool": {"type": "object", "additionalProperties": False, "required": ["name", "version"],
                 "properties": {"name": {"const": "ordex"}, "version": {"type": "string"}}},
        "config": {
            "type": "object", "additionalProperties": False,
            "required": ["data", "target", "generator", "mode", "n_trials", "model", "split",
                         "seed", "baselines", "tau"],
            "properties": {
                "data": {"type": ["string", "null"]},
                "target": {"type": "string"},
                "generator": {"type": ["object", "null"]},
                "mode": {"enum": ["exhaustive", "sampled"]},
                "n_trials": {"type": ["integer", "null"]},
                "model": {"type": "object"},
                "split": {"type": "object"},
                "seed": {"type": "integer"},
                "baselines": {"type": "array", "items": {"enum": list(BASELINES)}},
                "tau": {"type": "number"},
            },
        },
        "dataset": {
            "type": "object", "additionalProperties": False,
            "required": ["n_samples", "n_features", "feature_names", "provenance"],
            "properties": {"n_samples": {"type": "integer"}, "n_features": {"type": "integer"},
                           "feature_names": {"type": "array", "items": {"type": "string"}},
                           "provenance": {"type": "object"}},
        },
        "trials": {
            "type": "object", "additionalProperties": False,
            "required": ["mode", "n_trials", "n_model_fits", "seed"],
            "properties": {"mode": {"enum": ["exhaustive", "sampled"]},
                           "n_trials": {"type": "integer"}, "n_model_fits": {"type": "integer"},
                           "seed": {"type": ["integer", "null"]}},
        },
        "pairs": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["pair", "names", "l_score", "dominance", "red", "blue",
                         "mean_delta_a", "mean_delta_b"],
            "properties": {"pair": {"type": "array", "items": {"type": "integer"}},
                           "names": {"type": "array", "items": {"type": "string"}},
                           "l_score": {"type": "number", "minimum": -1, "maximum": 1},
                           "dominance": {"type": "number", "minimum": -1, "maximum": 1},
                           "red": _GEOM, "blue": _GEOM,
                           "mean_delta_a": {"type": "number"}, "mean_delta_b": {"type": "number"}},
        }},
        "baselines": {"type": "object", "additionalProperties": _METRIC},
        "triples": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["triple", "names", "type", "l_scores"],
            "properties": {"triple": {"type": "array", "items": {"type": "integer"}},
                           "names": {"type": "array", "items": {"type": "string"}},
                           "type": {"enum": ["synergy", "redundancy"]},
                           "l_scores": {"type": "array", "items": {"type": "number"}}},
        }},
        "timing": {"type": "object", "additionalProperties": False,
                   "required": ["model_fits", "cached_subsets"],
                   "properties": {"model_fits": {"type": "integer"},
                                  "cached_subsets": {"type": "integer"}}},
    },
}


# --- artifacts ------------------------------------------------------------

def comparison_rows(result: RunResult) -> list[dict]:
    rows = []
    b = result.baselines
    for (i, j), s in sorted(result.scores.scores.items()):
        row = {"a": s.names[0], "b": s.names[1], "l_score": s.l_score, "dominance": s.dominance}
        for key in ("pearson", "mutual_information", "shapley_interaction"):
            row[key] = float(b[key].values[i, j]) if key in b else None
        rows.append(row)
    return rows


def write_artifacts(result: RunResult, out: str | Path, figures: bool = True) -> Path:
    """Write report.json, per-pair cloud CSVs and SVGs, heatmaps, and flagged-triad clouds."""
    from . import plotting

    out = Path(out)
    for sub in ("clouds", "plots", "triads"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(canonical_json(build_report(result)))
    names = result.dataset.feature_names
    for (a, b), score in sorted(result.scores.scores.items()):
        cloud = build_pair_clouds(result.trials, (a, b))
        stem = f"pair_{names[a]}_{names[b]}"
        write_pair_cloud_csv(cloud, out / "clouds" / f"{stem}.csv")
        if figures:
            (out / "plots" / f"{stem}.svg").write_text(plotting.render_pair_svg(cloud, score))
    if figures:
        (out / "plots" / "heatmap_l_score.svg").write_text(plotting.render_l_heatmap_svg(result.scores))
        for key, matrix in sorted(result.baselines.items()):
            if matrix.values.ndim != 2:
                continue
            vals = matrix.values
            if key == "mutual_information":
                svg = plotting.render_heatmap_svg(vals, names, "Mutual information (bits)", 0.0,
                                                  float(vals[0, 0]), cmap="Reds")
            elif key == "shapley_interaction":
                off = vals[~np.eye(len(names), dtype=bool)]
                lim = float(np.max(np.abs(off))) if off.size and np.max(np.abs(off)) > 0 else 1.0
                svg = plotting.render_heatmap_svg(vals, names, "Shapley interaction", -lim, lim)
            else:
                svg = plotting.render_heatmap_svg(vals, names, "Pearson correlation")
            (out / "plots" / f"heatmap_{key}.svg").write_text(svg)
    for t in result.triples:
        pts = export_triad_cloud(result.trials, t.triple)
        stem = "triple_" + "_".join(t.names)
        write_triad_csv(pts, t.names, out / "triads" / f"{stem}.csv")
        if figures:
            (out / "plots" / f"{stem}.svg").write_text(plotting.render_triad_svg(pts, t.names))
    return out / "report.json"
