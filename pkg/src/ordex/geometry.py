"""Shape of order-conditioned contribution clouds.

Each arm of a pair cloud is summarised by a 2-D PCA: how elongated it is
(skinniness, 0.5 isotropic to 1 collinear) and which way it points
(horizontalness, +1 along x to -1 along y).  The L-score combines both arms:
+1 when the arms lie on perpendicular axes in the redundant orientation
(each feature only helps when added first), -1 for the mirrored synergistic
orientation, near 0 when addition order does not matter.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import ArgumentError, InsufficientData
from .ordering import PairCloud, TrialSet, build_pair_clouds

MIN_POINTS = 3
VARIANCE_FLOOR = 1e-12
ISOTROPY_TOL = 1e-12
DEFAULT_TAU = 0.4


class PCA2(NamedTuple):
    lambda1: float
    lambda2: float
    theta: float  # principal axis angle in [0, pi)
    degenerate: bool


@dataclass(frozen=True)
class CloudGeometry:
    lambda1: float
    lambda2: float
    theta: float
    skinny: float
    horiz: float
    n_points: int
    degenerate: bool

    def to_dict(self) -> dict:
        return {"lambda1": self.lambda1, "lambda2": self.lambda2, "theta": self.theta,
                "skinny": self.skinny, "horiz": self.horiz, "n_points": self.n_points,
                "degenerate": self.degenerate}


@dataclass(frozen=True)
class PairScore:
    pair: tuple[int, int]
    names: tuple[str, str]
    l_score: float
    dominance: float
    red_geom: CloudGeometry
    blue_geom: CloudGeometry
    mean_delta_a: float
    mean_delta_b: float

    def to_dict(self) -> dict:
        return {"pair": list(self.pair), "names": list(self.names), "l_score": self.l_score,
                "dominance": self.dominance, "red": self.red_geom.to_dict(),
                "blue": self.blue_geom.to_dict(), "mean_delta_a": self.mean_delta_a,
                "mean_delta_b": self.mean_delta_b}


def _points(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.size == 0:
        return p.reshape(0, 2)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ArgumentError(f"expected an (n, 2) array of points, got shape {p.shape}")
    return p


def cloud_pca(points) -> PCA2:
    """Closed-form eigen-decomposition of the centred 2x2 covariance."""
    p = _points(points)
    if len(p) < MIN_POINTS:
        raise InsufficientData(f"PCA needs at least {MIN_POINTS} points, got {len(p)}")
    c = p - p.mean(axis=0)
    m = len(p) - 1
    cxx = float(c[:, 0] @ c[:, 0]) / m
    cyy = float(c[:, 1] @ c[:, 1]) / m
    cxy = float(c[:, 0] @ c[:, 1]) / m
    total = cxx + cyy
    disc = math.hypot(cxx - cyy, 2.0 * cxy)
    lam1 = (total + disc) / 2.0
    lam2 = max((total - disc) / 2.0, 0.0)
    if total < VARIANCE_FLOOR or disc <= ISOTROPY_TOL * total:
        return PCA2(lam1, lam2, 0.0, True)
    theta = 0.5 * math.atan2(2.0 * cxy, cxx - cyy)
    if theta < 0.0:
        theta += math.pi
    if theta >= math.pi:
        theta -= math.pi
    return PCA2(lam1, lam2, theta, False)


def skinniness(lambda1: float, lambda2: float) -> float:
    """lambda1 / (lambda1 + lambda2); equals the ratio form r/(1+r) with r = lambda1/lambda2."""
    if lambda1 < lambda2 or lambda2 < 0:
        raise ArgumentError(f"need lambda1 >= lambda2 >= 0, got {lambda1}, {lambda2}")
    total = lambda1 + lambda2
    if total <= 0:
        return 0.5
    return lambda1 / total


def horizontalness(theta: float) -> float:
    return math.cos(2.0 * theta)


def cloud_geometry(points) -> CloudGeometry:
    p = _points(points)
    lam1, lam2, theta, degenerate = cloud_pca(p)
    if degenerate:
        return CloudGeometry(lam1, lam2, theta, 0.5, 0.0, len(p), True)
    return CloudGeometry(lam1, lam2, theta, skinniness(lam1, lam2), horizontalness(theta),
                         len(p), False)


def l_score(red: CloudGeometry, blue: CloudGeometry) -> float:
    for arm, g in (("red", red), ("blue", blue)):
        if g.n_points < MIN_POINTS:
            raise InsufficientData(f"{arm} arm has {g.n_points} points; {MIN_POINTS} required")
    return red.skinny * blue.skinny * (red.horiz - blue.horiz) / 2.0


def dominance_from_means(mean_a: float, mean_b: float) -> float:
    """(mean_a - mean_b) / (|mean_a| + |mean_b|); positive means the first feature dominates."""
    return (mean_a - mean_b) / max(abs(mean_a) + abs(mean_b), 1e-12)


def _arm_means(cloud: PairCloud) -> tuple[float, float]:
    red, blue = _points(cloud.red), _points(cloud.blue)
    n = len(red) + len(blue)
    if n == 0:
        raise InsufficientData("dominance of an empty cloud")
    # per-arm sums then one addition keeps the (a, b) <-> (b, a) swap exact
    total = red.sum(axis=0) + blue.sum(axis=0)
    return float(total[0]) / n, float(total[1]) / n


def dominance(cloud: PairCloud) -> float:
    return dominance_from_means(*_arm_means(cloud))


def pair_score(cloud: PairCloud) -> PairScore:
    for arm, pts in (("red", cloud.red), ("blue", cloud.blue)):
        if len(pts) < MIN_POINTS:
            a, b = cloud.names if all(cloud.names) else cloud.pair
            raise InsufficientData(f"{arm} arm of pair ({a}, {b}) has {len(pts)} points; "
                                   f"{MIN_POINTS} required")
    red, blue = cloud_geometry(cloud.red), cloud_geometry(cloud.blue)
    mean_a, mean_b = _arm_means(cloud)
    return PairScore(tuple(cloud.pair), tuple(cloud.names), l_score(red, blue),
                     dominance_from_means(mean_a, mean_b), red, blue, mean_a, mean_b)


@dataclass
class ScoreMatrix:
    feature_names: list[str]
    scores: dict[tuple[int, int], PairScore]  # keyed by (a, b) with a < b

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def __len__(self) -> int:
        return len(self.scores)

    def __getitem__(self, pair: tuple[int, int]) -> PairScore:
        a, b = pair
        return self.scores[(min(a, b), max(a, b))]

    def l_score(self, a: int, b: int) -> float:
        return self[a, b].l_score

    def dominance(self, a: int, b: int) -> float:
        """Positive when ``a`` dominates ``b``; antisymmetric."""
        s = self[a, b]
        return s.dominance if a < b else -s.dominance

    def l_matrix(self) -> np.ndarray:
        """Symmetric matrix of L-scores with NaN on the diagonal."""
        out = np.full((self.n_features, self.n_features), np.nan)
        for (a, b), s in self.scores.items():
            out[a, b] = out[b, a] = s.l_score
        return out

    def dominance_matrix(self) -> np.ndarray:
        out = np.full((self.n_features, self.n_features), np.nan)
        for (a, b), s in self.scores.items():
            out[a, b], out[b, a] = s.dominance, -s.dominance
        return out

    def ranked(self, key=lambda s: s.l_score, reverse: bool = True) -> list[PairScore]:
        return sorted(self.scores.values(), key=lambda s: (key(s), s.pair), reverse=reverse)


def score_matrix(trials: TrialSet) -> ScoreMatrix:
    scores = {}
    for a, b in itertools.combinations(range(trials.n_features), 2):
        scores[(a, b)] = pair_score(build_pair_clouds(trials, (a, b)))
    return ScoreMatrix(list(trials.feature_names), scores)


@dataclass(frozen=True)
class FlaggedTriple:
    triple: tuple[int, int, int]
    names: tuple[str, str, str]
    kind: str  # "synergy" or "redundancy"
    l_scores: tuple[float, float, float]  # (ab, ac, bc)

    def to_dict(self) -> dict:
        return {"triple": list(self.triple), "names": list(self.names), "type": self.kind,
                "l_scores": list(self.l_scores)}


def detect_higher_order(matrix: ScoreMatrix, tau: float = DEFAULT_TAU) -> list[FlaggedTriple]:
    """Triples whose three pairwise L-scores all sit beyond ``tau`` on the same side."""
    if not 0 < tau <= 1:
        raise ArgumentError(f"tau must lie in (0, 1], got {tau}")
    out = []
    for a, b, c in itertools.combinations(range(matrix.n_features), 3):
        ls = (matrix.l_score(a, b), matrix.l_score(a, c), matrix.l_score(b, c))
        kind: Optional[str] = None
        if all(v <= -tau for v in ls):
            kind = "synergy"
        elif all(v >= tau for v in ls):
            kind = "redundancy"
        if kind:
            names = tuple(matrix.feature_names[i] for i in (a, b, c))
            out.append(FlaggedTriple((a, b, c), names, kind, ls))
    return out
