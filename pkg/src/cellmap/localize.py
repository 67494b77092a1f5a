"""Online-phase engines: signal-space k-NN and Gaussian maximum likelihood."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from cellmap.core import Position, RadioMap
from cellmap.errors import EmptyMapError, InvalidInputError
from cellmap.preprocess import TowerUniverse, vectorize

KNN = "knn"
PROBABILISTIC = "probabilistic"
UNIFORM = "uniform"
INVERSE_SIGNAL_DISTANCE = "inverse_signal_distance"

SIGNAL_EPS = 1e-9
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LocalizeConfig:
    """Engine hyperparameters.

    ``smoothing_radius=None`` means "use the synthetic grid spacing of the map
    being fitted" (zero for a map without synthetic anchors).
    """

    k_match: int = 3
    weighting: str = UNIFORM
    variance_floor: float = 1.0
    smoothing_radius: float | None = None

    def __post_init__(self):
        if int(self.k_match) != self.k_match or self.k_match < 1:
            raise InvalidInputError(f"k_match must be a positive integer, got {self.k_match}")
        if self.weighting not in (UNIFORM, INVERSE_SIGNAL_DISTANCE):
            raise InvalidInputError(f"unknown weighting {self.weighting!r}")
        if not self.variance_floor > 0:
            raise InvalidInputError("variance_floor must be positive")
        if self.smoothing_radius is not None and not self.smoothing_radius >= 0:
            raise InvalidInputError("smoothing_radius must be >= 0")


@dataclass(frozen=True)
class LocalizationEstimate:
    position: Position
    score: float
    engine: str


@dataclass(frozen=True, eq=False)
class ProbModel:
    positions: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_variances: np.ndarray
    universe: TowerUniverse

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def locations(self) -> list[tuple[Position, tuple[float, ...], tuple[float, ...]]]:
        return [
            (Position(float(p[0]), float(p[1])), tuple(map(float, m)), tuple(map(float, v)))
            for p, m, v in zip(self.positions, self.means, self.variances)
        ]


def _query_matrix(universe: Sequence[str], scans: Sequence[Mapping[str, int]]) -> np.ndarray:
    q = np.empty((len(scans), len(universe)), dtype=float)
    for i, readings in enumerate(scans):
        q[i] = vectorize(readings, universe)
    return q


def knn_locate_many(
    radio_map: RadioMap, scans: Sequence[Mapping[str, int]], cfg: LocalizeConfig
) -> list[LocalizationEstimate]:
    if len(radio_map) == 0:
        raise EmptyMapError("radio map has no anchors")
    queries = _query_matrix(radio_map.universe, scans)
    anchors = radio_map.vectors.astype(float)
    k = min(cfg.k_match, len(anchors))
    out = []
    for q in queries:
        dist = np.sqrt(((anchors - q) ** 2).sum(axis=1))
        idx = np.argsort(dist, kind="stable")[:k]
        dk = dist[idx]
        pts = radio_map.positions[idx]
        if cfg.weighting == UNIFORM:
            est = pts.mean(axis=0)
        elif dk[0] <= SIGNAL_EPS:
            est = pts[0]
        else:
            w = 1.0 / dk
            est = (w[:, None] * pts).sum(axis=0) / w.sum()
        out.append(LocalizationEstimate(Position(float(est[0]), float(est[1])), float(dk.mean()), KNN))
    return out


def knn_locate(radio_map: RadioMap, readings: Mapping[str, int], cfg: LocalizeConfig) -> LocalizationEstimate:
    """Weighted centroid of the k anchors closest in ASU space.

    Ties in signal distance go to the lower anchor index; the score is the
    mean signal distance of the chosen anchors.
    """
    return knn_locate_many(radio_map, [readings], cfg)[0]


def synthetic_spacing(radio_map: RadioMap) -> float:
    """Median nearest-neighbour distance among synthetic anchors (0 if none)."""
    pts = radio_map.positions[~radio_map.seed_mask]
    if len(pts) < 2:
        return 0.0
    d, _ = cKDTree(pts).query(pts, k=2)
    return float(np.median(d[:, 1]))


def fit_probabilistic(radio_map: RadioMap, cfg: LocalizeConfig) -> ProbModel:
    """Per-location Gaussian fit over pooled anchors.

    Every anchor is a location; it pools all anchors within
    ``smoothing_radius`` of itself (radius 0 pools only co-located anchors).
    Variances are population variances clamped up to ``variance_floor``.
    """
    if len(radio_map) == 0:
        raise EmptyMapError("radio map has no anchors")
    radius = cfg.smoothing_radius
    if radius is None:
        radius = synthetic_spacing(radio_map)
    # grid neighbours sit at exactly one spacing; keep them despite rounding
    radius = radius * (1 + 1e-9) + 1e-12

    pos = radio_map.positions
    vec = radio_map.vectors.astype(float)
    groups = cKDTree(pos).query_ball_point(pos, r=radius)
    means = np.empty_like(vec)
    variances = np.empty_like(vec)
    for i, members in enumerate(groups):
        block = vec[sorted(members)]
        means[i] = block.mean(axis=0)
        variances[i] = block.var(axis=0)
    variances = np.maximum(variances, cfg.variance_floor)
    log_var = np.array([[math.log(v) for v in row] for row in variances]).reshape(variances.shape)
    return ProbModel(pos.copy(), means, variances, log_var, radio_map.universe)


def log_likelihoods(model: ProbModel, readings: Mapping[str, int]) -> np.ndarray:
    """Gaussian log-likelihood of a scan at every model location.

    Towers are accumulated left to right in universe order so the sum is
    reproducible term by term.
    """
    v = vectorize(readings, model.universe).astype(float)
    ll = np.zeros(len(model))
    for t in range(len(model.universe)):
        dev = v[t] - model.means[:, t]
        ll = ll + -0.5 * (_LOG_2PI + model.log_variances[:, t] + dev * dev / model.variances[:, t])
    return ll


def ml_locate(model: ProbModel, readings: Mapping[str, int]) -> LocalizationEstimate:
    """Location maximizing the scan likelihood; ties go to the lowest index."""
    if len(model) == 0:
        raise EmptyMapError("probabilistic model has no locations")
    ll = log_likelihoods(model, readings)
    best = int(np.argmax(ll))
    p = model.positions[best]
    return LocalizationEstimate(Position(float(p[0]), float(p[1])), float(ll[best]), PROBABILISTIC)


def ml_locate_many(model: ProbModel, scans: Sequence[Mapping[str, int]]) -> list[LocalizationEstimate]:
    return [ml_locate(model, s) for s in scans]


def locate_all(
    radio_map: RadioMap, scans: Sequence[Mapping[str, int]], engine: str, cfg: LocalizeConfig
) -> list[LocalizationEstimate]:
    if engine == KNN:
        return knn_locate_many(radio_map, scans, cfg)
    if engine == PROBABILISTIC:
        return ml_locate_many(fit_probabilistic(radio_map, cfg), scans)
    raise InvalidInputError(f"unknown engine {engine!r}")
