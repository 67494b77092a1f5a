"""Spatial generator: KNN regression from seed fingerprints to a dense grid.

The regressor is a lazy learner. It keeps the quantized seed vectors and
predicts each tower's level at a query position as a (weighted) mean over the
k spatially nearest seeds, sharing one neighbour set across all towers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from cellmap.core import (
    SEED,
    SYNTHETIC,
    Bounds,
    Fingerprint,
    Position,
    RadioMap,
    quantize_array,
    round_half_up,
)
from cellmap.errors import (
    InsufficientDataError,
    InsufficientNeighborsError,
    InvalidBoundsError,
    InvalidInputError,
)
from cellmap.preprocess import (
    SplitConfig,
    TowerUniverse,
    build_tower_universe,
    split_seed_points,
    vectorize_all,
)

UNIFORM = "uniform"
INVERSE_DISTANCE = "inverse_distance"

# rows of query points handled per distance-matrix block
_BLOCK = 2048


@dataclass(frozen=True)
class DensifyConfig:
    k: int = 3
    weighting: str = INVERSE_DISTANCE
    epsilon: float = 1e-9
    target_density: float = 11.49
    k_search_range: tuple[int, int] = (1, 10)

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidInputError(f"k must be a positive integer, got {self.k}")
        if self.weighting not in (UNIFORM, INVERSE_DISTANCE):
            raise InvalidInputError(f"unknown weighting {self.weighting!r}")
        if not self.epsilon > 0:
            raise InvalidInputError("epsilon must be positive")
        if not self.target_density > 0:
            raise InvalidInputError("target_density must be positive")
        lo, hi = self.k_search_range
        if lo < 1 or hi < lo:
            raise InvalidInputError(f"bad k_search_range {self.k_search_range}")
        object.__setattr__(self, "k_search_range", (int(lo), int(hi)))


@dataclass(frozen=True, eq=False)
class Interpolator:
    positions: np.ndarray
    vectors: np.ndarray
    universe: TowerUniverse
    config: DensifyConfig

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class ValidationReport:
    rmse_overall: float
    rmse_per_tower: tuple[float, ...]
    holdout_count: int
    k: int = 0


def fit_interpolator(
    train: Sequence[Fingerprint], universe: TowerUniverse, cfg: DensifyConfig
) -> Interpolator:
    if len(train) < cfg.k:
        raise InsufficientNeighborsError(
            f"k={cfg.k} neighbours requested but only {len(train)} training fingerprints"
        )
    positions = np.array([fp.position for fp in train], dtype=float).reshape(-1, 2)
    vectors = vectorize_all(train, universe)
    positions.flags.writeable = False
    vectors.flags.writeable = False
    return Interpolator(positions, vectors, tuple(universe), cfg)


def _predict_block(model: Interpolator, queries: np.ndarray) -> np.ndarray:
    cfg = model.config
    k = cfg.k
    diff = queries[:, None, :] - model.positions[None, :, :]
    dist = np.sqrt(diff[..., 0] ** 2 + diff[..., 1] ** 2)
    # stable sort: equal distances resolve to the lower training index
    idx = np.argsort(dist, axis=1, kind="stable")[:, :k]
    dk = np.take_along_axis(dist, idx, axis=1)
    vk = model.vectors[idx].astype(float)  # (m, k, n)

    if cfg.weighting == UNIFORM:
        pred = vk.sum(axis=1) / k
    else:
        w = 1.0 / np.maximum(dk, cfg.epsilon)
        w = w / w.sum(axis=1, keepdims=True)
        pred = (w[:, :, None] * vk).sum(axis=1)
        hit = dk <= cfg.epsilon
        rows = np.flatnonzero(hit.any(axis=1))
        if len(rows):
            first = hit[rows].argmax(axis=1)
            pred[rows] = vk[rows, first]
    # float rounding must not leave the neighbours' convex hull
    return np.clip(pred, vk.min(axis=1), vk.max(axis=1))


def predict_many(model: Interpolator, at: Sequence[Position] | np.ndarray) -> np.ndarray:
    """Continuous predictions, one row per query position."""
    queries = np.asarray(at, dtype=float).reshape(-1, 2)
    n = len(model.universe)
    if len(queries) == 0:
        return np.empty((0, n))
    return np.concatenate(
        [_predict_block(model, queries[i : i + _BLOCK]) for i in range(0, len(queries), _BLOCK)]
    )


def predict_rss(model: Interpolator, at: Position) -> np.ndarray:
    return predict_many(model, [at])[0]


def validate_interpolator(model: Interpolator, holdout: Sequence[Fingerprint]) -> ValidationReport:
    """RMSE in ASU between quantized predictions and the holdout scans."""
    if not holdout:
        raise InsufficientDataError("holdout set is empty")
    truth = vectorize_all(holdout, model.universe)
    pred = quantize_array(predict_many(model, [fp.position for fp in holdout]))
    sq = (pred - truth).astype(float) ** 2
    return ValidationReport(
        rmse_overall=float(math.sqrt(sq.mean())),
        rmse_per_tower=tuple(float(v) for v in np.sqrt(sq.mean(axis=0))),
        holdout_count=len(holdout),
        k=model.config.k,
    )


def select_k(
    train: Sequence[Fingerprint],
    holdout: Sequence[Fingerprint],
    universe: TowerUniverse,
    cfg: DensifyConfig,
) -> tuple[int, list[ValidationReport]]:
    """Grid-search k over ``cfg.k_search_range``; ties go to the smaller k.

    Values of k larger than the training set are skipped.
    """
    lo, hi = cfg.k_search_range
    reports = []
    for k in range(lo, hi + 1):
        if k > len(train):
            break
        model = fit_interpolator(train, universe, _with_k(cfg, k))
        reports.append(validate_interpolator(model, holdout))
    if not reports:
        raise InsufficientDataError(
            f"no feasible k in {cfg.k_search_range} for {len(train)} training points"
        )
    best = min(reports, key=lambda r: (r.rmse_overall, r.k))
    return best.k, reports


def _with_k(cfg: DensifyConfig, k: int) -> DensifyConfig:
    return DensifyConfig(k, cfg.weighting, cfg.epsilon, cfg.target_density, cfg.k_search_range)


def grid_shape(bounds: Bounds, target_density: float) -> tuple[int, int]:
    if not (bounds.width > 0 and bounds.height > 0):
        raise InvalidBoundsError(f"grid needs positive area, got {bounds}")
    if not target_density > 0:
        raise InvalidInputError("target_density must be positive")
    step = math.sqrt(target_density)
    nx = max(2, round_half_up(bounds.width * step))
    ny = max(2, round_half_up(bounds.height * step))
    return nx, ny


def generate_grid(bounds: Bounds, target_density: float) -> list[Position]:
    """Cell-centred regular grid, row by row from ``ymin``."""
    nx, ny = grid_shape(bounds, target_density)
    xs = bounds.xmin + (np.arange(nx) + 0.5) * (bounds.width / nx)
    ys = bounds.ymin + (np.arange(ny) + 0.5) * (bounds.height / ny)
    return [Position(float(x), float(y)) for y in ys for x in xs]


@dataclass
class DensifyResult:
    radio_map: RadioMap
    report: ValidationReport
    best_k: int
    reports_per_k: list[ValidationReport] = field(default_factory=list)

    def __iter__(self):
        # unpacks as (radio_map, report, best_k)
        return iter((self.radio_map, self.report, self.best_k))


def densify_radio_map(
    seeds: Sequence[Fingerprint],
    cfg: DensifyConfig,
    split: SplitConfig,
    bounds: Bounds | None = None,
) -> DensifyResult:
    """Split, select k, refit on every seed and synthesize the grid anchors.

    ``bounds`` defaults to the tight bounding box of the seed positions. A
    survey area may be passed instead; it must contain every seed. The
    configured ``cfg.k`` is the smallest neighbourhood the survey must support.
    """
    if len(seeds) < cfg.k:
        raise InsufficientNeighborsError(
            f"k={cfg.k} neighbours requested but only {len(seeds)} seed fingerprints"
        )
    universe = build_tower_universe(seeds)
    train, holdout = split_seed_points(seeds, split)
    best_k, reports = select_k(train, holdout, universe, cfg)
    report = next(r for r in reports if r.k == best_k)

    seed_pos = [fp.position for fp in seeds]
    if bounds is None:
        bounds = Bounds.enclosing(seed_pos)
    elif not all(bounds.contains(p) for p in seed_pos):
        raise InvalidBoundsError("survey bounds must contain every seed position")

    model = fit_interpolator(seeds, universe, _with_k(cfg, best_k))
    grid = generate_grid(bounds, cfg.target_density)
    synth = quantize_array(predict_many(model, grid))

    radio_map = RadioMap(
        universe=universe,
        positions=np.vstack([model.positions, np.asarray(grid, dtype=float)]),
        vectors=np.vstack([model.vectors, synth]),
        provenance=(SEED,) * len(seeds) + (SYNTHETIC,) * len(grid),
        bounds=bounds,
    )
    return DensifyResult(radio_map, report, best_k, reports)


def seed_radio_map(seeds: Sequence[Fingerprint], bounds: Bounds | None = None) -> RadioMap:
    """Radio map of the surveyed seeds only (the sparse baseline)."""
    universe = build_tower_universe(seeds)
    positions = np.array([fp.position for fp in seeds], dtype=float).reshape(-1, 2)
    if bounds is None:
        bounds = Bounds.enclosing(positions)
    return RadioMap(
        universe=universe,
        positions=positions,
        vectors=vectorize_all(seeds, universe),
        provenance=(SEED,) * len(seeds),
        bounds=bounds,
    )
