"""Density, coverage and localization-error metrics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cellmap.core import Bounds, Position, RadioMap
from cellmap.errors import InsufficientDataError, InvalidBoundsError, InvalidInputError


@dataclass(frozen=True)
class DensityReport:
    before: float
    after: float
    increase_percent: float


@dataclass(frozen=True)
class ErrorStats:
    mean: float
    median: float
    p75: float
    p90: float
    max: float
    cdf: tuple[tuple[float, float], ...]
    count: int = 0


def density(count: int, bounds: Bounds) -> float:
    area = bounds.area
    if not area > 0:
        raise InvalidBoundsError("density needs bounds with positive area")
    return count / area


def anchor_density(radio_map: RadioMap) -> float:
    """Anchors per square meter of the map bounds."""
    return density(len(radio_map), radio_map.bounds)


def coverage_increase(before: float, after: float) -> float:
    if not before > 0:
        raise InvalidInputError(f"baseline density must be positive, got {before}")
    return (after - before) / before * 100.0


def density_report(before: float, after: float) -> DensityReport:
    return DensityReport(before, after, coverage_increase(before, after))


def localization_errors(pairs: Sequence[tuple[Position, Position]]) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2, 2)
    return np.hypot(arr[:, 0, 0] - arr[:, 1, 0], arr[:, 0, 1] - arr[:, 1, 1])


def stats_from_errors(errors: Sequence[float]) -> ErrorStats:
    e = np.sort(np.asarray(errors, dtype=float))
    if e.size == 0:
        raise InsufficientDataError("no localization errors to summarize")
    med, p75, p90 = np.percentile(e, [50, 75, 90], method="linear")
    # empirical CDF: one step per distinct error value
    values, counts = np.unique(e, return_counts=True)
    frac = np.cumsum(counts) / e.size
    frac[-1] = 1.0
    cdf = tuple((float(v), float(f)) for v, f in zip(values, frac))
    return ErrorStats(
        mean=float(e.mean()),
        median=float(med),
        p75=float(p75),
        p90=float(p90),
        max=float(e[-1]),
        cdf=cdf,
        count=int(e.size),
    )


def error_stats(estimates: Sequence[tuple[Position, Position]]) -> ErrorStats:
    """Summary of 2D errors over (estimated, true) position pairs."""
    if len(estimates) == 0:
        raise InsufficientDataError("no estimates to evaluate")
    return stats_from_errors(localization_errors(estimates))


def improvement(baseline: ErrorStats, enhanced: ErrorStats) -> float:
    """Relative reduction of the median error, in percent."""
    if not baseline.median > 0:
        raise InvalidInputError("baseline median error must be positive")
    return (baseline.median - enhanced.median) / baseline.median * 100.0


def mean_improvement(baseline: ErrorStats, enhanced: ErrorStats) -> float:
    if not baseline.mean > 0:
        raise InvalidInputError("baseline mean error must be positive")
    return (baseline.mean - enhanced.mean) / baseline.mean * 100.0
