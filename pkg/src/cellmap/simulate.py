"""Synthetic RF environment used as ground truth.

Log-distance path loss with a static shadowing field frozen per tower and per
1 m x 1 m cell, plus per-measurement Gaussian noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cellmap.core import MAX_TOWERS_PER_SCAN, Bounds, Fingerprint, Position, asu_from_dbm
from cellmap.densify import generate_grid
from cellmap.errors import InvalidInputError, InvalidSpecError, UnknownTowerError

REFERENCE_DISTANCE = 1.0
SHADOW_CELL = 1.0


@dataclass(frozen=True)
class EnvironmentSpec:
    bounds: Bounds = field(default_factory=lambda: Bounds.from_size(16.0, 16.0))
    tower_count: int = 10
    tx_power: float = -40.0
    path_loss_exponent: float = 3.0
    shadowing_sigma: float = 4.0
    noise_sigma: float = 2.0
    rng_seed: int = 0

    def validate(self) -> None:
        if not (self.bounds.width > 0 and self.bounds.height > 0):
            raise InvalidSpecError("environment bounds need positive area")
        if int(self.tower_count) != self.tower_count or self.tower_count < 1:
            raise InvalidSpecError("tower_count must be an integer >= 1")
        if not self.path_loss_exponent > 0:
            raise InvalidSpecError("path_loss_exponent must be positive")
        if not (self.shadowing_sigma >= 0 and self.noise_sigma >= 0):
            raise InvalidSpecError("sigmas must be non-negative")
        if not math.isfinite(self.tx_power):
            raise InvalidSpecError("tx_power must be finite")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise InvalidSpecError("rng_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class Environment:
    spec: EnvironmentSpec
    tower_ids: tuple[str, ...]
    tower_positions: np.ndarray
    shadow: np.ndarray  # (tower, cell row, cell col), dB

    @property
    def towers(self) -> list[tuple[str, Position]]:
        return [
            (t, Position(float(p[0]), float(p[1])))
            for t, p in zip(self.tower_ids, self.tower_positions)
        ]

    def cell_of(self, at: Position) -> tuple[int, int]:
        b = self.spec.bounds
        _, rows, cols = self.shadow.shape
        col = min(cols - 1, max(0, int(math.floor((at[0] - b.xmin) / SHADOW_CELL))))
        row = min(rows - 1, max(0, int(math.floor((at[1] - b.ymin) / SHADOW_CELL))))
        return row, col


def tower_name(i: int, count: int) -> str:
    # zero padding keeps lexicographic order equal to creation order
    return f"T{i + 1:0{len(str(count))}d}"


def make_environment(spec: EnvironmentSpec) -> Environment:
    spec.validate()
    b = spec.bounds
    rng = np.random.default_rng(int(spec.rng_seed))
    n = int(spec.tower_count)
    xy = np.column_stack([rng.uniform(b.xmin, b.xmax, n), rng.uniform(b.ymin, b.ymax, n)])
    cols = max(1, math.ceil(b.width / SHADOW_CELL))
    rows = max(1, math.ceil(b.height / SHADOW_CELL))
    if spec.shadowing_sigma > 0:
        shadow = rng.normal(0.0, spec.shadowing_sigma, size=(n, rows, cols))
    else:
        shadow = np.zeros((n, rows, cols))
    xy.flags.writeable = False
    shadow.flags.writeable = False
    return Environment(spec, tuple(tower_name(i, n) for i in range(n)), xy, shadow)


def true_rss_all(env: Environment, at: Position) -> np.ndarray:
    """Noise-free received power (dBm) from every tower, in tower order."""
    s = env.spec
    d = np.hypot(env.tower_positions[:, 0] - at[0], env.tower_positions[:, 1] - at[1])
    ratio = np.maximum(d, REFERENCE_DISTANCE) / REFERENCE_DISTANCE
    row, col = env.cell_of(at)
    return s.tx_power - 10.0 * s.path_loss_exponent * np.log10(ratio) + env.shadow[:, row, col]


def true_rss(env: Environment, at: Position, tower: str) -> float:
    try:
        i = env.tower_ids.index(tower)
    except ValueError:
        raise UnknownTowerError(f"tower {tower!r} not in environment") from None
    return float(true_rss_all(env, at)[i])


def measure_dbm(env: Environment, at: Position, rng: np.random.Generator) -> np.ndarray:
    if not env.spec.bounds.contains(at):
        raise InvalidInputError(f"position {tuple(at)} outside environment bounds")
    return true_rss_all(env, at) + rng.normal(0.0, env.spec.noise_sigma, len(env.tower_ids))


def sample_fingerprint(env: Environment, at: Position, rng: np.random.Generator) -> Fingerprint:
    """One noisy scan: the seven strongest towers, minus any reading at ASU 0."""
    dbm = measure_dbm(env, at, rng)
    order = np.argsort(-dbm, kind="stable")[:MAX_TOWERS_PER_SCAN]
    readings = {}
    for i in order:
        level = asu_from_dbm(float(dbm[i]))
        if level > 0:
            readings[env.tower_ids[i]] = level
    return Fingerprint(Position(float(at[0]), float(at[1])), dict(sorted(readings.items())))


def sample_seed_set(
    env: Environment, seed_density: float, rng: np.random.Generator
) -> list[Fingerprint]:
    """Survey a regular grid at ``seed_density`` over the whole environment."""
    return [sample_fingerprint(env, p, rng) for p in generate_grid(env.spec.bounds, seed_density)]


def sample_test_set(env: Environment, count: int, rng: np.random.Generator) -> list[Fingerprint]:
    """Scans at uniformly random positions, for online-phase evaluation."""
    b = env.spec.bounds
    xs = rng.uniform(b.xmin, b.xmax, count)
    ys = rng.uniform(b.ymin, b.ymax, count)
    return [sample_fingerprint(env, Position(float(x), float(y)), rng) for x, y in zip(xs, ys)]
