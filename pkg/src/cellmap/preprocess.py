"""Tower universe, scan vectorization and the seed-point split."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from cellmap.core import NOT_HEARD, Fingerprint, round_half_up
from cellmap.errors import (
    EmptyUniverseError,
    InsufficientDataError,
    InvalidInputError,
    UnknownTowerError,
)

TowerUniverse = tuple[str, ...]


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.7
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidInputError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise InvalidInputError("rng_seed must be an unsigned 64-bit integer")


def build_tower_universe(fingerprints: Iterable[Fingerprint]) -> TowerUniverse:
    """Sorted union of every tower heard in any scan."""
    towers = set()
    for fp in fingerprints:
        towers.update(fp.readings)
    if not towers:
        raise EmptyUniverseError("no towers heard in any scan")
    return tuple(sorted(towers))


def vectorize(readings: Mapping[str, int], universe: Sequence[str]) -> np.ndarray:
    """Place a scan's readings on the universe axis; absent towers get NOT_HEARD."""
    index = {t: i for i, t in enumerate(universe)}
    vec = np.full(len(universe), NOT_HEARD, dtype=np.int64)
    for tower, level in readings.items():
        try:
            vec[index[tower]] = level
        except KeyError:
            raise UnknownTowerError(f"tower {tower!r} is not in the universe") from None
    return vec


def vectorize_all(fingerprints: Sequence[Fingerprint], universe: Sequence[str]) -> np.ndarray:
    out = np.full((len(fingerprints), len(universe)), NOT_HEARD, dtype=np.int64)
    for i, fp in enumerate(fingerprints):
        out[i] = vectorize(fp.readings, universe)
    return out


def restrict_scan(readings: Mapping[str, int], universe: Sequence[str]) -> dict[str, int]:
    """Drop readings from towers the radio map has never heard."""
    known = set(universe)
    return {t: a for t, a in readings.items() if t in known}


def split_seed_points(
    fingerprints: Sequence[Fingerprint], cfg: SplitConfig
) -> tuple[list[Fingerprint], list[Fingerprint]]:
    """Random whole-point partition into (train, holdout).

    Both sides keep the input order. The train size is
    ``round(train_fraction * N)`` bounded so each side has at least one point.
    """
    n = len(fingerprints)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 fingerprints to split, got {n}")
    n_train = min(n - 1, max(1, round_half_up(cfg.train_fraction * n)))
    perm = np.random.default_rng(int(cfg.rng_seed)).permutation(n)
    train_idx = np.sort(perm[:n_train])
    hold_idx = np.sort(perm[n_train:])
    return [fingerprints[i] for i in train_idx], [fingerprints[i] for i in hold_idx]
