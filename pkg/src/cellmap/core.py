"""Domain types and RSS unit handling.

Signal levels travel through the pipeline as GSM-style ASU integers in
[0, 31]; the simulator works in dBm and converts through the affine map
``dBm = 2 * ASU - 113``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from cellmap.errors import InvalidBoundsError, InvalidInputError

ASU_MIN = 0
ASU_MAX = 31
NOT_HEARD = 0
MAX_TOWERS_PER_SCAN = 7

SEED = "seed"
SYNTHETIC = "synthetic"
PROVENANCES = (SEED, SYNTHETIC)


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def _require_finite(value: float, what: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidInputError(f"{what} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise InvalidInputError(f"{what} must be finite, got {value!r}")
    return value


def quantize_asu(raw: float) -> int:
    """Round half up, then clamp into [0, 31]."""
    raw = _require_finite(raw, "ASU value")
    return min(ASU_MAX, max(ASU_MIN, round_half_up(raw)))


def quantize_array(raw: np.ndarray) -> np.ndarray:
    """Vectorized :func:`quantize_asu` for continuous feature vectors."""
    raw = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise InvalidInputError("cannot quantize non-finite ASU values")
    return np.clip(np.floor(raw + 0.5), ASU_MIN, ASU_MAX).astype(np.int64)


def asu_from_dbm(power: float) -> int:
    power = _require_finite(power, "power (dBm)")
    return quantize_asu((power + 113.0) / 2.0)


def dbm_from_asu(level: int) -> float:
    if isinstance(level, bool) or int(level) != level or not ASU_MIN <= level <= ASU_MAX:
        raise InvalidInputError(f"ASU level must be an integer in [0, 31], got {level!r}")
    return 2.0 * int(level) - 113.0


class Position(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned rectangle in meters."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        vals = tuple(float(v) for v in (self.xmin, self.ymin, self.xmax, self.ymax))
        for name, v in zip(("xmin", "ymin", "xmax", "ymax"), vals):
            object.__setattr__(self, name, v)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidBoundsError(f"bounds must be finite: {vals}")
        if self.xmax < self.xmin or self.ymax < self.ymin:
            raise InvalidBoundsError(f"inverted bounds: {vals}")

    @classmethod
    def from_size(cls, width: float, height: float) -> Bounds:
        return cls(0.0, 0.0, float(width), float(height))

    @classmethod
    def enclosing(cls, positions: Sequence[Position]) -> Bounds:
        pts = np.asarray(positions, dtype=float).reshape(-1, 2)
        if len(pts) == 0:
            raise InvalidBoundsError("cannot bound an empty point set")
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return cls(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, p: Position, tol: float = 1e-9) -> bool:
        return (
            self.xmin - tol <= p[0] <= self.xmax + tol
            and self.ymin - tol <= p[1] <= self.ymax + tol
        )


def validate_tower_id(tower: str) -> str:
    if not isinstance(tower, str) or not tower:
        raise InvalidInputError(f"tower id must be a non-empty string, got {tower!r}")
    return tower


def validate_asu(level, context: str = "") -> int:
    if isinstance(level, bool) or not isinstance(level, (int, np.integer)):
        raise InvalidInputError(f"ASU must be an integer{context}, got {level!r}")
    if not ASU_MIN <= level <= ASU_MAX:
        raise InvalidInputError(f"ASU {level} outside [0, 31]{context}")
    return int(level)


@dataclass(frozen=True, eq=True)
class Fingerprint:
    """One surveyed position paired with one scan (tower id -> ASU).

    Scans hold at most seven readings, the GSM reporting limit.
    """

    position: Position
    readings: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        x = _require_finite(self.position[0], "x")
        y = _require_finite(self.position[1], "y")
        object.__setattr__(self, "position", Position(x, y))
        if len(self.readings) > MAX_TOWERS_PER_SCAN:
            raise InvalidInputError(
                f"scan at ({x}, {y}) has {len(self.readings)} towers; at most "
                f"{MAX_TOWERS_PER_SCAN} are reported per scan"
            )
        clean = {}
        for tower, level in self.readings.items():
            clean[validate_tower_id(tower)] = validate_asu(level, f" for tower {tower!r}")
        object.__setattr__(self, "readings", clean)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class RadioMapAnchor:
    position: Position
    vector: tuple[int, ...]
    provenance: str


@dataclass(frozen=True, eq=False)
class RadioMap:
    """Anchor database: positions, quantized vectors and provenance tags.

    Stored column-wise; ``anchors`` gives the row view.
    """

    universe: tuple[str, ...]
    positions: np.ndarray
    vectors: np.ndarray
    provenance: tuple[str, ...]
    bounds: Bounds

    def __post_init__(self):
        universe = tuple(self.universe)
        if list(universe) != sorted(set(universe)):
            raise InvalidInputError("radio map universe must be strictly sorted and unique")
        positions = np.array(self.positions, dtype=float).reshape(-1, 2)
        vectors = np.array(self.vectors, dtype=np.int64).reshape(len(positions), len(universe))
        provenance = tuple(self.provenance)
        if len(provenance) != len(positions):
            raise InvalidInputError("one provenance tag is required per anchor")
        bad = set(provenance) - set(PROVENANCES)
        if bad:
            raise InvalidInputError(f"unknown provenance values: {sorted(bad)}")
        if vectors.size and (vectors.min() < ASU_MIN or vectors.max() > ASU_MAX):
            raise InvalidInputError("anchor vectors must lie in [0, 31]")
        for p in positions:
            if not self.bounds.contains(p):
                raise InvalidInputError(f"anchor {tuple(p)} outside map bounds")
        positions.flags.writeable = False
        vectors.flags.writeable = False
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "provenance", provenance)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def anchors(self) -> list[RadioMapAnchor]:
        return list(self._iter_anchors())

    def _iter_anchors(self) -> Iterator[RadioMapAnchor]:
        for p, v, tag in zip(self.positions, self.vectors, self.provenance):
            yield RadioMapAnchor(Position(float(p[0]), float(p[1])), tuple(int(a) for a in v), tag)

    @property
    def seed_mask(self) -> np.ndarray:
        return np.array([t == SEED for t in self.provenance], dtype=bool)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RadioMap):
            return NotImplemented
        return (
            self.universe == other.universe
            and self.bounds == other.bounds
            and self.provenance == other.provenance
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.vectors, other.vectors)
        )

    __hash__ = None  # type: ignore[assignment]
