"""Cellular radio-map densification and fingerprint localization."""

from cellmap.core import (
    ASU_MAX,
    ASU_MIN,
    MAX_TOWERS_PER_SCAN,
    NOT_HEARD,
    Bounds,
    Fingerprint,
    Position,
    RadioMap,
    RadioMapAnchor,
    asu_from_dbm,
    dbm_from_asu,
    quantize_asu,
)
from cellmap.errors import CellmapError

__all__ = [
    "ASU_MAX",
    "ASU_MIN",
    "MAX_TOWERS_PER_SCAN",
    "NOT_HEARD",
    "Bounds",
    "CellmapError",
    "Fingerprint",
    "Position",
    "RadioMap",
    "RadioMapAnchor",
    "asu_from_dbm",
    "dbm_from_asu",
    "quantize_asu",
]

__version__ = "0.1.0"
