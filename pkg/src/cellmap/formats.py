"""JSON document formats for fingerprints, radio maps, estimates and reports.

Every document is a single UTF-8 JSON object carrying ``schema_version`` and
``kind``. List records are written one per line so files diff cleanly. See
FORMATS.md for the field-by-field grammar.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from cellmap.core import (
    ASU_MAX,
    ASU_MIN,
    MAX_TOWERS_PER_SCAN,
    PROVENANCES,
    Bounds,
    Fingerprint,
    Position,
    RadioMap,
)
from cellmap.errors import CellmapError, FormatError

SCHEMA_VERSION = 1

FINGERPRINTS = "fingerprints"
RADIO_MAP = "radio_map"
ESTIMATES = "estimates"
REPORT = "report"


def _dumps(value: Any) -> str:
    return json.dumps(value, allow_nan=False, ensure_ascii=False, separators=(", ", ": "))


def emit_document(header: Mapping[str, Any], records_key: str | None = None, records: Sequence[Any] = ()) -> bytes:
    lines = ["{"]
    items = list(header.items())
    if records_key is not None:
        items.append((records_key, None))
    for i, (key, value) in enumerate(items):
        comma = "," if i < len(items) - 1 else ""
        if key == records_key:
            if not records:
                lines.append(f"  {_dumps(key)}: []{comma}")
                continue
            lines.append(f"  {_dumps(key)}: [")
            for j, rec in enumerate(records):
                lines.append("    " + _dumps(rec) + ("," if j < len(records) - 1 else ""))
            lines.append(f"  ]{comma}")
        else:
            lines.append(f"  {_dumps(key)}: {_dumps(value)}{comma}")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def load_document(data: bytes | str, kind: str, source: str = "<input>") -> dict:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"{source}: not valid UTF-8 ({e})") from None
    try:
        doc = json.loads(data, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise FormatError(f"{source}: line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise FormatError(f"{source}: top level must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FormatError(f"{source}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    if doc.get("kind") != kind:
        raise FormatError(f"{source}: expected kind {kind!r}, got {doc.get('kind')!r}")
    return doc


def _reject_constant(name: str):
    raise FormatError(f"non-finite number {name} is not allowed")


def _field(record: Mapping, key: str, where: str):
    if not isinstance(record, Mapping):
        raise FormatError(f"{where}: expected an object")
    if key not in record:
        raise FormatError(f"{where}: missing field {key!r}")
    return record[key]


def _real(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise FormatError(f"{where}: expected a finite number, got {value!r}")
    return float(value)


def _asu(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{where}: ASU must be an integer, got {value!r}")
    if not ASU_MIN <= value <= ASU_MAX:
        raise FormatError(f"{where}: ASU {value} outside [{ASU_MIN}, {ASU_MAX}]")
    return value


# -- fingerprints ----------------------------------------------------------


def emit_fingerprints(fingerprints: Sequence[Fingerprint]) -> bytes:
    records = [
        {"x_m": fp.position.x, "y_m": fp.position.y, "readings": dict(sorted(fp.readings.items()))}
        for fp in fingerprints
    ]
    header = {"schema_version": SCHEMA_VERSION, "kind": FINGERPRINTS}
    return emit_document(header, "fingerprints", records)


def parse_fingerprints(data: bytes | str, source: str = "<fingerprints>") -> list[Fingerprint]:
    doc = load_document(data, FINGERPRINTS, source)
    records = _field(doc, "fingerprints", source)
    if not isinstance(records, list):
        raise FormatError(f"{source}: 'fingerprints' must be a list")
    out = []
    for i, rec in enumerate(records):
        where = f"{source}: fingerprints[{i}]"
        x = _real(_field(rec, "x_m", where), f"{where}.x_m")
        y = _real(_field(rec, "y_m", where), f"{where}.y_m")
        readings = _field(rec, "readings", where)
        if not isinstance(readings, dict):
            raise FormatError(f"{where}.readings: expected an object")
        if len(readings) > MAX_TOWERS_PER_SCAN:
            raise FormatError(f"{where}.readings: {len(readings)} towers exceeds {MAX_TOWERS_PER_SCAN}")
        clean = {}
        for tower, level in readings.items():
            if not tower:
                raise FormatError(f"{where}.readings: empty tower id")
            clean[tower] = _asu(level, f"{where}.readings[{tower!r}]")
        out.append(Fingerprint(Position(x, y), clean))
    return out


# -- radio maps ------------------------------------------------------------


def emit_radio_map(radio_map: RadioMap) -> bytes:
    b = radio_map.bounds
    header = {
        "schema_version": SCHEMA_VERSION,
        "kind": RADIO_MAP,
        "universe": list(radio_map.universe),
        "bounds": {"xmin": b.xmin, "ymin": b.ymin, "xmax": b.xmax, "ymax": b.ymax},
    }
    records = [
        {
            "x_m": float(p[0]),
            "y_m": float(p[1]),
            "vector": [int(a) for a in v],
            "provenance": tag,
        }
        for p, v, tag in zip(radio_map.positions, radio_map.vectors, radio_map.provenance)
    ]
    return emit_document(header, "anchors", records)


def parse_radio_map(data: bytes | str, source: str = "<radio map>") -> RadioMap:
    doc = load_document(data, RADIO_MAP, source)
    universe = _field(doc, "universe", source)
    if not isinstance(universe, list) or not all(isinstance(t, str) and t for t in universe):
        raise FormatError(f"{source}: universe must be a list of non-empty strings")
    if universe != sorted(set(universe)):
        raise FormatError(f"{source}: universe must be sorted without duplicates")
    braw = _field(doc, "bounds", source)
    bounds_vals = [_real(_field(braw, k, f"{source}: bounds"), f"{source}: bounds.{k}") for k in ("xmin", "ymin", "xmax", "ymax")]
    try:
        bounds = Bounds(*bounds_vals)
    except CellmapError as e:
        raise FormatError(f"{source}: bounds: {e}") from None
    anchors = _field(doc, "anchors", source)
    if not isinstance(anchors, list):
        raise FormatError(f"{source}: 'anchors' must be a list")
    n = len(universe)
    positions = np.empty((len(anchors), 2))
    vectors = np.empty((len(anchors), n), dtype=np.int64)
    provenance = []
    for i, rec in enumerate(anchors):
        where = f"{source}: anchors[{i}]"
        positions[i, 0] = _real(_field(rec, "x_m", where), f"{where}.x_m")
        positions[i, 1] = _real(_field(rec, "y_m", where), f"{where}.y_m")
        vec = _field(rec, "vector", where)
        if not isinstance(vec, list) or len(vec) != n:
            got = len(vec) if isinstance(vec, list) else type(vec).__name__
            raise FormatError(f"{where}.vector: length {got} does not match universe size {n}")
        vectors[i] = [_asu(a, f"{where}.vector[{j}]") for j, a in enumerate(vec)]
        tag = _field(rec, "provenance", where)
        if tag not in PROVENANCES:
            raise FormatError(f"{where}.provenance: {tag!r} is not one of {list(PROVENANCES)}")
        if not bounds.contains(positions[i]):
            raise FormatError(f"{where}: position outside map bounds")
        provenance.append(tag)
    return RadioMap(tuple(universe), positions, vectors, tuple(provenance), bounds)


# -- estimates -------------------------------------------------------------


def emit_estimates(engine: str, estimates: Sequence, map_density: float) -> bytes:
    header = {
        "schema_version": SCHEMA_VERSION,
        "kind": ESTIMATES,
        "engine": engine,
        "map_density": map_density,
    }
    records = [{"x_m": e.position.x, "y_m": e.position.y, "score": e.score} for e in estimates]
    return emit_document(header, "estimates", records)


def parse_estimates(data: bytes | str, source: str = "<estimates>") -> dict:
    """Returns ``{"engine", "map_density", "positions", "scores"}``."""
    doc = load_document(data, ESTIMATES, source)
    recs = _field(doc, "estimates", source)
    if not isinstance(recs, list):
        raise FormatError(f"{source}: 'estimates' must be a list")
    positions, scores = [], []
    for i, rec in enumerate(recs):
        where = f"{source}: estimates[{i}]"
        positions.append(Position(_real(_field(rec, "x_m", where), f"{where}.x_m"), _real(_field(rec, "y_m", where), f"{where}.y_m")))
        scores.append(_real(_field(rec, "score", where), f"{where}.score"))
    density = doc.get("map_density")
    return {
        "engine": _field(doc, "engine", source),
        "map_density": None if density is None else _real(density, f"{source}: map_density"),
        "positions": positions,
        "scores": scores,
    }


# -- reports ---------------------------------------------------------------


def emit_report(body: Mapping[str, Any]) -> bytes:
    doc = {"schema_version": SCHEMA_VERSION, "kind": REPORT, **body}
    return (json.dumps(doc, indent=2, allow_nan=False) + "\n").encode("utf-8")


def emit_cdf_csv(cdf: Sequence[tuple[float, float]]) -> bytes:
    lines = ["error_m,cum_fraction"] + [f"{e!r},{f!r}" for e, f in cdf]
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_cdf_csv(data: bytes | str) -> list[tuple[float, float]]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = text.splitlines()
    if not rows or rows[0] != "error_m,cum_fraction":
        raise FormatError("CDF CSV must start with the header 'error_m,cum_fraction'")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            e, f = row.split(",")
            out.append((float(e), float(f)))
        except ValueError:
            raise FormatError(f"CDF CSV line {lineno}: malformed row {row!r}") from None
    return out


# -- atomic output ---------------------------------------------------------


def write_outputs(out_dir: str | os.PathLike, files: Mapping[str, bytes]) -> list[Path]:
    """Write every file to a temp sibling first, then rename them into place.

    Nothing is renamed unless all temp writes succeeded.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged: list[tuple[str, Path]] = []
    try:
        for name, payload in files.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.", suffix=".tmp")
            staged.append((tmp, out / name))
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
    except BaseException:
        for tmp, _ in staged:
            Path(tmp).unlink(missing_ok=True)
        raise
    mode = 0o666 & ~_current_umask()
    for tmp, dest in staged:
        os.chmod(tmp, mode)
        os.replace(tmp, dest)
    return [dest for _, dest in staged]


def _current_umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def read_bytes(path: str | os.PathLike) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e.strerror}") from None
