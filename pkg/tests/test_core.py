import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellmap.core import (
    Bounds,
    Fingerprint,
    Position,
    RadioMap,
    asu_from_dbm,
    dbm_from_asu,
    quantize_array,
    quantize_asu,
)
from cellmap.errors import InvalidBoundsError, InvalidInputError


@pytest.mark.parametrize("dbm, asu", [(-113, 0), (-51, 31), (-80, 17), (-200, 0), (0, 31)])
def test_asu_from_dbm(dbm, asu):
    assert asu_from_dbm(dbm) == asu


@pytest.mark.parametrize("asu, dbm", [(0, -113.0), (31, -51.0), (16, -81.0)])
def test_dbm_from_asu(asu, dbm):
    assert dbm_from_asu(asu) == dbm


@pytest.mark.parametrize("bad", [-1, 32, 3.5, True])
def test_dbm_from_asu_rejects_out_of_range(bad):
    with pytest.raises(InvalidInputError):
        dbm_from_asu(bad)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_inputs_rejected(bad):
    with pytest.raises(InvalidInputError):
        asu_from_dbm(bad)
    with pytest.raises(InvalidInputError):
        quantize_asu(bad)


@pytest.mark.parametrize("raw, q", [(12.5, 13), (-2.0, 0), (35.0, 31), (12.49, 12), (0.5, 1), (30.5, 31)])
def test_quantize_asu(raw, q):
    assert quantize_asu(raw) == q


def test_round_trip_all_levels():
    assert [asu_from_dbm(dbm_from_asu(a)) for a in range(32)] == list(range(32))


@given(st.floats(-100, 100, allow_nan=False))
def test_quantize_idempotent(x):
    q = quantize_asu(x)
    assert quantize_asu(float(q)) == q


@given(st.floats(-100, 100), st.floats(-100, 100))
def test_quantize_monotone(a, b):
    lo, hi = sorted((a, b))
    assert quantize_asu(lo) <= quantize_asu(hi)


@given(st.lists(st.floats(-50, 80), min_size=1, max_size=30))
def test_quantize_array_matches_scalar(values):
    assert quantize_array(np.array(values)).tolist() == [quantize_asu(v) for v in values]


def test_fingerprint_caps_scan_at_seven():
    Fingerprint(Position(0, 0), {f"T{i}": 1 for i in range(7)})
    with pytest.raises(InvalidInputError):
        Fingerprint(Position(0, 0), {f"T{i}": 1 for i in range(8)})


@pytest.mark.parametrize("readings", [{"": 3}, {"T1": 32}, {"T1": -1}, {"T1": 2.5}])
def test_fingerprint_validates_readings(readings):
    with pytest.raises(InvalidInputError):
        Fingerprint(Position(0, 0), readings)


def test_bounds():
    b = Bounds.from_size(16, 16)
    assert b.area == 256
    assert b.contains(Position(16, 0)) and not b.contains(Position(16.1, 0))
    assert Bounds.enclosing([Position(1, 5), Position(3, 2)]) == Bounds(1, 2, 3, 5)
    with pytest.raises(InvalidBoundsError):
        Bounds(2, 0, 1, 1)


def test_radio_map_invariants():
    b = Bounds.from_size(10, 10)
    m = RadioMap(("A", "B"), [[0, 0], [10, 0]], [[31, 0], [0, 31]], ("seed", "synthetic"), b)
    assert len(m) == 2
    assert m.anchors[1].vector == (0, 31)
    assert m.seed_mask.tolist() == [True, False]
    with pytest.raises(InvalidInputError):
        RadioMap(("B", "A"), [[0, 0]], [[1, 1]], ("seed",), b)
    with pytest.raises(InvalidInputError):
        RadioMap(("A",), [[11, 0]], [[1]], ("seed",), b)
    with pytest.raises(InvalidInputError):
        RadioMap(("A",), [[1, 0]], [[1]], ("surveyed",), b)
    with pytest.raises(InvalidInputError):
        RadioMap(("A",), [[1, 0]], [[40]], ("seed",), b)
