import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellmap import formats as fmt
from cellmap.core import Bounds, Fingerprint, Position, RadioMap
from cellmap.errors import FormatError
from cellmap.localize import LocalizationEstimate


def test_parse_one_fingerprint():
    doc = '{"schema_version": 1, "kind": "fingerprints", "fingerprints": [{"x_m": 1.0, "y_m": 2.0, "readings": {"T1": 5}}]}'
    (f,) = fmt.parse_fingerprints(doc)
    assert f == Fingerprint(Position(1.0, 2.0), {"T1": 5})


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
readings = st.dictionaries(st.text(min_size=1, max_size=6), st.integers(0, 31), max_size=7)
fingerprint_lists = st.lists(st.builds(lambda x, y, r: Fingerprint(Position(x, y), r), finite, finite, readings), max_size=10)


@given(fingerprint_lists)
def test_fingerprint_round_trip(fps):
    data = fmt.emit_fingerprints(fps)
    assert fmt.parse_fingerprints(data) == fps
    assert fmt.emit_fingerprints(fmt.parse_fingerprints(data)) == data


def test_absent_distinct_from_zero():
    fps = [Fingerprint(Position(0, 0), {"T1": 0}), Fingerprint(Position(0, 0), {})]
    back = fmt.parse_fingerprints(fmt.emit_fingerprints(fps))
    assert back[0].readings == {"T1": 0} and back[1].readings == {}


@pytest.mark.parametrize(
    "record, needle",
    [
        ({"x_m": 1, "y_m": 2, "readings": {"T1": 40}}, "fingerprints[0].readings['T1']"),
        ({"x_m": 1, "y_m": 2, "readings": {"T1": 1.5}}, "integer"),
        ({"x_m": 1, "readings": {}}, "missing field 'y_m'"),
        ({"x_m": "a", "y_m": 2, "readings": {}}, "finite number"),
        ({"x_m": 1, "y_m": 2, "readings": {"": 3}}, "empty tower id"),
        ({"x_m": 1, "y_m": 2, "readings": {f"T{i}": 1 for i in range(8)}}, "exceeds 7"),
    ],
)
def test_fingerprint_validation_errors(record, needle):
    doc = json.dumps({"schema_version": 1, "kind": "fingerprints", "fingerprints": [record]})
    with pytest.raises(FormatError, match=__import__("re").escape(needle)):
        fmt.parse_fingerprints(doc)


def test_parse_error_has_line_context():
    with pytest.raises(FormatError, match="line 3"):
        fmt.parse_fingerprints('{\n"schema_version": 1,\n"kind": oops}')


@pytest.mark.parametrize("version", [0, 2, "1", None])
def test_schema_version_mismatch(version):
    doc = json.dumps({"schema_version": version, "kind": "fingerprints", "fingerprints": []})
    with pytest.raises(FormatError, match="schema_version"):
        fmt.parse_fingerprints(doc)


def test_wrong_kind():
    with pytest.raises(FormatError, match="kind"):
        fmt.parse_radio_map(fmt.emit_fingerprints([]))


def test_nan_rejected():
    doc = '{"schema_version": 1, "kind": "fingerprints", "fingerprints": [{"x_m": NaN, "y_m": 0, "readings": {}}]}'
    with pytest.raises(FormatError):
        fmt.parse_fingerprints(doc)


@pytest.fixture
def small_map():
    return RadioMap(
        ("T1", "T2", "T3"),
        [[0.5, 1.25], [3.0, 0.1]],
        [[1, 0, 31], [7, 7, 0]],
        ("seed", "synthetic"),
        Bounds(0, 0, 4, 2),
    )


def test_radio_map_round_trip(small_map):
    data = fmt.emit_radio_map(small_map)
    back = fmt.parse_radio_map(data)
    assert back == small_map
    assert fmt.emit_radio_map(back) == data


def _map_doc(small_map, mutate):
    doc = json.loads(fmt.emit_radio_map(small_map))
    mutate(doc)
    return json.dumps(doc)


@pytest.mark.parametrize(
    "mutate, needle",
    [
        (lambda d: d["anchors"][0].__setitem__("vector", [1, 2]), "length 2 does not match universe size 3"),
        (lambda d: d["anchors"][1].__setitem__("provenance", "guess"), "provenance"),
        (lambda d: d["anchors"][1]["vector"].__setitem__(0, 32), "outside"),
        (lambda d: d.__setitem__("universe", ["T2", "T1", "T3"]), "sorted"),
        (lambda d: d["anchors"][0].__setitem__("x_m", 9.0), "outside map bounds"),
        (lambda d: d["bounds"].__setitem__("xmax", -1.0), "bounds"),
    ],
)
def test_radio_map_validation(small_map, mutate, needle):
    with pytest.raises(FormatError, match=needle):
        fmt.parse_radio_map(_map_doc(small_map, mutate))


@given(
    st.lists(
        st.tuples(st.floats(0, 10), st.floats(0, 10), st.lists(st.integers(0, 31), min_size=2, max_size=2), st.sampled_from(["seed", "synthetic"])),
        max_size=20,
    )
)
def test_radio_map_round_trip_property(rows):
    m = RadioMap(
        ("a", "b"),
        np.array([[x, y] for x, y, _, _ in rows]).reshape(-1, 2),
        np.array([v for _, _, v, _ in rows]).reshape(-1, 2),
        tuple(t for *_, t in rows),
        Bounds.from_size(10, 10),
    )
    assert fmt.parse_radio_map(fmt.emit_radio_map(m)) == m


def test_estimates_round_trip():
    est = [LocalizationEstimate(Position(1.5, 2.0), -3.25, "knn"), LocalizationEstimate(Position(0.1, 0.2), 0.0, "knn")]
    back = fmt.parse_estimates(fmt.emit_estimates("knn", est, 11.78))
    assert back["engine"] == "knn" and back["map_density"] == 11.78
    assert back["positions"] == [e.position for e in est]
    assert back["scores"] == [-3.25, 0.0]


def test_cdf_csv():
    cdf = ((0.5, 0.25), (1.0, 1.0))
    data = fmt.emit_cdf_csv(cdf)
    assert data == b"error_m,cum_fraction\n0.5,0.25\n1.0,1.0\n"
    assert fmt.parse_cdf_csv(data) == list(cdf)
    with pytest.raises(FormatError):
        fmt.parse_cdf_csv("error,frac\n")


def test_write_outputs_atomic(tmp_path, monkeypatch):
    fmt.write_outputs(tmp_path, {"a.json": b"old"})
    real_fdopen = os.fdopen
    calls = []

    def failing(fd, mode):
        calls.append(fd)
        if len(calls) == 2:
            os.close(fd)
            raise OSError("disk full")
        return real_fdopen(fd, mode)

    monkeypatch.setattr(fmt.os, "fdopen", failing)
    with pytest.raises(OSError):
        fmt.write_outputs(tmp_path, {"a.json": b"new", "b.json": b"x"})
    assert (tmp_path / "a.json").read_bytes() == b"old"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.json"]
