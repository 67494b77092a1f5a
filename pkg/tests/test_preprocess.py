import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellmap.core import Fingerprint, Position
from cellmap.errors import EmptyUniverseError, InsufficientDataError, InvalidInputError, UnknownTowerError
from cellmap.preprocess import (
    SplitConfig,
    build_tower_universe,
    restrict_scan,
    split_seed_points,
    vectorize,
)

from conftest import fp


@pytest.mark.parametrize(
    "scans, universe",
    [
        ([{"T2": 5}, {"T1": 9, "T2": 3}], ("T1", "T2")),
        ([{"T1": 9}], ("T1",)),
        ([{"T3": 1}, {"T3": 2}, {"T1": 4}], ("T1", "T3")),
    ],
)
def test_build_tower_universe(scans, universe):
    assert build_tower_universe([fp(0, 0, **s) for s in scans]) == universe


def test_empty_universe():
    with pytest.raises(EmptyUniverseError):
        build_tower_universe([])
    with pytest.raises(EmptyUniverseError):
        build_tower_universe([fp(0, 0), fp(1, 1)])


@pytest.mark.parametrize(
    "scan, universe, vec",
    [
        ({"T2": 5}, ("T1", "T2", "T3"), [0, 5, 0]),
        ({}, ("T1", "T2"), [0, 0]),
        ({"T1": 31, "T2": 1}, ("T1", "T2"), [31, 1]),
    ],
)
def test_vectorize(scan, universe, vec):
    assert vectorize(scan, universe).tolist() == vec


def test_vectorize_unknown_tower():
    with pytest.raises(UnknownTowerError):
        vectorize({"T9": 3}, ("T1",))


def test_restrict_scan():
    assert restrict_scan({"T1": 3, "T9": 4}, ("T1", "T2")) == {"T1": 3}


towers = st.sampled_from([f"T{i}" for i in range(12)])
scans = st.dictionaries(towers, st.integers(0, 31), max_size=7)


@given(st.lists(scans, min_size=1, max_size=8).filter(lambda s: any(s)), st.randoms())
def test_universe_permutation_invariant_and_lossless(scan_list, rnd):
    fps = [Fingerprint(Position(i, 0), s) for i, s in enumerate(scan_list)]
    u = build_tower_universe(fps)
    shuffled = list(fps)
    rnd.shuffle(shuffled)
    assert build_tower_universe(shuffled) == u
    for s in scan_list:
        v = vectorize(s, u)
        assert len(v) == len(u)
        assert {u[i]: int(v[i]) for i in range(len(u)) if u[i] in s} == s


@pytest.mark.parametrize("n, n_train", [(10, 7), (3, 2), (2, 1), (100, 70)])
def test_split_sizes(n, n_train):
    fps = [fp(i, 0, T1=1) for i in range(n)]
    train, hold = split_seed_points(fps, SplitConfig(0.7, 42))
    assert len(train) == n_train and len(hold) == n - n_train
    xs = sorted(f.position.x for f in train + hold)
    assert xs == list(range(n))


def test_split_min_one_each_side():
    fps = [fp(i, 0, T1=1) for i in range(3)]
    assert len(split_seed_points(fps, SplitConfig(0.01, 1))[0]) == 1
    assert len(split_seed_points(fps, SplitConfig(0.99, 1))[1]) == 1


def test_split_deterministic_and_seed_sensitive():
    fps = [fp(i, 0, T1=1) for i in range(20)]
    a = split_seed_points(fps, SplitConfig(0.7, 42))
    b = split_seed_points(fps, SplitConfig(0.7, 42))
    c = split_seed_points(fps, SplitConfig(0.7, 43))
    assert a == b
    assert a != c


def test_split_errors():
    with pytest.raises(InsufficientDataError):
        split_seed_points([fp(0, 0, T1=1)], SplitConfig())
    with pytest.raises(InvalidInputError):
        SplitConfig(train_fraction=1.0)
