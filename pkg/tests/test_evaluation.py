import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellmap.core import Bounds, Position, RadioMap
from cellmap.errors import InsufficientDataError, InvalidBoundsError, InvalidInputError
from cellmap.evaluation import (
    anchor_density,
    coverage_increase,
    error_stats,
    improvement,
    mean_improvement,
    stats_from_errors,
)


def _map(n, side):
    pos = [[(i % side), (i // side) % side] for i in range(n)]
    return RadioMap(("A",), pos, [[0]] * n, ("seed",) * n, Bounds.from_size(side, side))


@pytest.mark.parametrize("n, side, want", [(100, 16, 0.390625), (3016, 16, 11.78125), (1, 1, 1.0)])
def test_anchor_density(n, side, want):
    assert anchor_density(_map(n, side)) == pytest.approx(want)


def test_anchor_density_zero_area():
    m = RadioMap(("A",), [[0, 0]], [[0]], ("seed",), Bounds(0, 0, 0, 5))
    with pytest.raises(InvalidBoundsError):
        anchor_density(m)


@pytest.mark.parametrize("before, after, want", [(0.3864, 11.49, 2873.6), (0.39, 11.49, 2846.2), (2.0, 2.0, 0.0)])
def test_coverage_increase(before, after, want):
    assert coverage_increase(before, after) == pytest.approx(want, abs=0.05)


def test_coverage_increase_rejects_nonpositive():
    with pytest.raises(InvalidInputError):
        coverage_increase(0, 1)


@given(st.floats(0.01, 100), st.floats(0, 100), st.floats(0, 100))
def test_coverage_properties(d, a, b):
    assert coverage_increase(d, d) == 0
    lo, hi = sorted((a, b))
    assert coverage_increase(d, lo) <= coverage_increase(d, hi)


def _pairs(errors):
    return [(Position(e, 0.0), Position(0.0, 0.0)) for e in errors]


def test_error_stats_basic():
    s = error_stats(_pairs([1, 2, 3, 4, 5]))
    assert (s.mean, s.median, s.max) == (3, 3, 5)
    assert s.p75 == 4 and s.p90 == pytest.approx(4.6)
    assert s.cdf[-1] == (5.0, 1.0)


def test_error_stats_exact():
    s = error_stats(_pairs([0, 0, 0]))
    assert (s.mean, s.median, s.p75, s.p90, s.max) == (0, 0, 0, 0, 0)
    assert s.cdf == ((0.0, 1.0),)


def test_error_stats_two():
    s = error_stats(_pairs([0, 10]))
    assert (s.mean, s.median, s.max) == (5, 5, 10)


def test_error_stats_uses_2d_distance():
    s = error_stats([(Position(3, 4), Position(0, 0))])
    assert s.median == 5.0


def test_error_stats_empty():
    with pytest.raises(InsufficientDataError):
        error_stats([])


@given(st.lists(st.floats(0, 50), min_size=1, max_size=40), st.randoms())
def test_error_stats_invariants(errors, rnd):
    s = stats_from_errors(errors)
    shuffled = list(errors)
    rnd.shuffle(shuffled)
    assert stats_from_errors(shuffled) == s
    assert 0 <= s.median <= s.p75 <= s.p90 <= s.max
    fr = [f for _, f in s.cdf]
    assert fr == sorted(fr) and fr[-1] == 1.0
    assert [e for e, _ in s.cdf] == sorted(set(errors))


def _stats(error):
    return stats_from_errors([error])


@pytest.mark.parametrize("base, enh, want", [(4.0, 2.6, 35.0), (4.0, 4.0, 0.0), (4.0, 2.0, 50.0)])
def test_improvement(base, enh, want):
    assert improvement(_stats(base), _stats(enh)) == pytest.approx(want)
    assert mean_improvement(_stats(base), _stats(enh)) == pytest.approx(want)


def test_improvement_swap_is_not_symmetric():
    a, b = _stats(4.0), _stats(2.0)
    assert improvement(a, b) == 50.0
    assert improvement(b, a) == -100.0


def test_improvement_zero_baseline():
    with pytest.raises(InvalidInputError):
        improvement(_stats(0.0), _stats(1.0))
