import math

import pytest
from hypothesis import given, strategies as st

from wickstar.multiindex import (
    DimensionError,
    MultiIndex,
    format_index,
    leq,
    mi_enumerate,
    multi_binomial,
    multi_factorial,
    parse_index,
    sub_indices,
)

indices = st.lists(st.integers(0, 6), min_size=1, max_size=3).map(tuple)


def test_factorial_and_binomial():
    assert multi_factorial((2, 3)) == 12
    assert multi_factorial((0, 0)) == 1
    assert multi_binomial((3, 2), (1, 1)) == 6
    assert multi_binomial((1,), (2,)) == 0


def test_enumerate_counts_and_order():
    for n in (1, 2, 3):
        for D in range(5):
            got = mi_enumerate(n, D)
            assert len(got) == math.comb(D + n, n)
            degs = [sum(I) for I in got]
            assert degs == sorted(degs)


def test_parse_format_round_trip():
    assert format_index((1, 0)) == "1;0"
    assert tuple(parse_index("1;0")) == (1, 0)
    with pytest.raises(ValueError):
        parse_index("1;x")
    with pytest.raises(ValueError):
        parse_index("-1")


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        multi_binomial((1, 2), (1,))
    with pytest.raises(DimensionError):
        MultiIndex((1,)) + MultiIndex((1, 2))


@given(indices)
def test_round_trip_property(I):
    assert tuple(parse_index(format_index(I))) == I


@given(indices)
def test_vandermonde_sum(I):
    # sum_{J <= I} binom(I, J) = 2^|I|
    total = sum(multi_binomial(I, J) for J in sub_indices(I))
    assert total == 2 ** sum(I)
    assert all(leq(J, I) for J in sub_indices(I))
