import math
from functools import lru_cache

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from wickstar.jet import badguy, decoy, exponential, jet_from_polynomial, jet_linear
from wickstar.seminorm import (
    SeminormParams,
    continuity_constant,
    divergence_probe,
    epsilon_sign,
    exponential_h_data,
    h_base,
    h_recursive,
    inequality_suite,
    membership_bound,
    norm_ml,
    product_form_h,
    seminorm,
    seminorm_table,
    table_to_csv,
)


# --------------------------------------------------------------------------
# naive oracle: the recursive definition summed term by term in mpmath


def naive_h(pref, abar, beta, hbar, terms=60):
    mp.mp.dps = 30
    P, A, B, H = mp.mpc(pref), mp.mpc(abar), mp.mpc(beta), mp.mpf(hbar)

    @lru_cache(None)
    def h0(R, S):
        return mp.fsum((2 * H) ** (R + S + N) / mp.factorial(N) * abs(P * A**R * B ** (S + N)) ** 2
                       for N in range(terms))

    @lru_cache(None)
    def h(m, l, R, S):
        if m == 0:
            return h0(R, S)
        tot = mp.mpf(0)
        for N in range(terms):
            inner = mp.mpf(0)
            for I in range(R + 1):
                for J in range(N + S + 1):
                    v = h(m - 1, l // 2, I, J) if l % 2 == 0 else h(m - 1, (l - 1) // 2, J, I)
                    inner += math.comb(R, I) * math.comb(N + S, J) * v
            tot += inner**2 / mp.factorial(N)
        return tot

    return h


EXP = exponential([0.5], [0.3], None, 0.5)


@pytest.mark.parametrize("m,l,R,S", [(0, 0, 1, 2), (1, 0, 0, 0), (1, 1, 1, 0), (1, 0, 0, 1), (1, 1, 2, 1)])
def test_recursion_matches_naive_oracle(m, l, R, S):
    oracle = naive_h(EXP.provider.prefactor, 0.5, 0.3, 0.5)
    want = float(oracle(m, l, R, S))
    got = h_recursive(EXP, SeminormParams(m, l, (R,), (S,), 0.5))
    assert got.status == "converged"
    assert got.value == pytest.approx(want, rel=1e-13)


# frozen from the naive oracle above (30 digits, 60 terms per level)
FROZEN_M2 = {(0, 0, 0): 3374.4296957802776, (3, 0, 0): 7135.100462142721, (1, 1, 0): 95671.279693992}


@pytest.mark.parametrize("key", sorted(FROZEN_M2))
def test_level_two_frozen(key):
    l, R, S = key
    got = h_recursive(EXP, SeminormParams(2, l, (R,), (S,), 0.5))
    assert got.value == pytest.approx(FROZEN_M2[key], rel=1e-12)


@pytest.mark.parametrize("m,f", [
    (0, exponential([0.4 + 0.1j, -0.2j], [0.3, 0.1 + 0.2j], None, 0.5)),
    (1, exponential([0.4 + 0.1j, -0.2j], [0.3, 0.1 + 0.2j], None, 0.5)),
    (2, exponential([0.7 - 0.2j], [0.5j], None, 0.5)),
])
def test_product_form_matches_recursion(m, f):
    c, a, b = exponential_h_data(f)
    for l in range(2**m):
        for R, S in [((0, 0), (0, 0)), ((1, 0), (0, 1)), ((0, 1), (1, 1))]:
            R, S = R[: f.n], S[: f.n]
            got = h_recursive(f, SeminormParams(m, l, R, S, 0.5), adaptive=True)
            assert got.ok
            assert got.value == pytest.approx(product_form_h(c, a, b, m, l, R, S), rel=1e-10)


def test_truncated_series_is_not_reported_converged():
    f = exponential([0.4 + 0.1j, -0.2j], [0.3, 0.1 + 0.2j], None, 0.5)
    c, a, b = exponential_h_data(f)
    got = h_recursive(f, SeminormParams(2, 0, (0, 0), (0, 0), 0.5))
    want = product_form_h(c, a, b, 2, 0, (0, 0), (0, 0))
    assert abs(got.value - want) > 1e-6 * want
    assert got.status == "inconclusive"


def test_polynomial_level_zero_is_exact():
    f = jet_from_polynomial(1, None, 0.5, {((0,), (2,)): 1.0})
    ev = h_base(f, (0,), (0,), 0.5)
    # |d_zbar^2 zbar^2|^2 (2 hbar)^2 / 2! = 4 / 2
    assert ev.value == pytest.approx(2.0)
    assert ev.ok


def test_transposed_index_counterexample():
    # the printed odd-branch monotonicity fails at R = 0, S > 0 for f = zbar^2
    f = jet_from_polynomial(1, None, 0.5, {((0,), (2,)): 1.0})
    low = seminorm(f, SeminormParams(0, 0, (0,), (1,), 0.5))
    high = seminorm(f, SeminormParams(1, 1, (0,), (1,), 0.5))
    assert low.value == pytest.approx(2.0)
    assert high.value == pytest.approx((4 * math.e) ** 0.25)
    assert high.value < low.value
    swapped = seminorm(f, SeminormParams(0, 0, (1,), (0,), 0.5))
    assert swapped.value <= high.value


def test_membership_bound_dominates():
    f = exponential([0.5], [0.3], None, 0.5)
    for m in range(3):
        for l in range(2**m):
            bound = membership_bound(0.5, 0.3, abs(f.provider.prefactor), m, l, 0.5, 1)
            for R, S in [((0,), (0,)), ((1,), (2,))]:
                got = h_recursive(f, SeminormParams(m, l, R, S, 0.5), adaptive=True).value
                assert got <= bound.bound(R, S) * (1 + 1e-10)


def test_epsilon_sign_range():
    assert epsilon_sign(0, 0) in (-1, 1)
    with pytest.raises(ValueError):
        epsilon_sign(1, 2)


def test_continuity_constant():
    assert continuity_constant(0.0, 1).value == 1.0
    ev = continuity_constant(0.5, 1)
    assert ev.ok and ev.value > 1.5


@pytest.mark.parametrize("hbar", [0.125, 0.5, 2.0])
def test_badguy_diverges(hbar):
    rep = divergence_probe(badguy(hbar), hbar)
    assert rep.verdict == "diverging"
    assert rep.first_increasing is not None


def test_badguy_first_increasing_and_classical_limit():
    assert divergence_probe(badguy(0.125), 0.125).first_increasing == 15
    assert divergence_probe(badguy(0.5), 0.0).verdict == "converged"
    assert divergence_probe(decoy(0.5), 0.5).verdict == "converged"


def test_badguy_seminorm_flags_divergence():
    ev = seminorm(badguy(0.5), SeminormParams(1, 1, (0,), (0,), 0.5))
    assert ev.status == "diverging"
    assert ev.value == math.inf


def test_inequality_suite_on_exponential():
    f = exponential([0.3], [0.2j], None, 0.5)
    g = exponential([-0.1], [0.4], None, 0.5)
    rows = inequality_suite(f, g, 0.5, m_max=1, RS_max=1, alphas=(0.25,))
    assert rows
    assert all(r.status == "pass" for r in rows), [r.to_dict() for r in rows if r.status != "pass"]


def test_table_csv():
    assert table_to_csv([]).splitlines() == ["m,l,R,S,hbar,value,status,terms_used,last_term"]
    rows = seminorm_table(EXP, [(0, 0, (0,), (0,), 0.5), (1, 1, (1,), (0,), 0.5)])
    lines = table_to_csv(rows).splitlines()
    assert len(lines) == 3 and lines[1].startswith("0,0,0,0,0.5,")


exps = st.tuples(st.complex_numbers(max_magnitude=0.6), st.complex_numbers(max_magnitude=0.6))


@settings(max_examples=25, deadline=None)
@given(exps, st.integers(0, 1), st.integers(0, 1))
def test_hbar_monotone(ab, m, l):
    l = min(l, 2**m - 1)
    f = exponential([ab[0]], [ab[1]], None, 0.5)
    lo = norm_ml(f, m, l, 0.25)
    hi = norm_ml(f, m, l, 0.5)
    assert lo.value <= hi.value * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(exps, exps, st.integers(0, 1))
def test_triangle(ab, cd, m):
    f = exponential([ab[0]], [ab[1]], None, 0.5)
    g = exponential([cd[0]], [cd[1]], None, 0.5)
    s = jet_linear(1, f, 1, g)
    for l in range(2**m):
        lhs = norm_ml(s, m, l, 0.5).value
        rhs = norm_ml(f, m, l, 0.5).value + norm_ml(g, m, l, 0.5).value
        assert lhs <= rhs * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(exps, st.complex_numbers(min_magnitude=0.1, max_magnitude=3), st.integers(0, 2))
def test_homogeneous(ab, c, m):
    f = exponential([ab[0]], [ab[1]], None, 0.5)
    cf = jet_linear(c, f, 0, f)
    assert norm_ml(cf, m, 0, 0.5).value == pytest.approx(abs(c) * norm_ml(f, m, 0, 0.5).value, rel=1e-12)
