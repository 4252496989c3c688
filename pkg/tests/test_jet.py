import cmath
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from wickstar.jet import (
    badguy,
    constant,
    coordinate,
    delta,
    exponential,
    jet_conjugate,
    jet_derivative,
    jet_evaluate,
    jet_from_json,
    jet_from_polynomial,
    jet_linear,
    jet_pointwise_mul,
    jet_poisson,
    jet_to_json,
    jet_translate,
    taylor_remainder,
    taylor_truncation,
)
from wickstar.multiindex import DimensionError
from wickstar.scalars import exact
from wickstar.wick import exp_translate_closed_form, max_coeff_deviation

H = Fraction(1, 2)


def test_polynomial_stores_derivative_values():
    # 3 z^2 zbar has d^2_z d_zbar = 3 * 2! * 1!
    f = jet_from_polynomial(1, None, H, {((2,), (1,)): 3}, exact=True)
    assert f.coefficient((2,), (1,)) == exact(6)
    assert f.degrees() == (2, 1)
    assert f.exact


def test_evaluate_polynomial():
    f = jet_from_polynomial(1, None, 0.5, {((1,), (1,)): 2.0, ((0,), (2,)): 1.0})
    assert jet_evaluate(f, [1.0], 2, 2).value == pytest.approx(3.0)
    q = 0.3 - 0.2j
    want = 2 * q * q.conjugate() + q.conjugate() ** 2
    assert jet_evaluate(f, [q], 2, 2).value == pytest.approx(want)


def test_exponential_coefficients_and_value():
    a, b, h = 0.5, 0.3j, 0.5
    e = exponential([a], [b], None, h)
    pref = cmath.exp(h * a * b)
    assert e.coefficient((2,), (1,)) == pytest.approx(pref * a**2 * b)
    q = 0.1 + 0.2j
    assert jet_evaluate(e, [q], 40, 40).value == pytest.approx(pref * cmath.exp(a * q + b * q.conjugate()))


def test_delta_is_value_at_expansion_point():
    assert delta(constant(3.0, 1, None, 0.5, exact=False)) == 3


def test_conjugate_and_derivative():
    e = exponential([0.5], [0.3j], None, 0.5)
    c = jet_conjugate(e)
    assert c.coefficient((1,), (0,)) == pytest.approx(e.coefficient((0,), (1,)).conjugate())
    d = jet_derivative(e, (1,), (0,))
    assert d.coefficient((0,), (0,)) == pytest.approx(e.coefficient((1,), (0,)))


def test_pointwise_and_poisson():
    z = coordinate(0, 1, None, 0.5, exact=False)
    zb = coordinate(0, 1, None, 0.5, exact=False, bar=True)
    assert jet_pointwise_mul(z, zb).coeffs == {((1,), (1,)): 1}
    # {z, zbar} = -2i in the normalization C1(f,g) - C1(g,f) = i{f,g}
    assert jet_poisson(z, zb).coeffs == {((0,), (0,)): -2j}


def test_truncation_plus_remainder():
    e = exponential([0.5], [0.3j], None, 0.5)
    t, r = taylor_truncation(e, 2, 2), taylor_remainder(e, 2, 2)
    for I in range(5):
        for J in range(5):
            total = t.coefficient((I,), (J,)) + r.coefficient((I,), (J,))
            assert total == pytest.approx(e.coefficient((I,), (J,)))
    assert r.coefficient((1,), (1,)) == 0
    assert t.coefficient((3,), (0,)) == 0


def test_translate_matches_closed_form():
    e = exponential([0.5], [0.3j], None, 0.5)
    tr = jet_translate(e, [0.2], "holomorphic", D_out=4)
    assert max_coeff_deviation(tr, exp_translate_closed_form(e, [0.2], "holomorphic"), 4) < 1e-14
    with pytest.raises(ValueError):
        jet_translate(e, [0.2], "holomorphic")


def test_polynomial_truncation_error():
    f = jet_from_polynomial(1, None, 0.5, {((1,), (0,)): 1.0})
    t = taylor_truncation(badguy(0.5), 3, 3)
    assert t.coefficient((3,), (0,)) != 0
    assert f.coefficient((7,), (0,)) == 0
    g = jet_linear(1, f, 1, f)
    assert g.coefficient((1,), (0,)) == 2


def test_frame_mismatch():
    with pytest.raises((DimensionError, ValueError)):
        jet_linear(1, coordinate(0, 1, None, 0.5, exact=False), 1, coordinate(0, 2, None, 0.5, exact=False))


def test_json_round_trip():
    e = exponential([0.5], [0.3j], None, 0.5)
    assert jet_from_json(jet_to_json(e)).coefficient((2,), (3,)) == e.coefficient((2,), (3,))
    f = jet_from_polynomial(2, None, H, {((1, 0), (0, 2)): Fraction(3, 7)}, exact=True)
    g = jet_from_json(jet_to_json(f))
    assert g.exact and g.coeffs == f.coeffs


coeff = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@settings(max_examples=40, deadline=None)
@given(coeff, coeff, coeff)
def test_pointwise_product_is_commutative(a, b, c):
    f = jet_from_polynomial(1, None, H, {((1,), (0,)): a, ((0,), (1,)): b}, exact=True)
    g = jet_from_polynomial(1, None, H, {((0,), (0,)): c, ((1,), (1,)): a}, exact=True)
    assert jet_pointwise_mul(f, g).coeffs == jet_pointwise_mul(g, f).coeffs
