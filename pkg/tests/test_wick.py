import cmath
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from wickstar import scalars as sc
from wickstar.jet import (
    constant,
    coordinate,
    delta,
    exponential,
    jet_conjugate,
    jet_from_polynomial,
    jet_linear,
    jet_pointwise_mul,
    jet_poisson,
)
from wickstar.wick import (
    HeisenbergElement,
    cocycle_phase,
    exp_inverse,
    exp_star_closed_form,
    jets_equal,
    jw_power_closed_form,
    generator_J,
    max_coeff_deviation,
    recursion_sign,
    rescale,
    star_exp_partial,
    star_power,
    unitary_u,
    wick_star,
    wick_star_graded,
)

H = Fraction(1, 2)

rational = st.fractions(min_value=-3, max_value=3, max_denominator=5)
gauss = st.tuples(rational, rational).map(sc.exact)


@st.composite
def polys(draw, n=1, degree=3, hbar=H):
    terms = {}
    for _ in range(draw(st.integers(1, 4))):
        I = tuple(draw(st.integers(0, degree)) for _ in range(n))
        left = degree - sum(I)
        if left < 0:
            continue
        J = tuple(draw(st.integers(0, left)) if k == 0 else 0 for k in range(n))
        terms[(I, J)] = draw(gauss)
    if not terms:
        terms[((0,) * n, (0,) * n)] = sc.exact(1)
    return jet_from_polynomial(n, None, hbar, terms, exact=True)


def test_z_star_zbar():
    z = coordinate(0, 1, None, 0.5, exact=False)
    zb = coordinate(0, 1, None, 0.5, exact=False, bar=True)
    assert wick_star(z, zb, 0.5).coeffs == {((0,), (0,)): 1, ((1,), (1,)): 1}
    assert wick_star(zb, z, 0.5).coeffs == {((1,), (1,)): 1}


def test_z_star_zbar_exact():
    z = coordinate(0, 1, None, H, exact=True)
    zb = coordinate(0, 1, None, H, exact=True, bar=True)
    out = wick_star(z, zb)
    assert out.status == "exact"
    assert out.coefficient((0,), (0,)) == sc.exact(1)


@settings(max_examples=30, deadline=None)
@given(polys(), polys(), polys())
def test_associativity_exact(f, g, k):
    lhs = wick_star(wick_star(f, g), k)
    rhs = wick_star(f, wick_star(g, k))
    assert jets_equal(lhs, rhs)


@settings(max_examples=30, deadline=None)
@given(polys(), polys())
def test_hermitian_and_unit(f, g):
    lhs = jet_conjugate(wick_star(f, g))
    rhs = wick_star(jet_conjugate(g), jet_conjugate(f))
    assert jets_equal(lhs, rhs)
    one = constant(sc.exact(1), 1, None, H, exact=True)
    assert jets_equal(wick_star(one, f), f)
    assert jets_equal(wick_star(f, one), f)


@settings(max_examples=30, deadline=None)
@given(polys(), polys())
def test_classical_limit(f, g):
    assert jets_equal(wick_star(f, g, Fraction(0)), jet_pointwise_mul(f, g))


@settings(max_examples=30, deadline=None)
@given(polys(n=2, degree=2), polys(n=2, degree=2))
def test_first_order_commutator(f, g):
    D = f.degree + g.degree
    c1 = wick_star_graded(f, g, 1, D)[1]
    c1r = wick_star_graded(g, f, 1, D)[1]
    lhs = jet_linear(sc.one(True), c1, sc.exact(-1), c1r)
    rhs = jet_linear(sc.imag_unit(True), jet_poisson(f, g), sc.zero(True), f)
    assert jets_equal(lhs, rhs, D)


@settings(max_examples=30, deadline=None)
@given(polys())
def test_positivity(f):
    v = delta(wick_star(jet_conjugate(f), f))
    assert sc.imag_part(v) == 0 and sc.real_part(v) >= 0


def test_exponential_star_closed_form():
    e1 = exponential([0.5, 0.1j], [0.3j, -0.2], None, 0.5)
    e2 = exponential([0.2, 0.4], [0.7, 0.1 + 0.1j], None, 0.5)
    prod = wick_star(e1, e2, D_out=4, N_cut=40)
    assert prod.status == "converged"
    assert max_coeff_deviation(prod, exp_star_closed_form(e1, e2), 4, relative=True) < 1e-12


def test_exponential_inverse():
    e = exponential([0.5], [0.3j], None, 0.5)
    one = constant(1.0, 1, None, 0.5, exact=False)
    assert max_coeff_deviation(wick_star(e, exp_inverse(e), D_out=4, N_cut=40), one, 4) < 1e-12


def test_cocycle():
    h = 0.5
    w, v = [0.3 + 0.1j], [-0.2 + 0.5j]
    uw = unitary_u(HeisenbergElement(tuple(w), 0.0), h)
    uv = unitary_u(HeisenbergElement(tuple(v), 0.0), h)
    uwv = unitary_u(HeisenbergElement((w[0] + v[0],), 0.0), h)
    lhs = wick_star(uw, uv, D_out=4, N_cut=40)
    rhs = jet_linear(cocycle_phase(w, v, h), uwv, 0, uwv)
    assert max_coeff_deviation(lhs, rhs, 4, relative=True) < 1e-12
    assert abs(cocycle_phase(w, v, h)) == pytest.approx(1.0)


def test_star_powers_match_closed_form():
    w = (sc.exact((Fraction(1, 2), Fraction(-1, 3))),)
    J = generator_J(HeisenbergElement(w, Fraction(0)), H, exact=True)
    for k in range(1, 7):
        assert jets_equal(star_power(J, k), jw_power_closed_form(w, k, H, exact=True))


def test_recursion_sign_is_negative():
    w = (sc.exact((Fraction(1, 2), Fraction(1, 3))),)
    assert recursion_sign(w, H) == -1


def test_star_exponential_converges():
    g = HeisenbergElement((0.6 + 0.3j,), 0.2)
    devs = [star_exp_partial(g, 0.5, K, 0.5).deviation for K in (4, 8, 16)]
    assert devs[0] > devs[1] > devs[2]
    assert devs[2] < 1e-10


@settings(max_examples=15, deadline=None)
@given(polys(hbar=Fraction(1, 8)), polys(hbar=Fraction(1, 8)))
def test_rescaling_homomorphism(f, g):
    alpha = Fraction(4)
    lhs = rescale(wick_star(f, g), alpha)
    rhs = wick_star(rescale(f, alpha), rescale(g, alpha))
    assert jets_equal(lhs, rhs)


def test_heisenberg_group_law():
    a = HeisenbergElement((1 + 0j,), 0.0)
    b = HeisenbergElement((1j,), 0.0)
    ab = a * b
    assert ab.c == pytest.approx(1.0)
    assert (a * a.inverse()).w == (0j,)
    assert cmath.isclose(unitary_u(a, 0.5).coefficient((0,), (0,)), cmath.exp(-0.5))
