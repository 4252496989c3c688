import math
from fractions import Fraction

import numpy as np
import pytest

from wickstar import scalars as sc
from wickstar.fock import (
    FockVector,
    basis,
    bf_inner,
    coherent_prefactor_report,
    coherent_vector,
    covariance_check,
    expectation,
    expectation_sweep,
    expP_series,
    expQ_series,
    ladder_ops,
    nu_squared,
    pi_matrix,
    psi_projection,
    sweep_to_csv,
    unitary_prefactor_report,
    unitary_U_matrix,
    uw_series,
)
from wickstar.jet import coordinate, delta, jet_conjugate, jet_evaluate, jet_from_polynomial
from wickstar.wick import HeisenbergElement, wick_star

H = Fraction(1, 2)


def poly(terms, n=1, hbar=H):
    return jet_from_polynomial(n, None, hbar, {k: sc.exact(v) for k, v in terms.items()}, exact=True)


def test_basis_and_norms():
    assert basis(1, 3) == [(0,), (1,), (2,), (3,)]
    assert len(basis(2, 3)) == 10
    # ||z^R||^2 = (2 hbar)^|R| R!
    assert sc.exact(nu_squared((2,), H)) == sc.exact(2)
    assert FockVector.basis_vector(1, H, 3, (0,), exact=True).norm2() == sc.exact(1)
    assert FockVector.basis_vector(1, 0.5, 3, (2,)).norm2() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        FockVector.basis_vector(1, H, 3, (2,), exact=True)


def test_isometry_exact():
    f = poly({((1,), (0,)): Fraction(2, 3), ((2,), (0,)): 1, ((0,), (1,)): 5})
    g = poly({((0,), (0,)): 1, ((2,), (0,)): Fraction(-1, 2)})
    lhs = bf_inner(psi_projection(f, 3), psi_projection(g, 3))
    rhs = delta(wick_star(jet_conjugate(f), g))
    assert sc.is_zero(lhs - rhs)


def test_ladder_matrix_elements():
    ops = ladder_ops(1, 0.5, 6)
    e0 = FockVector.basis_vector(1, 0.5, 6, (0,))
    e1 = FockVector.basis_vector(1, 0.5, 6, (1,))
    # a e_1 = sqrt(2 hbar) e_0
    v = ops.a[0].apply(e1)
    assert np.allclose(v.components, e0.components * math.sqrt(1.0))


@pytest.mark.parametrize("n", [1, 2])
def test_canonical_commutator(n):
    ops = ladder_ops(n, 0.5, 8)
    for k in range(n):
        C = (ops.a[k] @ ops.adag[k]) - (ops.adag[k] @ ops.a[k])
        idx = C.interior()
        assert np.allclose(C.matrix[np.ix_(idx, idx)], np.eye(len(idx)))


def test_pi_is_homomorphism_on_interior():
    f = poly({((1,), (0,)): 1, ((0,), (1,)): Fraction(1, 3)})
    g = poly({((0,), (2,)): 2, ((1,), (1,)): -1})
    D = 8
    P = pi_matrix(f, D) @ pi_matrix(g, D)
    AB = pi_matrix(wick_star(f, g), D)
    size = len(basis(1, D))
    for j in P.interior():
        for i in range(size):
            assert sc.is_zero(P.mono[i][j] - AB.mono[i][j])


def test_pi_of_z_is_annihilation():
    # Fock vectors are antiholomorphic, so pi(z) = 2 hbar d/dzbar lowers the degree
    z = coordinate(0, 1, None, 0.5, exact=False)
    A = pi_matrix(z, 6)
    ops = ladder_ops(1, 0.5, 6)
    idx = A.interior()
    assert np.allclose(A.matrix[:, idx], ops.a[0].matrix[:, idx])
    assert A.matrix[0, 1] == pytest.approx(1.0)


def test_coherent_state_normalized_and_expectation():
    w = 0.6 - 0.3j
    psi = coherent_vector(HeisenbergElement((w,), 0.0), 0.5, 30)
    assert psi.norm2() == pytest.approx(1.0, abs=1e-12)
    f = jet_from_polynomial(1, None, 0.5, {((2,), (0,)): 1.0, ((1,), (1,)): -2.0, ((0,), (0,)): 0.5})
    want = jet_evaluate(f, [w], 2, 2).value
    assert complex(expectation(f, psi)) == pytest.approx(want, abs=1e-10)


def test_prefactor_exponents():
    g = HeisenbergElement((0.5 + 0.2j,), 0.3)
    coh = coherent_prefactor_report(g, 0.5)
    uni = unitary_prefactor_report(g, 0.5)
    assert coh.pipeline_exponent == pytest.approx(-0.25, abs=1e-9)
    assert uni.pipeline_exponent == pytest.approx(-0.25, abs=1e-9)
    assert not coh.matches_printed and not uni.matches_printed


def test_unitary_matrix_is_isometric_on_interior():
    U = unitary_U_matrix(HeisenbergElement((0.4 + 0.1j,), 0.2), 0.5, 30)
    idx = list(range(8))
    M = U.matrix[:, idx]
    assert np.allclose(M.conj().T @ M, np.eye(len(idx)), atol=1e-9)


def test_covariance():
    f = coordinate(0, 1, None, 0.5, exact=False)
    rep = covariance_check(f, HeisenbergElement((1.0 + 0j,), 0.3), 25)
    assert rep.deviation < 1e-6


def test_series_traces_converge():
    for trace in (uw_series([0.5 + 0.2j], 0.5, 20), expQ_series([0.3], 0.5, 20), expP_series([0.4], 0.5, 20)):
        assert trace.errors[-1] < 1e-12
        assert trace.errors[-1] <= trace.errors[5]


def test_expectation_sweep_csv():
    rows = expectation_sweep(coordinate(0, 1, None, 0.5, exact=False), [0.5, 1j], 0.5, 20)
    text = sweep_to_csv(rows)
    assert text.splitlines()[0] == "re_w,im_w,re_val,im_val"
    assert text.splitlines()[1] == "0.5,0,0.5,0"
    assert sweep_to_csv([]) == "re_w,im_w,re_val,im_val\n"
