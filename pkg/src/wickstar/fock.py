"""Bargmann-Fock side: vectors, the representation pi, ladder operators,
Heisenberg unitaries and coherent states, all truncated at total degree D.

Vectors are anti-holomorphic polynomials psi = sum_R c_R zbar^R. The
orthonormal basis is e_R = zbar^R / nu_R with nu_R = sqrt((2hbar)^|R| R!),
so the orthonormal components are phi_R = nu_R c_R. Internally the
monomial coefficients c_R are kept; they stay rational in exact mode,
where nu_R usually is not.

A truncated operator matrix is only trustworthy on columns whose image
stays inside the truncation. ``interior_margin`` d records that: columns
|K| <= D - d are exact (polynomials) or carry only the truncation tail.
"""

from __future__ import annotations

import cmath
import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from . import scalars as sc
from .jet import Jet, TruncationError, coordinate
from .multiindex import DimensionError, mi_enumerate, multi_factorial
from .wick import HeisenbergElement, unitary_u


def basis(n: int, D: int) -> list:
    """Index set {R : |R| <= D} in the package's degree-then-lex order."""
    return [tuple(R) for R in mi_enumerate(n, D)]


def _hbar_value(hbar, exact: bool):
    return sc.to_real_fraction(hbar) if exact else float(hbar)


def nu_squared(R: Sequence[int], hbar) -> object:
    """(2hbar)^|R| R!; exact when hbar is a Fraction."""
    return (2 * hbar) ** sum(R) * multi_factorial(tuple(R))


def nu(R: Sequence[int], hbar: float) -> float:
    return math.sqrt(float(nu_squared(R, float(hbar))))


@dataclass
class FockVector:
    n: int
    hbar: object
    D: int
    coeffs: list  # monomial coefficients c_R in ``basis(n, D)`` order
    exact: bool = False

    def __post_init__(self):
        if len(self.coeffs) != len(basis(self.n, self.D)):
            raise DimensionError("coefficient count does not match the basis")

    @property
    def basis(self) -> list:
        return basis(self.n, self.D)

    @property
    def components(self) -> np.ndarray:
        """Orthonormal components phi_R = nu_R c_R (binary64)."""
        h = float(self.hbar)
        return np.array([nu(R, h) * sc.to_complex(c) for R, c in zip(self.basis, self.coeffs)], dtype=complex)

    @classmethod
    def from_components(cls, n, hbar, D, phi: Sequence[complex]) -> "FockVector":
        h = float(hbar)
        return cls(n, h, D, [complex(x) / nu(R, h) for R, x in zip(basis(n, D), phi)], exact=False)

    @classmethod
    def basis_vector(cls, n, hbar, D, R: Sequence[int], exact: bool = False) -> "FockVector":
        """e_R; exact mode only for R = 0 (nu_R is irrational in general)."""
        idx = basis(n, D).index(tuple(R))
        if exact:
            if any(R):
                raise ValueError("e_R with R != 0 is not exactly representable")
            coeffs = [sc.zero(True)] * len(basis(n, D))
            coeffs[idx] = sc.one(True)
            return cls(n, _hbar_value(hbar, True), D, coeffs, True)
        phi = np.zeros(len(basis(n, D)), dtype=complex)
        phi[idx] = 1
        return cls.from_components(n, hbar, D, phi)

    def norm2(self):
        return bf_inner(self, self)

    def to_dict(self) -> dict:
        return {"n": self.n, "hbar": float(self.hbar), "D": self.D,
                "basis": [list(R) for R in self.basis],
                "components": [[x.real, x.imag] for x in self.components]}


def _check_same(a, b) -> None:
    if a.n != b.n or a.D != b.D:
        raise DimensionError(f"cutoff mismatch: (n={a.n}, D={a.D}) vs (n={b.n}, D={b.D})")
    if float(a.hbar) != float(b.hbar):
        raise ValueError("hbar mismatch")


def bf_inner(phi: FockVector, psi: FockVector):
    """sum_R conj(phi_R) psi_R, computed as sum_R nu_R^2 conj(c_R) d_R (exact-safe)."""
    _check_same(phi, psi)
    exact = phi.exact and psi.exact
    h = _hbar_value(phi.hbar, exact)
    acc = sc.zero(exact)
    for R, c, d in zip(phi.basis, phi.coeffs, psi.coeffs):
        if exact:
            acc = acc + sc.conj(c) * d * sc.exact(nu_squared(R, h))
        else:
            acc += sc.to_complex(c).conjugate() * sc.to_complex(d) * float(nu_squared(R, h))
    return acc


def psi_projection(f: Jet, D: int) -> FockVector:
    """Psi_f = sum_J a_{0,J}/J! zbar^J (the zbar-Taylor part of f at 0)."""
    if any(not sc.is_zero(x) for x in f.p):
        raise ValueError("psi_projection needs base point 0; translate first")
    z0 = (0,) * f.n
    coeffs = []
    for J in basis(f.n, D):
        a = f.coefficient(z0, J)
        coeffs.append(sc.scale(a, Fraction(1, multi_factorial(J))) if f.exact else sc.to_complex(a) / multi_factorial(J))
    return FockVector(f.n, f.hbar, D, coeffs, f.exact)


@dataclass
class FockOperator:
    """Truncated matrix of an operator on the Fock space.

    ``matrix[L, K] = <e_L, A e_K>`` in the orthonormal basis. Exact
    operators also carry ``mono``, the matrix in the monomial basis
    zbar^K, whose entries are Gaussian rationals.
    """

    n: int
    hbar: object
    D: int
    interior_margin: int
    matrix: Optional[np.ndarray] = None
    mono: Optional[list] = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.matrix is None and self.mono is None:
            raise ValueError("operator needs a matrix")
        if self.matrix is None:
            self.matrix = self._orthonormal_from_mono()

    @property
    def exact(self) -> bool:
        return self.mono is not None

    @property
    def basis(self) -> list:
        return basis(self.n, self.D)

    def _orthonormal_from_mono(self) -> np.ndarray:
        b = self.basis
        h = float(self.hbar)
        nus = [nu(R, h) for R in b]
        M = np.zeros((len(b), len(b)), dtype=complex)
        for i in range(len(b)):
            for j in range(len(b)):
                v = self.mono[i][j]
                if not sc.is_zero(v):
                    M[i, j] = sc.to_complex(v) * nus[i] / nus[j]
        return M

    def interior(self, extra: int = 0) -> list:
        """Positions of basis indices with |K| <= D - margin - extra."""
        top = self.D - self.interior_margin - extra
        return [i for i, R in enumerate(self.basis) if sum(R) <= top]

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            return self.apply(other)
        _check_same(self, other)
        mono = None
        if self.exact and other.exact:
            mono = _exact_matmul(self.mono, other.mono)
        return FockOperator(self.n, self.hbar, self.D, self.interior_margin + other.interior_margin,
                            None if mono is not None else self.matrix @ other.matrix, mono)

    def __add__(self, other: "FockOperator") -> "FockOperator":
        _check_same(self, other)
        mono = None
        if self.exact and other.exact:
            mono = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.mono, other.mono)]
        return FockOperator(self.n, self.hbar, self.D, max(self.interior_margin, other.interior_margin),
                            None if mono is not None else self.matrix + other.matrix, mono)

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return self + other.scaled(-1)

    def scaled(self, c) -> "FockOperator":
        if self.exact and (isinstance(c, (int, Fraction)) or sc.is_gaussian(c)):
            k = sc.exact(c)
            return FockOperator(self.n, self.hbar, self.D, self.interior_margin,
                                mono=[[k * v for v in row] for row in self.mono])
        return FockOperator(self.n, self.hbar, self.D, self.interior_margin, complex(c) * self.matrix)

    def adjoint(self) -> "FockOperator":
        """Conjugate transpose of the orthonormal matrix (valid on interior blocks)."""
        return FockOperator(self.n, self.hbar, self.D, self.interior_margin, self.matrix.conj().T)

    def apply(self, psi: FockVector) -> FockVector:
        _check_same(self, psi)
        if self.exact and psi.exact:
            coeffs = []
            for row in self.mono:
                acc = sc.zero(True)
                for v, c in zip(row, psi.coeffs):
                    acc = acc + v * c
                coeffs.append(acc)
            return FockVector(self.n, psi.hbar, self.D, coeffs, True)
        return FockVector.from_components(self.n, self.hbar, self.D, self.matrix @ psi.components)

    def block(self, rows: Optional[Sequence[int]] = None, cols: Optional[Sequence[int]] = None) -> np.ndarray:
        rows = range(len(self.basis)) if rows is None else rows
        cols = self.interior() if cols is None else cols
        return self.matrix[np.ix_(list(rows), list(cols))]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "hbar": float(self.hbar),
            "D": self.D,
            "interior_margin": self.interior_margin,
            "basis": [list(R) for R in self.basis],
            "matrix": [[[x.real, x.imag] for x in row] for row in self.matrix],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _exact_matmul(A: list, B: list) -> list:
    size = len(A)
    out = [[sc.zero(True)] * size for _ in range(size)]
    for i in range(size):
        row = A[i]
        nz = [(k, v) for k, v in enumerate(row) if not sc.is_zero(v)]
        for j in range(size):
            acc = sc.zero(True)
            for k, v in nz:
                w = B[k][j]
                if not sc.is_zero(w):
                    acc = acc + v * w
            out[i][j] = acc
    return out


def pi_matrix(f: Jet, D: int, interior_margin: Optional[int] = None) -> FockOperator:
    """Matrix of pi(f) on {e_K : |K| <= D}.

    pi(f) zbar^K = sum_{I<=K} (2hbar)^|I|/I! K!/(K-I)! sum_J a_{I,J}/J! zbar^(J+K-I).
    For polynomial f the margin is deg_zbar(f); otherwise it defaults to D // 2.
    """
    if any(not sc.is_zero(x) for x in f.p):
        raise ValueError("pi_matrix needs base point 0; translate first")
    n = f.n
    b = basis(n, D)
    pos = {R: i for i, R in enumerate(b)}
    if f.available_degree() < 2 * D:
        raise TruncationError(f"pi_matrix at D={D} needs coefficients to degree {2 * D}", degree=2 * D)
    if interior_margin is None:
        degs = f.degrees()
        interior_margin = degs[1] if f.is_polynomial and degs is not None else D // 2
    exact = f.exact
    h = _hbar_value(f.hbar, exact)
    size = len(b)
    if exact:
        mono = [[sc.zero(True)] * size for _ in range(size)]
    else:
        M = np.zeros((size, size), dtype=complex)
        nus = [nu(R, h) for R in b]
    coeff_cache: dict = {}

    def coef(I, J):
        key = (I, J)
        if key not in coeff_cache:
            coeff_cache[key] = f.coefficient(I, J)
        return coeff_cache[key]

    for k, K in enumerate(b):
        for I in b:
            if any(i > kk for i, kk in zip(I, K)):
                continue
            KI = tuple(kk - i for kk, i in zip(K, I))
            w_exact = Fraction((2 * h) ** sum(I)) if exact else None
            weight = (2 * h) ** sum(I) * multi_factorial(K) / (multi_factorial(I) * multi_factorial(KI)) \
                if not exact else w_exact * Fraction(multi_factorial(K), multi_factorial(I) * multi_factorial(KI))
            for J in b:
                if sum(J) + sum(KI) > D:
                    break
                L = tuple(j + x for j, x in zip(J, KI))
                a = coef(I, J)
                if sc.is_zero(a):
                    continue
                if exact:
                    mono[pos[L]][k] = mono[pos[L]][k] + sc.scale(a, weight / multi_factorial(J))
                else:
                    M[pos[L], k] += sc.to_complex(a) * weight / multi_factorial(J) * nus[pos[L]] / nus[k]
    if exact:
        return FockOperator(n, h, D, interior_margin, mono=mono)
    return FockOperator(n, h, D, interior_margin, M)


@dataclass
class LadderOps:
    a: list
    adag: list
    Q: list
    P: list


def ladder_ops(n: int, hbar, D: int) -> LadderOps:
    """a_i = pi(z^i) = 2hbar d/dzbar^i, a_i^dag = pi(zbar^i), Q = (a + a^dag)/2, P = (a - a^dag)/2i."""
    if D < 1:
        raise ValueError("D must be >= 1")
    h = float(hbar)
    a = [pi_matrix(coordinate(k, n, None, h, exact=False), D) for k in range(n)]
    ad = [pi_matrix(coordinate(k, n, None, h, exact=False, bar=True), D) for k in range(n)]
    Q = [(x + y).scaled(0.5) for x, y in zip(a, ad)]
    P = [(x - y).scaled(1 / 2j) for x, y in zip(a, ad)]
    return LadderOps(a, ad, Q, P)


def identity_operator(n: int, hbar, D: int) -> FockOperator:
    size = len(basis(n, D))
    return FockOperator(n, float(hbar), D, 0, np.eye(size, dtype=complex))


# --------------------------------------------------------------------------
# Heisenberg group on the Fock space


def unitary_U_matrix(g: HeisenbergElement, hbar, D: int, interior_margin: Optional[int] = None) -> FockOperator:
    """U_(w,c) = pi(u_(w,c)), truncated; the margin defaults to D // 2."""
    u = unitary_u(g, hbar)
    return pi_matrix(u, D, D // 2 if interior_margin is None else interior_margin)


def coherent_vector(g: HeisenbergElement, hbar, D: int) -> FockVector:
    """psi_(w,c) = U_(w,c)^(-1) psi_1, with U^(-1) = pi(u_(g^(-1)))."""
    U_inv = unitary_U_matrix(g.inverse(), hbar, D)
    return U_inv.apply(FockVector.basis_vector(g.n, hbar, D, (0,) * g.n))


@dataclass
class PrefactorReport:
    """Exponent k in exp(k |w|^2 / hbar) measured from the pipeline vs a printed value."""

    pipeline_exponent: float
    printed_exponent: float
    phase_deviation: float

    @property
    def matches_printed(self) -> bool:
        return abs(self.pipeline_exponent - self.printed_exponent) < 1e-9

    def to_dict(self) -> dict:
        return {"pipeline_exponent": self.pipeline_exponent, "printed_exponent": self.printed_exponent,
                "matches_printed": self.matches_printed, "phase_deviation": self.phase_deviation}


def coherent_prefactor_report(g: HeisenbergElement, hbar, D: int = 25) -> PrefactorReport:
    """Compare psi_(w,c)(0) with exp(i c / 2hbar + k |w|^2 / hbar), printed k = +1/4."""
    psi = coherent_vector(g, hbar, D)
    c0 = complex(psi.coeffs[0])
    w2 = sum(abs(complex(x)) ** 2 for x in g.w)
    h = float(hbar)
    if w2 == 0:
        raise ValueError("the prefactor exponent needs w != 0")
    k = math.log(abs(c0)) * h / w2
    phase = abs(cmath.phase(c0) - cmath.phase(cmath.exp(1j * float(g.c) / (2 * h))))
    return PrefactorReport(k, 0.25, min(phase, 2 * math.pi - phase))


def unitary_prefactor_report(g: HeisenbergElement, hbar, D: int = 25) -> PrefactorReport:
    """Compare (U_(w,c) 1)(0) with exp(-i c / 2hbar + k |w|^2 / hbar), printed k = -1/2."""
    U = unitary_U_matrix(g, hbar, D)
    v = U.apply(FockVector.basis_vector(g.n, hbar, D, (0,) * g.n))
    c0 = complex(v.coeffs[0])
    w2 = sum(abs(complex(x)) ** 2 for x in g.w)
    h = float(hbar)
    if w2 == 0:
        raise ValueError("the prefactor exponent needs w != 0")
    k = math.log(abs(c0)) * h / w2
    phase = abs(cmath.phase(c0) - cmath.phase(cmath.exp(-1j * float(g.c) / (2 * h))))
    return PrefactorReport(k, -0.5, min(phase, 2 * math.pi - phase))


def expectation(f: Jet, psi: FockVector):
    """<psi, pi(f) psi>."""
    if f.n != psi.n:
        raise DimensionError("dimension mismatch")
    A = pi_matrix(f, psi.D)
    return bf_inner(psi, A.apply(psi))


@dataclass
class CovarianceReport:
    deviation: float
    deviation_w_only: float
    interior: int
    D: int

    def to_dict(self) -> dict:
        return {"deviation": self.deviation, "deviation_w_only": self.deviation_w_only,
                "interior": self.interior, "D": self.D}


def covariance_check(f: Jet, g: HeisenbergElement, D: int = 25, interior: Optional[int] = None) -> CovarianceReport:
    """Max deviation of pi(u f u^-1) from U pi(f) U^-1 on the block |L|, |K| <= interior.

    Also reports the same with (w, 0) in place of (w, c); the central
    phase cancels in both.
    """
    from .wick import adjoint_translation

    if not f.is_polynomial:
        raise ValueError("covariance_check expects a polynomial jet")
    h = float(f.hbar)
    # the truncated product U pi(f) U^-1 leaks past degree D fast; a third
    # of the cutoff keeps the tail far below 1e-6 for |w| <= 1, hbar = 1/2
    top = D // 3 if interior is None else interior
    # u f u^-1 of a polynomial is the translated polynomial, of the same degree
    moved = adjoint_translation(f, g.w)
    moved = moved.like(coeffs=moved.coeffs, degree=moved.degree, polynomial=True)
    lhs = pi_matrix(moved, D)
    pf = pi_matrix(f, D)
    idx = [i for i, R in enumerate(basis(f.n, D)) if sum(R) <= top]

    def dev(el: HeisenbergElement) -> float:
        U = unitary_U_matrix(el, h, D)
        Uinv = unitary_U_matrix(el.inverse(), h, D)
        rhs = U.matrix @ pf.matrix @ Uinv.matrix
        diff = lhs.matrix[np.ix_(idx, idx)] - rhs[np.ix_(idx, idx)]
        return float(np.max(np.abs(diff))) if diff.size else 0.0

    return CovarianceReport(dev(g), dev(HeisenbergElement(g.w, 0.0)), top, D)


# --------------------------------------------------------------------------
# exponential series acting on vectors


@dataclass
class SeriesTrace:
    partial_sums: list
    errors: list  # vector-norm distance to the reference on the inspected block
    reference: np.ndarray


def exp_series(A: FockOperator, psi: FockVector, r_max: int, reference: np.ndarray,
               block: Optional[int] = None) -> SeriesTrace:
    """Partial sums of sum_r A^r psi / r!, compared with a reference vector."""
    top = A.D // 2 if block is None else block
    idx = [i for i, R in enumerate(A.basis) if sum(R) <= top]
    term = psi.components.copy()
    total = term.copy()
    sums, errs = [total.copy()], [float(np.linalg.norm((total - reference)[idx]))]
    for r in range(1, r_max + 1):
        term = A.matrix @ term / r
        total = total + term
        sums.append(total.copy())
        errs.append(float(np.linalg.norm((total - reference)[idx])))
    return SeriesTrace(sums, errs, reference)


def generator_operator(w: Sequence[complex], hbar, D: int) -> FockOperator:
    """(1/2hbar) sum_i (conj(w_i) a_i - w_i a_i^dag)."""
    h = float(hbar)
    ops = ladder_ops(len(w), h, D)
    out = None
    for wi, a, ad in zip(w, ops.a, ops.adag):
        wi = complex(wi)
        part = a.scaled(wi.conjugate() / (2 * h)) - ad.scaled(wi / (2 * h))
        out = part if out is None else out + part
    return out


def uw_series(w: Sequence[complex], hbar, D: int, psi: Optional[FockVector] = None, r_max: int = 40) -> SeriesTrace:
    """exp((1/2hbar) sum (conj(w) a - w a^dag)) psi against U_w psi."""
    n = len(w)
    psi = psi or FockVector.basis_vector(n, hbar, D, (0,) * n)
    U = unitary_U_matrix(HeisenbergElement(tuple(complex(x) for x in w), 0.0), hbar, D)
    return exp_series(generator_operator(w, hbar, D), psi, r_max, U.matrix @ psi.components)


def expQ_series(p: Sequence[float], hbar, D: int, psi: Optional[FockVector] = None, r_max: int = 40) -> SeriesTrace:
    """exp(i p.Q / hbar) psi, which equals U_w psi with w = -i p."""
    return uw_series([-1j * float(x) for x in p], hbar, D, psi, r_max)


def expP_series(q: Sequence[float], hbar, D: int, psi: Optional[FockVector] = None, r_max: int = 40) -> SeriesTrace:
    """exp(i q.P / hbar) psi, which equals U_w psi with w = q."""
    return uw_series([complex(float(x)) for x in q], hbar, D, psi, r_max)


def expectation_sweep(f: Jet, points: Iterable[complex], hbar, D: int = 30) -> list:
    """(w, <psi_w, pi(f) psi_w>) for one-dimensional points w."""
    out = []
    for w in points:
        psi = coherent_vector(HeisenbergElement((complex(w),), 0.0), hbar, D)
        out.append((complex(w), complex(expectation(f, psi))))
    return out


def sweep_to_csv(rows: list) -> str:
    from .seminorm import fmt_float

    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["re_w", "im_w", "re_val", "im_val"])
    for w, v in rows:
        wr.writerow([fmt_float(w.real), fmt_float(w.imag), fmt_float(v.real), fmt_float(v.imag)])
    return buf.getvalue()
