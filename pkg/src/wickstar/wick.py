"""The Wick star product and the Heisenberg-group machinery built on it.

    f *_alpha g = sum_N (2 alpha)^|N| / N!  d_z^N f * d_zbar^N g

The parameter ``alpha`` is passed explicitly and is independent of the
``hbar`` stored on the jets (which only matters for seminorms and the Fock
side). For polynomial factors the series terminates and the product is
exact; otherwise it is cut at ``N_cut`` and the result carries a status.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import scalars as sc
from .jet import (
    ExponentialProvider,
    Jet,
    TruncationError,
    _check_frame,
    _deg,
    _leibniz,
    constant,
    exponential,
    jet_from_dict,
    jet_linear,
    jet_materialize,
    jet_pointwise_mul,
    jet_sum,
    jet_to_dict,
    pairs_up_to,
)
from .multiindex import DimensionError, mi_enumerate, multi_factorial

SHELL_RTOL = 1e-13


# --------------------------------------------------------------------------
# star product


def _coeff_table(f: Jet, D: int) -> dict:
    """All coefficients of total degree <= D, or TruncationError."""
    if f.coeffs is not None:
        if not f.polynomial and D > f.degree:
            raise TruncationError(
                f"star product needs coefficients up to degree {D}, table stops at {f.degree}", degree=D
            )
        return {k: v for k, v in f.coeffs.items() if _deg(k[0]) + _deg(k[1]) <= D}
    return jet_materialize(f, D).coeffs


def _shift(table: dict, N: tuple, holomorphic: bool, D: int) -> dict:
    """Coefficients of d^N f (in z or zbar), restricted to degree <= D."""
    out = {}
    for (I, J), v in table.items():
        K = I if holomorphic else J
        if all(k >= m for k, m in zip(K, N)):
            K2 = tuple(k - m for k, m in zip(K, N))
            key = (K2, J) if holomorphic else (I, K2)
            if _deg(key[0]) + _deg(key[1]) <= D:
                out[key] = v
    return out


def _shifted(f: Jet, table: Optional[dict], N: tuple, holomorphic: bool, D: int) -> dict:
    """d^N f restricted to degree <= D; providers are queried only where needed."""
    if table is not None:
        return _shift(table, N, holomorphic, D)
    out = {}
    for I, J in pairs_up_to(f.n, D):
        key = (tuple(i + m for i, m in zip(I, N)), J) if holomorphic else (I, tuple(j + m for j, m in zip(J, N)))
        v = f.coefficient(*key)
        if not sc.is_zero(v):
            out[(I, J)] = v
    return out


def _dense(table: dict, n: int, D: int) -> np.ndarray:
    """Monomial coefficients a / (I! J!) on the box [0, D]^(2n)."""
    arr = np.zeros((D + 1,) * (2 * n), dtype=complex)
    for (I, J), v in table.items():
        arr[I + J] = sc.to_complex(v) / (multi_factorial(I) * multi_factorial(J))
    return arr


def _degree_mask(n: int, D: int) -> np.ndarray:
    return sum(np.indices((D + 1,) * (2 * n))) <= D


def _factorial_grid(n: int, D: int) -> np.ndarray:
    fact = np.array([math.factorial(k) for k in range(D + 1)], dtype=float)
    out = np.ones((D + 1,) * (2 * n))
    for ax in range(2 * n):
        shape = [1] * (2 * n)
        shape[ax] = D + 1
        out = out * fact.reshape(shape)
    return out


def _shifted_dense(f: Jet, table: Optional[dict], N: tuple, holomorphic: bool, D: int,
                   mask: np.ndarray, fact: np.ndarray) -> np.ndarray:
    """Monomial coefficients of d^N f (z or zbar) on the degree-D box."""
    n = f.n
    if table is not None:
        arr = _dense(_shift(table, N, holomorphic, D), n, D)
    else:
        if holomorphic:
            src = f.array(tuple(D + k for k in N), (D,) * n)
            arr = src[tuple(slice(k, None) for k in N) + (slice(None),) * n]
        else:
            src = f.array((D,) * n, tuple(D + k for k in N))
            arr = src[(slice(None),) * n + tuple(slice(k, None) for k in N)]
        arr = np.where(mask, arr, 0) / fact
    return arr


@lru_cache(maxsize=None)
def _product_pairs(n: int, D: int) -> tuple:
    """Flat positions of the degree <= D box and the (i, j, k) triples with idx_i + idx_j = idx_k."""
    shape = (D + 1,) * (2 * n)
    pos = [idx for idx in np.ndindex(*shape) if sum(idx) <= D]
    where = {idx: k for k, idx in enumerate(pos)}
    ii, jj, kk = [], [], []
    for i, A in enumerate(pos):
        for j, B in enumerate(pos):
            C = tuple(x + y for x, y in zip(A, B))
            k = where.get(C)
            if k is not None:
                ii.append(i)
                jj.append(j)
                kk.append(k)
    flat = np.ravel_multi_index(tuple(np.array(pos).T), shape)
    return flat, np.array(ii), np.array(jj), np.array(kk)


def _contract(F: np.ndarray, G: np.ndarray, weights: np.ndarray, n: int, D: int) -> np.ndarray:
    """sum_N w_N F_N G_N as truncated series products, returned on the dense box."""
    flat, ii, jj, kk = _product_pairs(n, D)
    M = F.T @ (weights[:, None] * G)
    vals = M[ii, jj]
    acc = np.bincount(kk, weights=vals.real, minlength=len(flat)) + 1j * np.bincount(
        kk, weights=vals.imag, minlength=len(flat))
    out = np.zeros((D + 1,) * (2 * n), dtype=complex)
    out.flat[flat] = acc
    return out


def default_ncut(f: Jet, g: Jet) -> Optional[int]:
    """Terminating cutoff when one factor is polynomial in the relevant slot."""
    cands = []
    df, dg = f.degrees(), g.degrees()
    if df is not None:
        cands.append(df[0])
    if dg is not None:
        cands.append(dg[1])
    return min(cands) if cands else None


def wick_star(f: Jet, g: Jet, alpha=None, D_out: Optional[int] = None, N_cut: Optional[int] = None) -> Jet:
    """Jet of ``f *_alpha g`` up to total degree ``D_out``.

    ``alpha`` defaults to the jets' hbar. The sum over N runs to ``N_cut``;
    without it the terminating bound ``min(deg_z f, deg_zbar g)`` is used,
    which makes the product exact for polynomial input.
    """
    _check_frame(f, g)
    exact = f.exact and g.exact
    if alpha is None:
        alpha = f.hbar
    a = sc.coerce(alpha, exact)
    term_cut = default_ncut(f, g)
    if N_cut is None:
        if term_cut is None:
            raise ValueError("N_cut is required when neither factor is polynomial")
        N_cut = term_cut
    if N_cut < 0:
        raise ValueError("N_cut must be >= 0")
    if D_out is None:
        if not (f.is_polynomial and g.is_polynomial):
            raise ValueError("D_out is required unless both factors are polynomials")
        D_out = f.degree + g.degree
    terminates = term_cut is not None and N_cut >= term_cut
    fd = _coeff_table(f, D_out + N_cut) if f.coeffs is not None else None
    gd = _coeff_table(g, D_out + N_cut) if g.coeffs is not None else None
    two_a = a * 2
    out: dict = {}
    shell: dict = {}
    if not exact:
        return _wick_star_float(f, g, complex(a), D_out, N_cut, fd, gd, terminates)
    for N in mi_enumerate(f.n, N_cut):
        N = tuple(N)
        fn = _shifted(f, fd, N, True, D_out)
        if not fn:
            continue
        gn = _shifted(g, gd, N, False, D_out)
        if not gn:
            continue
        k = multi_factorial(N)
        w = two_a ** sum(N)
        w = w * sc.exact(Fraction(1, k)) if exact else w / k
        if sc.is_zero(w):
            continue
        prod = _leibniz(fn, gn, D_out, exact)
        last = sum(N) == N_cut and not terminates
        for key, v in prod.items():
            v = v * w
            out[key] = out[key] + v if key in out else v
            if last:
                shell[key] = shell[key] + v if key in shell else v
    poly = f.is_polynomial and g.is_polynomial and terminates and D_out >= f.degree + g.degree
    status, diag = "exact", {"N_cut": N_cut}
    if not terminates:
        size = max((abs(sc.to_complex(v)) for v in out.values()), default=0.0)
        tail = max((abs(sc.to_complex(v)) for v in shell.values()), default=0.0)
        diag["last_shell"] = tail
        status = "converged" if tail <= SHELL_RTOL * max(1.0, size) else "inconclusive"
    if f.status == "inconclusive" or g.status == "inconclusive":
        status = "inconclusive"
    return f.like(exact=exact, coeffs=out, degree=D_out, polynomial=poly, status=status, diagnostics=diag)


def _wick_star_float(f, g, a, D_out, N_cut, fd, gd, terminates) -> Jet:
    n = f.n
    mask = _degree_mask(n, D_out)
    fact = _factorial_grid(n, D_out)
    flat = _product_pairs(n, D_out)[0]
    rows_f, rows_g, weights, last = [], [], [], []
    for N in mi_enumerate(n, N_cut):
        N = tuple(N)
        w = (2 * a) ** sum(N) / multi_factorial(N)
        if w == 0:
            continue
        fn = _shifted_dense(f, fd, N, True, D_out, mask, fact)
        if not fn.any():
            continue
        gn = _shifted_dense(g, gd, N, False, D_out, mask, fact)
        if not gn.any():
            continue
        rows_f.append(fn.ravel()[flat])
        rows_g.append(gn.ravel()[flat])
        weights.append(w)
        last.append(sum(N) == N_cut and not terminates)
    if rows_f:
        F, G, W = np.array(rows_f), np.array(rows_g), np.array(weights, dtype=complex)
        total = _contract(F, G, W, n, D_out)
        sel = np.array(last)
        shell = _contract(F[sel], G[sel], W[sel], n, D_out) if sel.any() else np.zeros_like(total)
    else:
        total = np.zeros((D_out + 1,) * (2 * n), dtype=complex)
        shell = np.zeros_like(total)
    vals = total * fact
    out = {}
    for idx in zip(*np.nonzero(mask & (vals != 0))):
        out[(tuple(int(i) for i in idx[:n]), tuple(int(j) for j in idx[n:]))] = complex(vals[idx])
    poly = f.is_polynomial and g.is_polynomial and terminates and D_out >= f.degree + g.degree
    status, diag = "exact", {"N_cut": N_cut}
    if not terminates:
        size = float(np.max(np.abs(vals[mask]), initial=0.0))
        tail = float(np.max(np.abs((shell * fact)[mask]), initial=0.0))
        diag["last_shell"] = tail
        status = "converged" if tail <= SHELL_RTOL * max(1.0, size) else "inconclusive"
    if f.status == "inconclusive" or g.status == "inconclusive":
        status = "inconclusive"
    return f.like(exact=False, coeffs=out, degree=D_out, polynomial=poly, status=status, diagnostics=diag)


@dataclass
class GradedJet:
    """Components C_r(f, g) of the formal product sum_r lambda^r C_r."""

    components: list

    def __getitem__(self, r: int) -> Jet:
        return self.components[r]

    def __len__(self) -> int:
        return len(self.components)

    def to_list(self) -> list:
        return [dict(jet_to_dict(c), lambda_power=r) for r, c in enumerate(self.components)]

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_list(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "GradedJet":
        rows = sorted(json.loads(text), key=lambda d: d["lambda_power"])
        return cls([jet_from_dict(r) for r in rows])


def wick_star_graded(f: Jet, g: Jet, r_max: int, D_out: Optional[int] = None) -> GradedJet:
    """C_r(f, g) = sum_{|N|=r} 2^r / N! (d_z^N f)(d_zbar^N g) for r = 0..r_max."""
    _check_frame(f, g)
    exact = f.exact and g.exact
    if D_out is None:
        if not (f.is_polynomial and g.is_polynomial):
            raise ValueError("D_out is required unless both factors are polynomials")
        D_out = f.degree + g.degree
    fd = _coeff_table(f, D_out + r_max)
    gd = _coeff_table(g, D_out + r_max)
    comps = []
    for r in range(r_max + 1):
        acc: dict = {}
        for N in mi_enumerate(f.n, r):
            if sum(N) != r:
                continue
            N = tuple(N)
            k = multi_factorial(N)
            w = sc.exact(Fraction(2**r, k)) if exact else 2.0**r / k
            prod = _leibniz(_shift(fd, N, True, D_out), _shift(gd, N, False, D_out), D_out, exact)
            for key, v in prod.items():
                v = v * w
                acc[key] = acc[key] + v if key in acc else v
        poly = f.is_polynomial and g.is_polynomial and D_out >= f.degree + g.degree
        comps.append(f.like(exact=exact, coeffs=acc, degree=D_out, polynomial=poly))
    return GradedJet(comps)


# --------------------------------------------------------------------------
# Heisenberg group


@dataclass(frozen=True)
class HeisenbergElement:
    """(w, c) in C^n x R with (w,c)(w',c') = (w+w', c+c'+Im(conj(w).w'))."""

    w: tuple
    c: object = 0

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(self.w))
        if len(self.w) == 0:
            raise DimensionError("w must have n >= 1 entries")

    @property
    def n(self) -> int:
        return len(self.w)

    @property
    def exact(self) -> bool:
        return all(sc.is_gaussian(x) for x in self.w) and not isinstance(self.c, float)

    @classmethod
    def identity(cls, n: int, exact: bool = False) -> "HeisenbergElement":
        z = sc.zero(exact)
        return cls((z,) * n, Fraction(0) if exact else 0.0)

    def inverse(self) -> "HeisenbergElement":
        return HeisenbergElement(tuple(-x for x in self.w), -self.c)

    def __mul__(self, other: "HeisenbergElement") -> "HeisenbergElement":
        return heisenberg_mul(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HeisenbergElement) or self.n != other.n:
            return NotImplemented
        return all(sc.to_complex(a) == sc.to_complex(b) for a, b in zip(self.w, other.w)) and (
            sc.to_real_fraction(self.c) == sc.to_real_fraction(other.c)
            if self.exact and other.exact
            else float(self.c) == float(other.c)
        )

    __hash__ = object.__hash__

    def scaled(self, t) -> "HeisenbergElement":
        """(t w, t c): the one-parameter subgroup through (w, c)."""
        return HeisenbergElement(tuple(x * t for x in self.w), self.c * t)


def _symplectic(w, v):
    """Im(sum_k conj(w_k) v_k), exact for Gaussian rationals."""
    acc = None
    for a, b in zip(w, v):
        t = sc.conj(a) * b
        acc = t if acc is None else acc + t
    return sc.imag_part(acc)


def heisenberg_mul(g1: HeisenbergElement, g2: HeisenbergElement) -> HeisenbergElement:
    if g1.n != g2.n:
        raise DimensionError(f"dimension mismatch: {g1.n} vs {g2.n}")
    w = tuple(a + b for a, b in zip(g1.w, g2.w))
    if g1.exact and g2.exact:
        c = sc.to_real_fraction(g1.c) + sc.to_real_fraction(g2.c) + _symplectic(g1.w, g2.w)
    else:
        w1 = [sc.to_complex(x) for x in g1.w]
        w2 = [sc.to_complex(x) for x in g2.w]
        w = tuple(a + b for a, b in zip(w1, w2))
        c = float(g1.c) + float(g2.c) + _symplectic(w1, w2)
    return HeisenbergElement(w, c)


def unitary_u(g: HeisenbergElement, hbar, p=None) -> Jet:
    """u_(w,c) = exp(-i c / 2hbar) e_{conj(w)/2hbar, -w/2hbar} as a provider jet."""
    hbar = float(hbar)
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    w = [sc.to_complex(x) for x in g.w]
    abar = [x.conjugate() / (2 * hbar) for x in w]
    beta = [-x / (2 * hbar) for x in w]
    scale = cmath.exp(-1j * float(g.c) / (2 * hbar))
    return exponential(abar, beta, p, hbar, scale)


def generator_J(g: HeisenbergElement, hbar, p=None, exact: Optional[bool] = None) -> Jet:
    """Linear jet of J_(w,c) = -i c / 2hbar + (conj(w).z - w.zbar) / 2hbar."""
    if exact is None:
        exact = g.exact and not isinstance(hbar, float)
    n = g.n
    p = (0,) * n if p is None else tuple(p)
    h = sc.to_real_fraction(hbar) if exact else float(hbar)
    if h <= 0:
        raise ValueError("hbar must be positive")
    inv2h = sc.exact(Fraction(1, 1) / (2 * h)) if exact else 1.0 / (2 * h)
    w = [sc.coerce(x, exact) for x in g.w]
    pp = [sc.coerce(x, exact) for x in p]
    z0 = (0,) * n
    i = sc.imag_unit(exact)
    c = sc.coerce(g.c if not exact else sc.to_real_fraction(g.c), exact)
    val = -(i * c) * inv2h
    coeffs = {}
    for k in range(n):
        e = tuple(1 if j == k else 0 for j in range(n))
        coeffs[(e, z0)] = sc.conj(w[k]) * inv2h
        coeffs[(z0, e)] = -w[k] * inv2h
        val = val + (sc.conj(w[k]) * pp[k] - w[k] * sc.conj(pp[k])) * inv2h
    coeffs[(z0, z0)] = val
    return Jet.table(n, p, h, coeffs, degree=1, exact=exact)


def _one_like(f: Jet) -> Jet:
    return constant(1, f.n, f.p, f.hbar, exact=f.exact)


def star_power(f: Jet, k: int, alpha=None, D_out: Optional[int] = None, N_cut: Optional[int] = None) -> Jet:
    """f *...* f with k factors (left fold); k = 0 gives 1."""
    if k < 0:
        raise ValueError("k must be >= 0")
    acc = _one_like(f)
    for _ in range(k):
        acc = wick_star(acc, f, alpha, D_out, N_cut)
    return acc


def jw_power_closed_form(w: Sequence, k: int, hbar, p=None, exact: Optional[bool] = None) -> Jet:
    """sum_l k!/(l!(k-2l)!) (-|w|^2/4hbar)^l ((conj(w).z - w.zbar)/2hbar)^(k-2l)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    g = HeisenbergElement(tuple(w), 0)
    if exact is None:
        exact = g.exact and not isinstance(hbar, float)
    J = generator_J(g, hbar, p, exact=exact)
    h = J.hbar
    norm2 = sum((sc.abs2(x) if exact else abs(sc.to_complex(x)) ** 2) for x in g.w)
    q = sc.coerce(-Fraction(norm2) / (4 * h) if exact else -norm2 / (4 * h), exact)
    powers = [_one_like(J)]
    for _ in range(k):
        powers.append(jet_pointwise_mul(powers[-1], J))
    terms, weights = [], []
    for l in range(k // 2 + 1):
        coef = math.factorial(k) // (math.factorial(l) * math.factorial(k - 2 * l))
        terms.append(powers[k - 2 * l])
        weights.append(q**l * coef)
    return jet_sum(terms, weights)


def recursion_sign(w: Sequence, hbar, k_max: int = 6, p=None) -> Optional[int]:
    """Sign s with J^k = J J^(k-1) + s (k-1) |w|^2/2hbar J^(k-2) for all 2 <= k <= k_max.

    J^k are brute-force star powers of J_(w,0) and J J^(k-1) is the
    pointwise product; the test is exact when w and hbar are rational.
    Returns +1, -1, or None if neither sign fits.
    """
    g = HeisenbergElement(tuple(w), 0)
    J = generator_J(g, hbar, p)
    exact = J.exact
    h = J.hbar
    w2 = sum(sc.abs2(sc.coerce(x, exact)) for x in g.w)
    k0 = sc.exact(w2 / (2 * h)) if exact else w2 / (2 * h)
    powers = [star_power(J, k) for k in range(k_max + 1)]
    found = None
    for s in (1, -1):
        ok = True
        for k in range(2, k_max + 1):
            lin = jet_pointwise_mul(J, powers[k - 1])
            corr = sc.scale(k0, s * (k - 1)) if exact else k0 * s * (k - 1)
            rhs = jet_linear(sc.one(exact), lin, corr, powers[k - 2])
            if not jets_equal(powers[k], rhs, k) if exact else max_coeff_deviation(powers[k], rhs, k) > 1e-9:
                ok = False
                break
        if ok:
            found = s
    return found


@dataclass
class StarExpResult:
    jet: Jet
    deviation: float
    K: int
    degree: int


def star_exp_partial(g: HeisenbergElement, t: float, K: int, hbar, p=None, D_out: int = 4) -> StarExpResult:
    """sum_{k<K} t^k/k! J_g^{*k}, compared with u_(t w, t c) on |I|+|J| <= D_out."""
    if K < 1:
        raise ValueError("K must be >= 1")
    J = generator_J(g, float(hbar), p, exact=False)
    total = None
    power = _one_like(J)
    fact = 1.0
    for k in range(K):
        if k > 0:
            # the degree-D_out part of later terms only needs this much of J^{*k}
            power = wick_star(power, J, float(hbar), D_out=min(k, D_out + K - 1 - k))
            fact *= k
        term = jet_materialize(power, D_out)
        term = jet_linear(t**k / fact, term, 0, term)
        total = term if total is None else jet_linear(1, total, 1, term)
    target = jet_materialize(unitary_u(g.scaled(t), hbar, p), D_out)
    dev = 0.0
    for I, Jm in pairs_up_to(g.n, D_out):
        d = abs(sc.to_complex(total.coefficient(I, Jm)) - sc.to_complex(target.coefficient(I, Jm)))
        dev = max(dev, d)
    return StarExpResult(jet_materialize(total, D_out), dev, K, D_out)


def adjoint_translation(f: Jet, w: Sequence, D_out: Optional[int] = None, N_cut: int = 30) -> Jet:
    """u_w * f * u_{-w} computed through two star products.

    The first product ``u_w * f`` terminates when f is polynomial; the
    second is cut at ``N_cut`` and reports its tail.
    """
    hbar = float(f.hbar)
    if D_out is None:
        if not f.is_polynomial:
            raise ValueError("D_out is required for non-polynomial jets")
        D_out = f.degree
    g = HeisenbergElement(tuple(w), 0.0)
    u = unitary_u(g, hbar, f.p)
    uinv = unitary_u(g.inverse(), hbar, f.p)
    ff = _floatify(f)
    first = wick_star(u, ff, hbar, D_out=D_out + N_cut, N_cut=None if ff.is_polynomial else N_cut)
    return wick_star(first, uinv, hbar, D_out=D_out, N_cut=N_cut)


def _floatify(f: Jet) -> Jet:
    if not f.exact:
        return f
    if f.coeffs is None:
        return Jet.from_provider(f.provider, f.n, [sc.to_complex(x) for x in f.p], float(f.hbar))
    return Jet.table(f.n, [sc.to_complex(x) for x in f.p], float(f.hbar),
                     {k: sc.to_complex(v) for k, v in f.coeffs.items()},
                     degree=f.degree, polynomial=f.polynomial, exact=False)


def rescale(f: Jet, alpha) -> Jet:
    """Pull-back by z -> sqrt(alpha) z: b[I,J] = alpha^((|I|+|J|)/2) a[I,J].

    The source is read at hbar_s and the result carries hbar_s / alpha.
    Only base point 0 is supported.
    """
    if any(not sc.is_zero(x) for x in f.p):
        raise ValueError("rescaling is only defined at base point 0")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    root = _exact_sqrt(alpha) if f.exact else None
    if f.exact and root is None:
        f = _floatify(f)
    if f.exact:
        new_hbar = sc.to_real_fraction(f.hbar) / Fraction(alpha)
        coeffs = {k: v * sc.exact(root ** (_deg(k[0]) + _deg(k[1]))) for k, v in f.coeffs.items()}
        return Jet.table(f.n, f.p, new_hbar, coeffs, degree=f.degree, polynomial=f.polynomial, exact=True)
    s = math.sqrt(float(alpha))
    new_hbar = float(f.hbar) / float(alpha)
    if f.coeffs is not None:
        coeffs = {k: sc.to_complex(v) * s ** (_deg(k[0]) + _deg(k[1])) for k, v in f.coeffs.items()}
        return Jet.table(f.n, f.p, new_hbar, coeffs, degree=f.degree, polynomial=f.polynomial, exact=False,
                         status=f.status)
    prov = f.provider
    if isinstance(prov, ExponentialProvider):
        new = ExponentialProvider([a * s for a in prov.abar], [b * s for b in prov.beta], prov.p, new_hbar, prov.scale)
        return Jet.from_provider(new, f.n, f.p, new_hbar)
    from .jet import ScaleProvider

    return Jet.from_provider(ScaleProvider(f, s), f.n, f.p, new_hbar)


def _exact_sqrt(alpha) -> Optional[Fraction]:
    try:
        a = Fraction(alpha) if not isinstance(alpha, str) else Fraction(alpha)
    except (TypeError, ValueError):
        return None
    rn, rd = math.isqrt(a.numerator), math.isqrt(a.denominator)
    if rn * rn == a.numerator and rd * rd == a.denominator:
        return Fraction(rn, rd)
    return None


# --------------------------------------------------------------------------
# closed forms for the exponential family


def _exp_params(f: Jet) -> ExponentialProvider:
    if not isinstance(f.provider, ExponentialProvider):
        raise TypeError("expected an exponential-family jet")
    return f.provider


def exp_pointwise_closed_form(f: Jet, g: Jet) -> Jet:
    """Pointwise product of two exponentials as a single exponential."""
    _check_frame(f, g)
    a, b = _exp_params(f), _exp_params(g)
    abar = [x + y for x, y in zip(a.abar, b.abar)]
    beta = [x + y for x, y in zip(a.beta, b.beta)]
    prefactor = a.prefactor * b.prefactor
    out = ExponentialProvider(abar, beta, a.p, a.hbar, 1.0)
    out = ExponentialProvider(abar, beta, a.p, a.hbar, prefactor / out.prefactor)
    return Jet.from_provider(out, f.n, f.p, f.hbar)


def exp_star_closed_form(f: Jet, g: Jet, alpha=None) -> Jet:
    """e_{a,b} *_alpha e_{c,d} = exp(2 alpha a.d) (e_{a,b} e_{c,d}).

    At alpha = hbar this is exp(hbar(a.d - b.c)) e_{a+c, b+d}.
    """
    a, b = _exp_params(f), _exp_params(g)
    if alpha is None:
        alpha = f.hbar
    ad = sum(x * y for x, y in zip(a.abar, b.beta))
    prod = exp_pointwise_closed_form(f, g)
    pr = prod.provider
    new = ExponentialProvider(pr.abar, pr.beta, pr.p, pr.hbar, pr.scale * cmath.exp(2 * complex(alpha) * ad))
    return Jet.from_provider(new, f.n, f.p, f.hbar)


def exp_translate_closed_form(f: Jet, shift: Sequence, mode: str = "holomorphic") -> Jet:
    """tau_s e_{a,b} = exp(a.s) e_{a,b}; the antiholomorphic shift gives exp(b.s)."""
    a = _exp_params(f)
    vec = a.abar if mode == "holomorphic" else a.beta
    factor = cmath.exp(sum(x * complex(y) for x, y in zip(vec, shift)))
    new = ExponentialProvider(a.abar, a.beta, a.p, a.hbar, a.scale * factor)
    return Jet.from_provider(new, f.n, f.p, f.hbar)


def exp_inverse(f: Jet) -> Jet:
    """Star inverse of e_{a,b} (scale k): k^{-1} e_{-a,-b}."""
    a = _exp_params(f)
    new = ExponentialProvider([-x for x in a.abar], [-x for x in a.beta], a.p, a.hbar, 1.0 / a.scale)
    return Jet.from_provider(new, f.n, f.p, f.hbar)


def cocycle_phase(w: Sequence, v: Sequence, hbar) -> complex:
    """exp(-(i / 2hbar) Im(conj(w).v)), the factor in u_w * u_v = phase u_{w+v}."""
    im = _symplectic([complex(x) for x in w], [complex(x) for x in v])
    return cmath.exp(-1j * im / (2 * float(hbar)))


def max_coeff_deviation(f: Jet, g: Jet, D: int, relative: bool = False) -> float:
    """max |a_f - a_g| over |I|+|J| <= D (optionally scaled by max |a_g|)."""
    dev, size = 0.0, 0.0
    for I, J in pairs_up_to(f.n, D):
        x = sc.to_complex(f.coefficient(I, J))
        y = sc.to_complex(g.coefficient(I, J))
        dev = max(dev, abs(x - y))
        size = max(size, abs(y))
    return dev / max(size, 1e-300) if relative else dev


def jets_equal(f: Jet, g: Jet, D: Optional[int] = None) -> bool:
    """Exact coefficientwise equality up to degree D (tables: their union)."""
    if D is None:
        D = max(f.degree or 0, g.degree or 0)
    for I, J in pairs_up_to(f.n, D):
        x, y = f.coefficient(I, J), g.coefficient(I, J)
        if f.exact and g.exact:
            if not sc.is_zero(x - y):
                return False
        elif sc.to_complex(x) != sc.to_complex(y):
            return False
    return True


__all__ = [
    "GradedJet",
    "HeisenbergElement",
    "StarExpResult",
    "adjoint_translation",
    "cocycle_phase",
    "exp_inverse",
    "exp_pointwise_closed_form",
    "exp_star_closed_form",
    "exp_translate_closed_form",
    "generator_J",
    "heisenberg_mul",
    "jets_equal",
    "jw_power_closed_form",
    "recursion_sign",
    "max_coeff_deviation",
    "rescale",
    "star_exp_partial",
    "star_power",
    "unitary_u",
    "wick_star",
    "wick_star_graded",
]
