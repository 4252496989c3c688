"""Jets: algebra elements represented by their Taylor data at a base point.

A jet stores the mixed derivative values

    a[I, J] = d^{|I|+|J|} f / dz^I dzbar^J (p)

either as a sparse table (all ``|I|+|J| <= degree``) or through a
coefficient provider that answers any ``(I, J)`` on demand. Tables built
from polynomials know that everything above their degree vanishes; tables
obtained by truncating a provider do not, and refuse to invent the missing
coefficients.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import lgamma
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import scalars as sc
from .multiindex import (
    DimensionError,
    box_indices,
    mi_enumerate,
    multi_binomial,
    multi_factorial,
    sub_indices,
)

Key = tuple  # (I, J) with I, J plain tuples


class TruncationError(ValueError):
    """A table jet was asked for coefficients above its known degree."""

    def __init__(self, message: str, degree: Optional[int] = None):
        super().__init__(message)
        self.degree = degree


class JetMismatch(ValueError):
    """Binary operation on jets with different dimension, base point or hbar."""


def _add(I, J):
    return tuple(a + b for a, b in zip(I, J))


def _sub(I, J):
    return tuple(a - b for a, b in zip(I, J))


def _leq(I, J):
    return all(a <= b for a, b in zip(I, J))


def _deg(I):
    return sum(I)


def _mono_power(x: Sequence, I: Sequence[int], exact_mode: bool):
    out = sc.one(exact_mode)
    for xi, k in zip(x, I):
        if k:
            out = out * xi**k
    return out


# --------------------------------------------------------------------------
# coefficient providers


class CoefficientProvider:
    """Closed-form rule ``(I, J) -> a[I, J]`` for a fixed base point and hbar."""

    variant = "custom"
    #: (deg_z, deg_zbar) when the provider is a polynomial, else None
    degrees: Optional[tuple] = None

    def coefficient(self, I: tuple, J: tuple):
        raise NotImplementedError

    def array(self, ibounds: Sequence[int], jbounds: Sequence[int]) -> np.ndarray:
        """Dense complex array over the index box ``I <= ibounds, J <= jbounds``."""
        shape = tuple(b + 1 for b in ibounds) + tuple(b + 1 for b in jbounds)
        out = np.zeros(shape, dtype=complex)
        for I in box_indices(ibounds):
            for J in box_indices(jbounds):
                out[I + J] = sc.to_complex(self.coefficient(I, J))
        return out

    def to_dict(self) -> dict:
        raise TypeError(f"{type(self).__name__} cannot be serialized")


class ExponentialProvider(CoefficientProvider):
    """The exponential family ``scale * exp(hbar abar.beta) exp(abar.z + beta.zbar)``.

    With ``scale == 1`` this is the element usually written e_{abar, beta}.
    """

    variant = "exponential"

    def __init__(self, abar, beta, p, hbar, scale: complex = 1.0):
        self.abar = tuple(complex(a) for a in abar)
        self.beta = tuple(complex(b) for b in beta)
        if len(self.abar) != len(self.beta):
            raise DimensionError("abar and beta must have equal length")
        self.scale = complex(scale)
        self.p = tuple(complex(x) for x in p)
        self.hbar = float(hbar)
        dot = sum(a * b for a, b in zip(self.abar, self.beta))
        at_p = sum(a * x + b * x.conjugate() for a, b, x in zip(self.abar, self.beta, self.p))
        self.prefactor = self.scale * cmath.exp(self.hbar * dot + at_p)

    def coefficient(self, I, J):
        v = self.prefactor
        for a, k in zip(self.abar, I):
            if k:
                v *= a**k
        for b, k in zip(self.beta, J):
            if k:
                v *= b**k
        return v

    def array(self, ibounds, jbounds):
        n = len(self.abar)
        out = np.array(self.prefactor, dtype=complex)
        factors = []
        for k in range(n):
            factors.append(self.abar[k] ** np.arange(ibounds[k] + 1))
        for k in range(n):
            factors.append(self.beta[k] ** np.arange(jbounds[k] + 1))
        for axis, f in enumerate(factors):
            shape = [1] * (2 * n)
            shape[axis] = f.size
            out = out * f.reshape(shape)
        return out

    def to_dict(self):
        return {
            "variant": "exponential",
            "abar": [[a.real, a.imag] for a in self.abar],
            "beta": [[b.real, b.imag] for b in self.beta],
            "scale": [self.scale.real, self.scale.imag],
        }


class PowerSeries1D(CoefficientProvider):
    """A holomorphic entire function of one variable at base point 0.

    ``rule(r)`` gives the Taylor coefficient of ``z^r``. When that would
    overflow once multiplied by ``r!``, pass ``derivative_rule(r)`` giving
    ``r! * a_r`` directly.
    """

    variant = "powerseries1d"

    def __init__(
        self,
        rule: Optional[Callable[[int], complex]] = None,
        derivative_rule: Optional[Callable[[int], complex]] = None,
        name: str = "custom",
    ):
        if rule is None and derivative_rule is None:
            raise ValueError("need rule or derivative_rule")
        self.rule = rule
        self.derivative_rule = derivative_rule
        self.name = name

    def derivative(self, r: int) -> complex:
        if self.derivative_rule is not None:
            return complex(self.derivative_rule(r))
        a = complex(self.rule(r))
        if a == 0:
            return 0j
        return a * math.exp(lgamma(r + 1))

    def coefficient(self, I, J):
        if J[0] != 0:
            return 0j
        return self.derivative(I[0])

    def array(self, ibounds, jbounds):
        out = np.zeros((ibounds[0] + 1, jbounds[0] + 1), dtype=complex)
        out[:, 0] = [self.derivative(r) for r in range(ibounds[0] + 1)]
        return out

    def to_dict(self):
        if self.name == "custom":
            return super().to_dict()
        return {"variant": "powerseries1d", "name": self.name}


class CustomProvider(CoefficientProvider):
    variant = "custom"

    def __init__(self, rule: Callable[[tuple, tuple], complex], name: str = "custom"):
        self.rule = rule
        self.name = name

    def coefficient(self, I, J):
        return self.rule(tuple(I), tuple(J))


class LinearProvider(CoefficientProvider):
    """Lazy linear combination ``sum_k c_k f_k`` of jets."""

    variant = "linear"

    def __init__(self, terms: Sequence[tuple]):
        self.terms = [(c, f) for c, f in terms]

    def coefficient(self, I, J):
        out = 0j
        for c, f in self.terms:
            if not sc.is_zero(c):
                out = out + sc.to_complex(c) * sc.to_complex(f.coefficient(I, J))
        return out

    def array(self, ibounds, jbounds):
        out = None
        for c, f in self.terms:
            part = sc.to_complex(c) * f.array(ibounds, jbounds)
            out = part if out is None else out + part
        return out


class ShiftProvider(CoefficientProvider):
    """Coefficients of the derivative d^{I+J} f / dz^I dzbar^J."""

    variant = "derivative"

    def __init__(self, f: "Jet", I: tuple, J: tuple):
        self.f, self.I, self.J = f, tuple(I), tuple(J)

    def coefficient(self, K, L):
        return self.f.coefficient(_add(K, self.I), _add(L, self.J))

    def array(self, ibounds, jbounds):
        big = self.f.array(_add(ibounds, self.I), _add(jbounds, self.J))
        sl = tuple(slice(s, None) for s in self.I) + tuple(slice(s, None) for s in self.J)
        return big[sl]


class ConjugateProvider(CoefficientProvider):
    variant = "conjugate"

    def __init__(self, f: "Jet"):
        self.f = f

    def coefficient(self, I, J):
        return sc.conj(self.f.coefficient(J, I))

    def array(self, ibounds, jbounds):
        n = len(ibounds)
        src = self.f.array(jbounds, ibounds)
        axes = tuple(range(n, 2 * n)) + tuple(range(n))
        return np.conj(np.transpose(src, axes))


class MaskProvider(CoefficientProvider):
    """Keep the coefficients for which ``keep(I, J)`` holds, zero the rest."""

    variant = "mask"

    def __init__(self, f: "Jet", keep: Callable[[tuple, tuple], bool], name: str = "mask",
                 degree_rule: Optional[Callable] = None):
        # degree_rule(|I|, |J|) is a vectorised form of keep for masks that
        # only look at total degrees
        self.f, self.keep, self.name, self.degree_rule = f, keep, name, degree_rule

    def coefficient(self, I, J):
        if self.keep(tuple(I), tuple(J)):
            return self.f.coefficient(I, J)
        return sc.zero(self.f.exact)

    def array(self, ibounds, jbounds):
        out = np.array(self.f.array(ibounds, jbounds), copy=True)
        if self.degree_rule is not None:
            n = len(ibounds)
            grids = np.indices(out.shape)
            dI = sum(grids[:n])
            dJ = sum(grids[n:])
            return np.where(self.degree_rule(dI, dJ), out, 0)
        for I in box_indices(ibounds):
            for J in box_indices(jbounds):
                if not self.keep(I, J):
                    out[I + J] = 0
        return out


class ScaleProvider(CoefficientProvider):
    """``b[I, J] = factor^(|I|+|J|) a[I, J]`` (pull-back by a dilation)."""

    variant = "rescale"

    def __init__(self, f: "Jet", factor: float):
        self.f, self.factor = f, factor

    def coefficient(self, I, J):
        return sc.to_complex(self.f.coefficient(I, J)) * self.factor ** (_deg(I) + _deg(J))

    def array(self, ibounds, jbounds):
        src = self.f.array(ibounds, jbounds)
        grids = np.meshgrid(*[np.arange(s) for s in src.shape], indexing="ij")
        total = sum(grids) if grids else 0
        return src * self.factor ** total


# --------------------------------------------------------------------------
# the jet itself


@dataclass(eq=False)
class Jet:
    """Taylor data of an element at base point ``p``.

    Exactly one of ``coeffs`` (table kind) and ``provider`` is set. For the
    table kind ``degree`` bounds the stored total degree ``|I|+|J|`` and
    ``polynomial`` records whether all higher coefficients vanish.
    ``status`` is ``"exact"`` unless the jet came out of a truncated
    series, in which case it is ``"converged"`` or ``"inconclusive"`` and
    ``diagnostics`` says why.
    """

    n: int
    p: tuple
    hbar: object
    exact: bool = False
    coeffs: Optional[dict] = None
    degree: Optional[int] = None
    polynomial: bool = True
    provider: Optional[CoefficientProvider] = None
    status: str = "exact"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError("jets need dimension n >= 1")
        if len(self.p) != self.n:
            raise DimensionError(f"base point has {len(self.p)} entries, expected {self.n}")
        if (self.coeffs is None) == (self.provider is None):
            raise ValueError("a jet is either a table or provider-backed")
        if self.coeffs is not None:
            if self.degree is None:
                self.degree = max((_deg(I) + _deg(J) for I, J in self.coeffs), default=0)
            self.coeffs = {k: v for k, v in self.coeffs.items() if not sc.is_zero(v)}
        else:
            self.polynomial = False
        self.p = tuple(sc.coerce(x, self.exact) for x in self.p)
        self.hbar = sc.to_real_fraction(self.hbar) if self.exact else float(self.hbar)
        if self.hbar < 0:
            raise ValueError("hbar must be non-negative")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def table(cls, n, p, hbar, coeffs: Mapping, degree=None, polynomial=True, exact=False, **kw):
        cc = {}
        for (I, J), v in coeffs.items():
            I, J = tuple(I), tuple(J)
            if len(I) != n or len(J) != n:
                raise DimensionError("coefficient index has wrong dimension")
            cc[(I, J)] = sc.coerce(v, exact)
        return cls(n=n, p=tuple(p), hbar=hbar, exact=exact, coeffs=cc, degree=degree,
                   polynomial=polynomial, **kw)

    @classmethod
    def from_provider(cls, provider: CoefficientProvider, n, p, hbar, exact=False):
        return cls(n=n, p=tuple(p), hbar=hbar, exact=exact, provider=provider)

    @property
    def kind(self) -> str:
        return "table" if self.coeffs is not None else "provider"

    @property
    def is_polynomial(self) -> bool:
        return self.coeffs is not None and self.polynomial

    def same_frame(self, other: "Jet") -> bool:
        return (
            self.n == other.n
            and all(sc.to_complex(a) == sc.to_complex(b) for a, b in zip(self.p, other.p))
            and float(self.hbar) == float(other.hbar)
        )

    def like(self, **changes) -> "Jet":
        """Jet in the same frame (n, p, hbar, mode) with new data."""
        base = dict(n=self.n, p=self.p, hbar=self.hbar, exact=self.exact)
        base.update(changes)
        return Jet(**base)

    # -- coefficient access ---------------------------------------------------

    def coefficient(self, I: Sequence[int], J: Sequence[int]):
        I, J = tuple(I), tuple(J)
        if len(I) != self.n or len(J) != self.n:
            raise DimensionError("coefficient index has wrong dimension")
        if self.provider is not None:
            return sc.coerce(self.provider.coefficient(I, J), self.exact)
        d = _deg(I) + _deg(J)
        if d > self.degree and not self.polynomial:
            raise TruncationError(
                f"coefficient ({I}, {J}) of degree {d} not available (table truncated at {self.degree})",
                degree=d,
            )
        return self.coeffs.get((I, J), sc.zero(self.exact))

    def available_degree(self) -> float:
        """Largest total degree for which coefficients are known."""
        if self.provider is not None or self.polynomial:
            return math.inf
        return self.degree

    def degrees(self) -> Optional[tuple]:
        """(deg_z, deg_zbar) for polynomial tables, None otherwise."""
        if self.is_polynomial:
            dz = max((_deg(I) for I, _ in self.coeffs), default=0)
            dzb = max((_deg(J) for _, J in self.coeffs), default=0)
            return dz, dzb
        if self.provider is not None and self.provider.degrees is not None:
            return self.provider.degrees
        return None

    def array(self, ibounds: Sequence[int], jbounds: Sequence[int]) -> np.ndarray:
        """Dense complex array of coefficients over an index box."""
        ibounds, jbounds = tuple(ibounds), tuple(jbounds)
        if self.provider is not None:
            return np.asarray(self.provider.array(ibounds, jbounds), dtype=complex)
        need = sum(ibounds) + sum(jbounds)
        if need > self.degree and not self.polynomial:
            raise TruncationError(
                f"index box reaches degree {need}, table truncated at {self.degree}", degree=need
            )
        shape = tuple(b + 1 for b in ibounds) + tuple(b + 1 for b in jbounds)
        out = np.zeros(shape, dtype=complex)
        for (I, J), v in self.coeffs.items():
            if _leq(I, ibounds) and _leq(J, jbounds):
                out[I + J] = sc.to_complex(v)
        return out

    def items(self, D: Optional[int] = None):
        """(I, J, value) triples in degree-then-lex order up to total degree D."""
        if D is None:
            if self.coeffs is None:
                raise ValueError("provider jets need an explicit degree")
            D = self.degree
        for I, J in pairs_up_to(self.n, D):
            v = self.coefficient(I, J)
            if not sc.is_zero(v):
                yield I, J, v

    def nonzero(self) -> dict:
        if self.coeffs is None:
            raise ValueError("provider jets have no finite table")
        return dict(self.coeffs)

    def __repr__(self) -> str:
        what = f"table(D={self.degree}, {len(self.coeffs)} terms)" if self.coeffs is not None \
            else f"provider({self.provider.variant})"
        return f"Jet(n={self.n}, hbar={self.hbar}, {what}, {'exact' if self.exact else 'float'})"


def pairs_up_to(n: int, D: int):
    """All (I, J) with |I| + |J| <= D, degree-then-lex on the concatenation."""
    for K in mi_enumerate(2 * n, D):
        yield tuple(K[:n]), tuple(K[n:])


# --------------------------------------------------------------------------
# constructors


def _frame(n, p, hbar, exact):
    if exact is None:
        exact = sc.default_exact()
    if p is None:
        p = (0,) * n
    return n, tuple(p), hbar, exact


def jet_from_polynomial(n: int, p, hbar, monomials: Mapping, exact: Optional[bool] = None) -> Jet:
    """Table jet of the polynomial ``sum c[I,J] (z-p)^I (zbar-pbar)^J``.

    ``monomials`` maps ``(I, J)`` to the monomial coefficient ``c``; the
    stored derivative value is ``I! J! c``.
    """
    n, p, hbar, exact = _frame(n, p, hbar, exact)
    coeffs = {}
    for (I, J), c in monomials.items():
        I, J = tuple(I), tuple(J)
        v = sc.coerce(c, exact)
        k = multi_factorial(I) * multi_factorial(J)
        key = (I, J)
        coeffs[key] = coeffs.get(key, sc.zero(exact)) + v * k
    return Jet.table(n, p, hbar, coeffs, exact=exact)


def constant(c, n: int = 1, p=None, hbar=0.5, exact: Optional[bool] = None) -> Jet:
    n, p, hbar, exact = _frame(n, p, hbar, exact)
    z0 = (0,) * n
    return Jet.table(n, p, hbar, {(z0, z0): c}, degree=0, exact=exact)


def coordinate(k: int, n: int = 1, p=None, hbar=0.5, exact: Optional[bool] = None, bar: bool = False) -> Jet:
    """The function z^k (or zbar^k) as a jet at p (a_{00} = p_k, first derivative 1)."""
    n, p, hbar, exact = _frame(n, p, hbar, exact)
    e = tuple(1 if i == k else 0 for i in range(n))
    z0 = (0,) * n
    pk = sc.coerce(p[k], exact)
    coeffs = {(z0, e) if bar else (e, z0): 1}
    coeffs[(z0, z0)] = sc.conj(pk) if bar else pk
    return Jet.table(n, p, hbar, coeffs, degree=1, exact=exact)


def exponential(abar, beta, p=None, hbar=0.5, scale: complex = 1.0) -> Jet:
    """Provider jet of ``scale * e_{abar, beta}``."""
    n = len(abar)
    p = (0,) * n if p is None else tuple(p)
    return Jet.from_provider(ExponentialProvider(abar, beta, p, hbar, scale), n, p, hbar, exact=False)


def badguy(hbar=0.5) -> Jet:
    """The entire function sum_r z^r / (r!)^(1/4), a witness of divergence."""
    prov = PowerSeries1D(derivative_rule=lambda r: math.exp(0.75 * lgamma(r + 1)), name="badguy")
    return Jet.from_provider(prov, 1, (0,), hbar, exact=False)


def decoy(hbar=0.5) -> Jet:
    """sum_r z^r / r! = e^z: factorially decaying coefficients."""
    prov = PowerSeries1D(derivative_rule=lambda r: 1.0, name="decoy")
    return Jet.from_provider(prov, 1, (0,), hbar, exact=False)


def power_series_1d(rule, hbar=0.5, name="custom") -> Jet:
    return Jet.from_provider(PowerSeries1D(rule=rule, name=name), 1, (0,), hbar, exact=False)


# --------------------------------------------------------------------------
# operations


def _check_frame(f: Jet, g: Jet) -> None:
    if f.n != g.n:
        raise JetMismatch(f"dimension mismatch: {f.n} vs {g.n}")
    if not f.same_frame(g):
        raise JetMismatch("jets live at different base points or hbar")


def _common_mode(*jets: Jet) -> bool:
    return all(j.exact for j in jets)


def jet_materialize(f: Jet, D: int) -> Jet:
    """Table of the provider coefficients for all ``|I|+|J| <= D``."""
    if D < 0:
        raise ValueError("D must be >= 0")
    if f.coeffs is not None:
        if D > f.degree and not f.polynomial:
            raise TruncationError(f"cannot extend a table truncated at {f.degree} to {D}", degree=D)
        coeffs = {k: v for k, v in f.coeffs.items() if _deg(k[0]) + _deg(k[1]) <= D}
        poly = f.polynomial and D >= f.degree
        return f.like(coeffs=coeffs, degree=D if not poly else max(f.degree, 0), polynomial=poly,
                      status=f.status, diagnostics=dict(f.diagnostics))
    coeffs = {}
    for I, J in pairs_up_to(f.n, D):
        v = f.coefficient(I, J)
        if not sc.is_zero(v):
            coeffs[(I, J)] = v
    return f.like(coeffs=coeffs, degree=D, polynomial=False)


def jet_linear(a, f: Jet, b, g: Jet) -> Jet:
    """Coefficientwise ``a f + b g``."""
    _check_frame(f, g)
    exact = _common_mode(f, g)
    if f.coeffs is None or g.coeffs is None:
        prov = LinearProvider([(a, f), (b, g)])
        return Jet.from_provider(prov, f.n, f.p, f.hbar, exact=False)
    a, b = sc.coerce(a, exact), sc.coerce(b, exact)
    out: dict = {}
    for src, c in ((f, a), (g, b)):
        if sc.is_zero(c):
            continue
        for k, v in src.coeffs.items():
            v = sc.coerce(v, exact) * c
            out[k] = out[k] + v if k in out else v
    truncated = [j.degree for j in (f, g) if not j.polynomial]
    if truncated:
        D = min(truncated)
        out = {k: v for k, v in out.items() if _deg(k[0]) + _deg(k[1]) <= D}
        return f.like(exact=exact, coeffs=out, degree=D, polynomial=False)
    return f.like(exact=exact, coeffs=out, degree=max(f.degree, g.degree), polynomial=True)


def jet_sum(jets: Sequence[Jet], weights: Optional[Sequence] = None) -> Jet:
    weights = [1] * len(jets) if weights is None else list(weights)
    out = jet_linear(weights[0], jets[0], 0, jets[0])
    for w, j in zip(weights[1:], jets[1:]):
        out = jet_linear(1, out, w, j)
    return out


def jet_scale(c, f: Jet) -> Jet:
    return jet_linear(c, f, 0, f)


def jet_conjugate(f: Jet) -> Jet:
    """Jet of the complex conjugate function: b[I, J] = conj(a[J, I])."""
    if f.coeffs is not None:
        coeffs = {(J, I): sc.conj(v) for (I, J), v in f.coeffs.items()}
        return f.like(coeffs=coeffs, degree=f.degree, polynomial=f.polynomial,
                      status=f.status, diagnostics=dict(f.diagnostics))
    prov = f.provider
    if isinstance(prov, ExponentialProvider):
        new = ExponentialProvider(
            [b.conjugate() for b in prov.beta],
            [a.conjugate() for a in prov.abar],
            prov.p, prov.hbar, prov.scale.conjugate(),
        )
        return Jet.from_provider(new, f.n, f.p, f.hbar)
    return Jet.from_provider(ConjugateProvider(f), f.n, f.p, f.hbar, exact=f.exact)


def jet_derivative(f: Jet, I: Sequence[int], J: Sequence[int]) -> Jet:
    """Jet of d^{|I|+|J|} f / dz^I dzbar^J: b[K, L] = a[K+I, L+J]."""
    I, J = tuple(I), tuple(J)
    if len(I) != f.n or len(J) != f.n:
        raise DimensionError("derivative order has wrong dimension")
    if f.coeffs is not None:
        shift = _deg(I) + _deg(J)
        out = {}
        for (K, L), v in f.coeffs.items():
            if _leq(I, K) and _leq(J, L):
                out[(_sub(K, I), _sub(L, J))] = v
        D = max(f.degree - shift, 0) if f.polynomial else f.degree - shift
        if D < 0:
            raise TruncationError(f"derivative of order {shift} exceeds table degree {f.degree}", degree=shift)
        return f.like(coeffs=out, degree=D, polynomial=f.polynomial,
                      status=f.status, diagnostics=dict(f.diagnostics))
    prov = f.provider
    if isinstance(prov, ExponentialProvider):
        factor = prov.scale * _mono_power(prov.abar, I, False) * _mono_power(prov.beta, J, False)
        new = ExponentialProvider(prov.abar, prov.beta, prov.p, prov.hbar, factor)
        return Jet.from_provider(new, f.n, f.p, f.hbar)
    return Jet.from_provider(ShiftProvider(f, I, J), f.n, f.p, f.hbar, exact=f.exact)


def _as_table(f: Jet, D: int) -> tuple:
    """(coeff dict restricted to degree <= D, shortfall flag)."""
    if f.coeffs is None:
        return jet_materialize(f, D).coeffs, False
    if f.polynomial or D <= f.degree:
        return {k: v for k, v in f.coeffs.items() if _deg(k[0]) + _deg(k[1]) <= D}, False
    return dict(f.coeffs), True


def _leibniz(fc: dict, gc: dict, D: int, exact: bool) -> dict:
    out: dict = {}
    g_items = [((C, E), _deg(C) + _deg(E), v) for (C, E), v in gc.items()]
    for (A, B), a in fc.items():
        da = _deg(A) + _deg(B)
        a = sc.coerce(a, exact)
        for (C, E), dc, b in g_items:
            if da + dc > D:
                continue
            I, J = _add(A, C), _add(B, E)
            w = multi_binomial(I, A) * multi_binomial(J, B)
            v = a * sc.coerce(b, exact) * w
            key = (I, J)
            out[key] = out[key] + v if key in out else v
    return out


def jet_pointwise_mul(f: Jet, g: Jet, D_out: Optional[int] = None) -> Jet:
    """Pointwise product by the Leibniz convolution of derivative values.

    Without ``D_out`` both factors must be polynomials and the full product
    is returned. If a truncated table cannot supply coefficients up to
    ``D_out`` the result is cut at the available degree and marked
    ``inconclusive``.
    """
    _check_frame(f, g)
    exact = _common_mode(f, g)
    if D_out is None:
        if not (f.is_polynomial and g.is_polynomial):
            raise ValueError("D_out is required unless both factors are polynomials")
        D_out = f.degree + g.degree
    avail = min(f.available_degree(), g.available_degree())
    status, diag = "exact", {}
    if D_out > avail:
        status = "inconclusive"
        diag = {"warning": f"requested degree {D_out} but inputs known only to {avail}"}
        D_out = int(avail)
    fc, _ = _as_table(f, D_out)
    gc, _ = _as_table(g, D_out)
    out = _leibniz(fc, gc, D_out, exact)
    poly = f.is_polynomial and g.is_polynomial and D_out >= f.degree + g.degree
    if not (f.is_polynomial and g.is_polynomial) and status == "exact":
        status = "converged"
    return f.like(exact=exact, coeffs=out, degree=D_out, polynomial=poly, status=status, diagnostics=diag)


def jet_poisson(f: Jet, g: Jet, D_out: Optional[int] = None) -> Jet:
    """Poisson bracket {f, g} = (2/i) sum_k (f_{z_k} g_{zbar_k} - f_{zbar_k} g_{z_k})."""
    _check_frame(f, g)
    exact = _common_mode(f, g)
    if D_out is None and not (f.is_polynomial and g.is_polynomial):
        raise ValueError("D_out is required unless both factors are polynomials")
    z0 = (0,) * f.n
    terms = []
    for k in range(f.n):
        e = tuple(1 if i == k else 0 for i in range(f.n))
        terms.append(jet_pointwise_mul(jet_derivative(f, e, z0), jet_derivative(g, z0, e), D_out))
        terms.append(jet_pointwise_mul(jet_derivative(f, z0, e), jet_derivative(g, e, z0), D_out))
    two_over_i = sc.coerce(-2j, exact) if not exact else sc.exact((0, -2))
    weights = []
    for k in range(f.n):
        weights += [two_over_i, -two_over_i]
    out = jet_sum(terms, weights)
    return out


@dataclass
class Evaluation:
    value: complex
    status: str
    last_increment: float


def jet_evaluate(f: Jet, q: Sequence, N: int, M: int) -> Evaluation:
    """Truncated Taylor polynomial f^(N, M) evaluated at q.

    Sums ``a[I,J] / (I! J!) (q-p)^I (qbar-pbar)^J`` over ``|I| <= N``,
    ``|J| <= M``. ``last_increment`` is the magnitude of the outermost
    shell (``|I| == N`` or ``|J| == M``).
    """
    if len(q) != f.n:
        raise DimensionError("evaluation point has wrong dimension")
    if f.coeffs is not None and not f.polynomial and N + M > f.degree:
        raise TruncationError(f"need degree {N + M}, table truncated at {f.degree}", degree=N + M)
    exact = f.exact and all(sc.is_number(x) and not isinstance(x, (float, complex)) for x in q)
    q = [sc.coerce(x, exact) for x in q]
    p = [sc.coerce(x, exact) for x in f.p]
    dz = [a - b for a, b in zip(q, p)]
    dzb = [sc.conj(x) for x in dz]
    total = sc.zero(exact)
    shell = sc.zero(exact)
    if f.coeffs is not None:
        items = [(I, J, v) for (I, J), v in f.coeffs.items() if _deg(I) <= N and _deg(J) <= M]
    else:
        items = [(I, J, f.coefficient(I, J)) for I in mi_enumerate(f.n, N) for J in mi_enumerate(f.n, M)]
    for I, J, v in items:
        v = sc.coerce(v, exact)
        if sc.is_zero(v):
            continue
        term = v * _mono_power(dz, I, exact) * _mono_power(dzb, J, exact)
        k = multi_factorial(I) * multi_factorial(J)
        term = term * sc.exact(Fraction(1, k)) if exact else term / k
        total = total + term
        if _deg(I) == N or _deg(J) == M:
            shell = shell + term
    last = abs(sc.to_complex(shell))
    if f.is_polynomial:
        dz_, dzb_ = f.degrees()
        status = "exact" if (N >= dz_ and M >= dzb_) else "truncated"
    else:
        status = "converged" if last <= 1e-14 * max(1.0, abs(sc.to_complex(total))) else "inconclusive"
    return Evaluation(total, status, last)


def delta(f: Jet):
    """Evaluation at the base point, i.e. a[0, 0]."""
    z0 = (0,) * f.n
    return f.coefficient(z0, z0)


def jet_translate(f: Jet, shift: Sequence, mode: str = "holomorphic", D_out: Optional[int] = None,
                  N_cut: int = 30) -> Jet:
    """Jet of z -> f(z + shift, zbar) (holomorphic) or f(z, zbar + shift).

    ``b[I, J] = sum_K shift^K / K! a[I+K, J]``. The series terminates for
    polynomials; otherwise it is cut at ``|K| <= N_cut`` and the status
    reflects the size of the last shell.
    """
    if mode not in ("holomorphic", "antiholomorphic"):
        raise ValueError("mode must be 'holomorphic' or 'antiholomorphic'")
    if len(shift) != f.n:
        raise DimensionError("shift has wrong dimension")
    hol = mode == "holomorphic"
    if f.is_polynomial:
        exact = f.exact
        s = [sc.coerce(x, exact) for x in shift]
        out: dict = {}
        dz, dzb = f.degrees()
        for (A, B), v in f.coeffs.items():
            src = A if hol else B
            for K in sub_indices(src):
                tgt = _sub(src, K)
                key = (tgt, B) if hol else (A, tgt)
                w = _mono_power(s, K, exact)
                kf = multi_factorial(K)
                term = v * w * (sc.exact(Fraction(1, kf)) if exact else 1.0 / kf)
                out[key] = out[key] + term if key in out else term
        D = f.degree if D_out is None else D_out
        poly = D_out is None or D_out >= f.degree
        out = {k: v for k, v in out.items() if _deg(k[0]) + _deg(k[1]) <= D}
        return f.like(coeffs=out, degree=D if not poly else f.degree, polynomial=poly)
    if D_out is None:
        raise ValueError("D_out is required for non-polynomial jets")
    s = [complex(x) for x in shift]
    avail = f.available_degree()
    status = "converged"
    if D_out + N_cut > avail:
        N_cut = int(avail - D_out)
        status = "inconclusive"
        if N_cut < 0:
            raise TruncationError(f"table degree {avail} below requested {D_out}", degree=D_out)
    Ks = mi_enumerate(f.n, N_cut)
    weights = [(K, _mono_power(s, K, False) / multi_factorial(K)) for K in Ks]
    out = {}
    last = 0.0
    for I, J in pairs_up_to(f.n, D_out):
        acc = 0j
        shell = 0j
        for K, w in weights:
            a = sc.to_complex(f.coefficient(_add(I, K), J) if hol else f.coefficient(I, _add(J, K)))
            acc += w * a
            if _deg(K) == N_cut:
                shell += w * a
        if acc != 0:
            out[(I, J)] = acc
        if abs(shell) > 1e-14 * max(1.0, abs(acc)):
            last = max(last, abs(shell))
    if last > 0 and status == "converged":
        status = "inconclusive"
    return f.like(exact=False, coeffs=out, degree=D_out, polynomial=False, status=status,
                  diagnostics={"N_cut": N_cut, "last_shell": last})


def pullback_translation(f: Jet, w: Sequence) -> Jet:
    """Jet of z -> f(z + w) at the same base point (both slots shifted)."""
    wbar = [sc.conj(x) for x in w]
    return jet_translate(jet_translate(f, w, "holomorphic"), wbar, "antiholomorphic")


def taylor_remainder(f: Jet, N: int, M: int) -> Jet:
    """f - f^(N, M): keep only coefficients with |I| > N or |J| > M."""
    keep = lambda I, J: _deg(I) > N or _deg(J) > M  # noqa: E731
    if f.coeffs is not None:
        coeffs = {k: v for k, v in f.coeffs.items() if keep(*k)}
        return f.like(coeffs=coeffs, degree=f.degree, polynomial=f.polynomial)
    prov = MaskProvider(f, keep, name=f"remainder({N},{M})", degree_rule=lambda dI, dJ: (dI > N) | (dJ > M))
    prov.tail_start = min(N, M) + 1
    return Jet.from_provider(prov, f.n, f.p, f.hbar, exact=f.exact)


def taylor_truncation(f: Jet, N: int, M: int) -> Jet:
    """f^(N, M) as a polynomial jet."""
    coeffs = {}
    for I in mi_enumerate(f.n, N):
        for J in mi_enumerate(f.n, M):
            v = f.coefficient(I, J)
            if not sc.is_zero(v):
                coeffs[(tuple(I), tuple(J))] = v
    return f.like(coeffs=coeffs, degree=N + M, polynomial=True)


# --------------------------------------------------------------------------
# serialization


def _enc(v, exact):
    if exact:
        return {"re": str(sc.real_part(v)), "im": str(sc.imag_part(v))}
    v = sc.to_complex(v)
    return {"re": v.real, "im": v.imag}


def _pair(v, exact):
    if exact:
        return [str(sc.real_part(v)), str(sc.imag_part(v))]
    v = sc.to_complex(v)
    return [v.real, v.imag]


def _dec(re, im, exact):
    if exact:
        return sc.exact((Fraction(str(re)), Fraction(str(im))))
    return complex(float(re), float(im))


def jet_to_dict(f: Jet) -> dict:
    out = {
        "n": f.n,
        "p": [_pair(x, f.exact) for x in f.p],
        "hbar": str(f.hbar) if f.exact else f.hbar,
        "mode": "exact" if f.exact else "float",
    }
    if f.coeffs is not None:
        out["degree"] = f.degree
        out["polynomial"] = f.polynomial
        rows = []
        for I, J in sorted(f.coeffs, key=lambda k: (_deg(k[0]) + _deg(k[1]), tuple(-x for x in k[0] + k[1]))):
            rows.append({"I": list(I), "J": list(J), **_enc(f.coeffs[(I, J)], f.exact)})
        out["coeffs"] = rows
        if f.status != "exact":
            out["status"] = f.status
    else:
        out["provider"] = f.provider.to_dict()
    return out


def jet_from_dict(data: Mapping) -> Jet:
    n = int(data["n"])
    exact = data.get("mode", "float") == "exact"
    p = [_dec(x[0], x[1], exact) for x in data.get("p", [[0, 0]] * n)]
    hbar = Fraction(str(data["hbar"])) if exact else float(data["hbar"])
    if "provider" in data:
        prov = data["provider"]
        variant = prov["variant"]
        if variant == "exponential":
            abar = [complex(a[0], a[1]) for a in prov["abar"]]
            beta = [complex(b[0], b[1]) for b in prov["beta"]]
            s = prov.get("scale", [1.0, 0.0])
            return exponential(abar, beta, p, hbar, complex(s[0], s[1]))
        if variant == "powerseries1d":
            name = prov.get("name")
            if name == "badguy":
                return badguy(hbar)
            if name == "decoy":
                return decoy(hbar)
        raise ValueError(f"cannot deserialize provider variant {variant!r}")
    coeffs = {}
    for row in data.get("coeffs", []):
        I, J = tuple(row["I"]), tuple(row["J"])
        coeffs[(I, J)] = _dec(row.get("re", 0), row.get("im", 0), exact)
    return Jet.table(n, p, hbar, coeffs, degree=data.get("degree"), polynomial=data.get("polynomial", True),
                     exact=exact, status=data.get("status", "exact"))


def jet_to_json(f: Jet, **kw) -> str:
    return json.dumps(jet_to_dict(f), **kw)


def jet_from_json(text: str) -> Jet:
    return jet_from_dict(json.loads(text))
