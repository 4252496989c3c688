"""Scalar modes: exact Gaussian rationals or binary64 complex numbers.

Exact values are sympy's ``QQ_I`` elements. They do not compare equal to
plain ints and have no ``conjugate`` method, so all code goes through the
helpers below instead of touching them directly.
"""

from __future__ import annotations

import os
from fractions import Fraction
from numbers import Number

from sympy.polys.domains import QQ, QQ_I

ZERO = QQ_I(0, 0)
ONE = QQ_I(1, 0)
GaussianRational = type(ONE)


def default_exact() -> bool:
    """Scalar mode picked when the caller does not say (``WICKSTAR_EXACT=1``)."""
    return os.environ.get("WICKSTAR_EXACT", "0").strip() not in ("", "0", "false", "no")


def is_gaussian(x) -> bool:
    return isinstance(x, GaussianRational)


def _rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)  # binary value, exactly
    if isinstance(x, str):
        return Fraction(x)
    # gmpy2.mpq and friends
    return Fraction(int(x.numerator), int(x.denominator))


def exact(x) -> GaussianRational:
    """Convert ``x`` to an exact Gaussian rational.

    Accepts ints, Fractions, strings like ``"1/2"``, Gaussian rationals,
    ``(re, im)`` pairs, and complex/float values (taken at their exact
    binary value).
    """
    if is_gaussian(x):
        return x
    if isinstance(x, tuple) and len(x) == 2:
        re, im = _rational(x[0]), _rational(x[1])
    elif isinstance(x, complex):
        re, im = Fraction(x.real), Fraction(x.imag)
    else:
        re, im = _rational(x), Fraction(0)
    return QQ_I(QQ(re.numerator, re.denominator), QQ(im.numerator, im.denominator))


def to_complex(x) -> complex:
    if is_gaussian(x):
        return complex(float(x.x), float(x.y))
    return complex(x)


def to_real_fraction(x) -> Fraction:
    """Real exact value (rejects non-real Gaussian rationals)."""
    if is_gaussian(x):
        if x.y != 0:
            raise ValueError(f"expected a real value, got {x}")
        return _rational(x.x)
    return _rational(x)


def coerce(x, exact_mode: bool):
    """Bring ``x`` into the given scalar mode."""
    return exact(x) if exact_mode else to_complex(x)


def conj(x):
    if is_gaussian(x):
        return QQ_I(x.x, -x.y)
    return complex(x).conjugate()


def is_zero(x) -> bool:
    if is_gaussian(x):
        return x == ZERO
    return x == 0


def real_part(x):
    """Real part; exact Fraction in exact mode."""
    if is_gaussian(x):
        return _rational(x.x)
    return complex(x).real


def imag_part(x):
    if is_gaussian(x):
        return _rational(x.y)
    return complex(x).imag


def abs2(x):
    """|x|^2, exact for Gaussian rationals."""
    if is_gaussian(x):
        return _rational(x.x) ** 2 + _rational(x.y) ** 2
    x = complex(x)
    return x.real * x.real + x.imag * x.imag


def zero(exact_mode: bool):
    return ZERO if exact_mode else 0j


def one(exact_mode: bool):
    return ONE if exact_mode else 1 + 0j


def imag_unit(exact_mode: bool):
    return QQ_I(0, 1) if exact_mode else 1j


def scale(x, factor):
    """``factor * x`` where ``factor`` is an int or Fraction (exact-safe)."""
    if is_gaussian(x):
        if isinstance(factor, Fraction):
            return x * QQ(factor.numerator, factor.denominator)
        return x * factor
    return x * float(factor) if isinstance(factor, Fraction) else x * factor


def parse_complex(text: str) -> complex:
    """Parse ``"re,im"`` or a Python complex literal."""
    text = text.strip()
    if "," in text:
        re, im = text.split(",", 1)
        return complex(float(re), float(im))
    return complex(text.replace("i", "j"))


def parse_exact(text: str):
    """Parse ``"re,im"`` with rational parts, e.g. ``"1/2,-3"``."""
    text = text.strip()
    if "," in text:
        re, im = text.split(",", 1)
        return exact((Fraction(re.strip()), Fraction(im.strip())))
    return exact(Fraction(text))


def is_number(x) -> bool:
    return isinstance(x, Number) or is_gaussian(x)
