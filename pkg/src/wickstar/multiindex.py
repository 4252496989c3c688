"""Multi-index combinatorics.

Multi-indices are tuples of non-negative integers. Every product, seminorm
and Fock-space formula in this package is written in terms of them, so the
helpers here are exact (Python integers) and cheap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial as _fact, prod
from typing import Iterable, Iterator, Optional, Sequence


class DimensionError(ValueError):
    """Raised when multi-indices (or points) of different dimension meet."""


class MultiIndex(tuple):
    """An n-tuple of non-negative integers.

    Behaves like a tuple (hashable, usable as a dict key) with a few
    combinatorial helpers attached.

    >>> I = MultiIndex((2, 1))
    >>> I.degree, I.factorial()
    (3, 2)
    """

    __slots__ = ()

    def __new__(cls, entries: Iterable[int]):
        entries = tuple(int(e) for e in entries)
        if len(entries) == 0:
            raise DimensionError("multi-index must have dimension n >= 1")
        if any(e < 0 for e in entries):
            raise ValueError(f"negative entry in multi-index {entries}")
        return super().__new__(cls, entries)

    @classmethod
    def zero(cls, n: int) -> "MultiIndex":
        return cls((0,) * n)

    @classmethod
    def unit(cls, n: int, k: int) -> "MultiIndex":
        e = [0] * n
        e[k] = 1
        return cls(e)

    @property
    def n(self) -> int:
        return len(self)

    @property
    def degree(self) -> int:
        return sum(self)

    def factorial(self) -> int:
        return multi_factorial(self)

    def binomial(self, other: Sequence[int]) -> int:
        return multi_binomial(self, other)

    def leq(self, other: Sequence[int]) -> bool:
        return leq(self, other)

    def __add__(self, other):
        _check_dim(self, other)
        return MultiIndex(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        d = difference(self, other)
        if d is None:
            raise ValueError(f"{tuple(other)} is not <= {tuple(self)}")
        return d

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)})"

    def to_json(self) -> str:
        return json.dumps(list(self))


def _check_dim(I: Sequence[int], J: Sequence[int]) -> None:
    if len(I) != len(J):
        raise DimensionError(f"dimension mismatch: {len(I)} vs {len(J)}")


def degree(I: Sequence[int]) -> int:
    return sum(I)


@lru_cache(maxsize=None)
def multi_factorial(I: tuple) -> int:
    return prod(_fact(i) for i in I)


def multi_binomial(I: Sequence[int], J: Sequence[int]) -> int:
    """Product of scalar binomials C(I_k, J_k); zero unless J <= I."""
    _check_dim(I, J)
    return prod(comb(i, j) for i, j in zip(I, J))


def leq(I: Sequence[int], J: Sequence[int]) -> bool:
    """Componentwise order I <= J."""
    _check_dim(I, J)
    return all(i <= j for i, j in zip(I, J))


def add(I: Sequence[int], J: Sequence[int]) -> tuple:
    return tuple(i + j for i, j in zip(I, J))


def difference(I: Sequence[int], J: Sequence[int]) -> Optional[MultiIndex]:
    """I - J when J <= I, else None."""
    _check_dim(I, J)
    if not all(j <= i for i, j in zip(I, J)):
        return None
    return MultiIndex(i - j for i, j in zip(I, J))


@dataclass(frozen=True)
class Combinatorics:
    degree: int
    factorial: int
    binomial: int
    leq: bool
    sum: MultiIndex
    difference: Optional[MultiIndex]


def mi_combinatorics(I: Sequence[int], J: Sequence[int]) -> Combinatorics:
    """Combinatorial record of a pair of multi-indices.

    ``leq`` reports J <= I, the order under which ``binomial`` (C(I, J))
    and ``difference`` (I - J) are defined; otherwise the binomial is 0 and
    the difference None.
    """
    _check_dim(I, J)
    I, J = MultiIndex(I), MultiIndex(J)
    ordered = leq(J, I)
    return Combinatorics(
        degree=I.degree,
        factorial=I.factorial(),
        binomial=multi_binomial(I, J) if ordered else 0,
        leq=ordered,
        sum=I + J,
        difference=difference(I, J),
    )


def _compositions(total: int, n: int) -> Iterator[tuple]:
    # descending lexicographic order: (total, 0, ...) first, (..., 0, total) last
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, n - 1):
            yield (first,) + rest


@lru_cache(maxsize=256)
def _enumerate_cached(n: int, D: int) -> tuple:
    return tuple(MultiIndex(c) for d in range(D + 1) for c in _compositions(d, n))


def mi_enumerate(n: int, D: int) -> list[MultiIndex]:
    """All multi-indices of dimension ``n`` with total degree at most ``D``.

    Ordered by total degree, then lexicographically with the first slot
    varying slowest, e.g. ``(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)``.
    There are ``C(D+n, n)`` of them.
    """
    if n < 1:
        raise DimensionError("dimension must be >= 1")
    if D < 0:
        return []
    return list(_enumerate_cached(n, D))


def indices_of_degree(n: int, d: int) -> list[MultiIndex]:
    return [MultiIndex(c) for c in _compositions(d, n)] if d >= 0 else []


def sub_indices(I: Sequence[int]) -> Iterator[tuple]:
    """All A with A <= I (componentwise), as plain tuples."""
    if len(I) == 0:
        yield ()
        return
    for a in range(I[0] + 1):
        for rest in sub_indices(I[1:]):
            yield (a,) + rest


def box_indices(bounds: Sequence[int]) -> Iterator[tuple]:
    """All indices K with 0 <= K_k <= bounds_k."""
    return sub_indices(tuple(bounds))


def from_json(text: str | list) -> MultiIndex:
    data = json.loads(text) if isinstance(text, str) else text
    return MultiIndex(data)


def parse_index(text: str) -> MultiIndex:
    """Parse the CLI form ``"1;0;2"`` (commas accepted too)."""
    parts = [p for p in text.replace(",", ";").split(";") if p.strip() != ""]
    return MultiIndex(int(p) for p in parts)


def format_index(I: Sequence[int]) -> str:
    return ";".join(str(i) for i in I)
