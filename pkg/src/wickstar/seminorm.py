"""The recursive seminorm hierarchy h_{m,l,R,S} and related estimates.

All series here have non-negative terms, so a partial sum is always a
lower bound for the true value. The evaluator works on dense arrays over
index boxes: level m needs level m-1 on a box enlarged by that level's
cutoff, and every (level, branch) array is computed once per jet and
cutoff vector and then sliced.

Level 0 is

    H0[R, S] = sum_N (2hbar)^(|R|+|S|+|N|) / N! |a[R, S+N]|^2

and level m squares a binomial transform of level m-1:

    H[R, S] = sum_N (1/N!) (sum_{I<=R, J<=S+N} C(R,I) C(S+N,J) H'[I, J])^2

with H' = h_{m-1, l/2} for even l and its transpose h_{m-1,(l-1)/2}[J, I]
for odd l.
"""

from __future__ import annotations

import csv
import io
import math
import threading
import weakref
from collections import deque
from dataclasses import dataclass, field
from math import lgamma
from typing import Iterable, Optional, Sequence

import numpy as np

from . import scalars as sc
from .jet import Jet, TruncationError
from .multiindex import DimensionError, format_index, mi_enumerate, multi_factorial

DEFAULT_CUTOFFS = {1: (40, 40, 40, 24, 16), 2: (14, 12, 10, 6, 4)}
MAX_CUTOFF = {1: 200, 2: 30}
# adaptive enlargement stops before the level-0 box exceeds this many entries
MAX_BOX = 4_000_000
WINDOW = 8
DIVERGENCE_THRESHOLD = 1e6
RTOL = 1e-13


def default_cutoffs(n: int) -> tuple:
    return DEFAULT_CUTOFFS.get(n, (8, 6, 4, 3, 2))


def epsilon_sign(m: int, ell: int) -> int:
    """(-1)^(number of ones in the binary digits of l), for 0 <= l < 2^m."""
    if m < 0 or not 0 <= ell < 2**m:
        raise ValueError(f"branch index l={ell} out of range for m={m}")
    return -1 if bin(ell).count("1") % 2 else 1


@dataclass(frozen=True)
class SeminormParams:
    m: int
    l: int
    R: tuple
    S: tuple
    hbar: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "R", tuple(self.R))
        object.__setattr__(self, "S", tuple(self.S))
        if self.m < 0 or not 0 <= self.l < 2**self.m:
            raise ValueError(f"branch index l={self.l} out of range for m={self.m}")
        if len(self.R) != len(self.S):
            raise DimensionError("R and S must have the same dimension")


@dataclass
class SeriesEvaluation:
    """A non-negative series value with its convergence verdict.

    ``value`` is ``math.inf`` exactly when ``status == "diverging"``;
    ``partial_sum`` always holds the last finite partial sum.
    """

    value: float
    status: str
    terms_used: int
    last_term: float
    monotone_window: int = WINDOW
    partial_sum: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status in ("exact", "converged")

    @property
    def lower_bound(self) -> float:
        """A certified lower bound for the exact (possibly infinite) value."""
        return self.partial_sum


def _worst(statuses: Iterable[str]) -> str:
    order = {"exact": 0, "converged": 1, "inconclusive": 2, "diverging": 3}
    return max(statuses, key=lambda s: order[s], default="exact")


def _diverging(shells: list, total, window: int, threshold: float):
    """Trailing ``window`` shell terms nondecreasing and partial sum above threshold."""
    if len(shells) <= window:
        return np.zeros_like(total, dtype=bool)
    tail = shells[-window - 1:]
    nondec = np.ones_like(total, dtype=bool)
    for a, b in zip(tail[:-1], tail[1:]):
        nondec &= (b >= a) & (b > 0)
    return nondec & (total > threshold)


class _ShellTail:
    """Shell sums in degree order, keeping only the trailing window.

    Terms must arrive with nondecreasing |N| (the order of mi_enumerate).
    """

    def __init__(self, shape, window: int):
        self.window = window
        self.done: deque = deque(maxlen=window + 1)
        self.degree = 0
        self.current = np.zeros(shape)
        self.count = 0

    def add(self, degree: int, t: np.ndarray) -> None:
        while degree > self.degree:
            self.done.append(self.current)
            self.count += 1
            self.current = np.zeros_like(self.current)
            self.degree += 1
        self.current += t

    def close(self) -> list:
        self.done.append(self.current)
        self.count += 1
        return list(self.done)


def _tail_diverging(tail: _ShellTail, total, threshold: float):
    shells = tail.close()
    if tail.count <= tail.window:
        return shells[-1], np.zeros_like(total, dtype=bool)
    return shells[-1], _diverging(shells, total, tail.window, threshold)


def _binomial_transform(H: np.ndarray, axis: int) -> np.ndarray:
    """G[k] = sum_{i<=k} C(k, i) H[i] along one axis, using additions only.

    Repeated neighbour sums keep inf entries from contaminating earlier
    indices (no 0 * inf products).
    """
    A = np.moveaxis(H, axis, 0)
    out = np.empty_like(A)
    D = A.copy()
    for k in range(A.shape[0]):
        out[k] = D[0]
        D = D[:-1] + D[1:]
    return np.moveaxis(out, 0, axis)


def _cone_max(A: np.ndarray) -> np.ndarray:
    """Running max over the lower box {I <= R, J <= T} of every entry."""
    for ax in range(A.ndim):
        A = np.maximum.accumulate(A, axis=ax)
    return A


@dataclass
class _Level:
    rb: tuple
    sb: tuple
    H: np.ndarray
    err: np.ndarray      # relative tail estimate per entry
    div: np.ndarray      # diverging flag per entry
    last: np.ndarray     # last shell term per entry
    terms: int
    exact: bool
    notes: list

    def covers(self, rb, sb) -> bool:
        return all(a >= b for a, b in zip(self.rb, rb)) and all(a >= b for a, b in zip(self.sb, sb))

    def view(self, rb, sb):
        sl = tuple(slice(0, b + 1) for b in rb) + tuple(slice(0, b + 1) for b in sb)
        return self.H[sl], self.err[sl], self.div[sl]


class SeminormEvaluator:
    """Memoized evaluation of h_{m,l,R,S} for one jet, hbar and cutoff vector.

    ``cutoffs[k]`` bounds |N| in the level-k sum (the last entry is reused
    for deeper levels). Cached level arrays are shared by all queries; the
    cache is guarded by a lock so concurrent callers see the same values.
    """

    def __init__(self, f: Jet, hbar=None, cutoffs: Optional[Sequence[int]] = None,
                 window: int = WINDOW, rtol: float = RTOL, threshold: float = DIVERGENCE_THRESHOLD):
        self.f = f
        self.n = f.n
        self.hbar = float(f.hbar if hbar is None else hbar)
        if self.hbar < 0:
            raise ValueError("hbar must be non-negative")
        self.cutoffs = tuple(int(c) for c in (cutoffs or default_cutoffs(f.n)))
        if not self.cutoffs or min(self.cutoffs) < 0:
            raise ValueError("cutoffs must be non-negative")
        self.window, self.rtol, self.threshold = window, rtol, threshold
        self._cache: dict = {}
        self._lock = threading.RLock()

        # masked jets (Taylor remainders) vanish below some degree; every
        # level must sum past that point or a zero partial sum looks converged
        self._floor = _tail_start(f)

    def cutoff(self, level: int) -> int:
        c = self.cutoffs[min(level, len(self.cutoffs) - 1)]
        return max(c, self._floor + 2 * self.window) if self._floor else c

    # -- level arrays -------------------------------------------------------

    def level(self, m: int, ell: int, rb: Sequence[int], sb: Sequence[int]) -> _Level:
        rb, sb = tuple(rb), tuple(sb)
        with self._lock:
            hit = self._cache.get((m, ell))
            if hit is not None and hit.covers(rb, sb):
                return hit
            if hit is not None:
                rb = tuple(max(a, b) for a, b in zip(rb, hit.rb))
                sb = tuple(max(a, b) for a, b in zip(sb, hit.sb))
            lvl = self._level0(rb, sb) if m == 0 else self._levelm(m, ell, rb, sb)
            self._cache[(m, ell)] = lvl
            return lvl

    def _coefficients(self, ib, jb):
        notes = []
        try:
            A = self.f.array(ib, jb)
            short = False
        except TruncationError:
            D = self.f.degree
            A = np.zeros(tuple(b + 1 for b in ib) + tuple(b + 1 for b in jb), dtype=complex)
            for (I, J), v in self.f.coeffs.items():
                if all(i <= b for i, b in zip(I, ib)) and all(j <= b for j, b in zip(J, jb)):
                    A[I + J] = sc.to_complex(v)
            notes.append(f"level 0: coefficients above degree {D} unavailable")
            short = True
        return A, short, notes

    def _grids(self, shape):
        """Total degree |I|+|J| over an index box."""
        return sum(np.indices(shape)) if shape else np.zeros(())

    def _level0(self, rb, sb) -> _Level:
        n, N0 = self.n, self.cutoff(0)
        jb = tuple(b + N0 for b in sb)
        A, short, notes = self._coefficients(rb, jb)
        W = np.abs(A) ** 2
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            if self.hbar == 0:
                W = np.where(self._grids(W.shape) == 0, W, 0.0)
            else:
                W = W * (2 * self.hbar) ** self._grids(W.shape).astype(float)
        shape = tuple(b + 1 for b in rb) + tuple(b + 1 for b in sb)
        H = np.zeros(shape)
        tail = _ShellTail(shape, self.window)
        for N in mi_enumerate(n, N0):
            sl = (slice(None),) * n + tuple(slice(k, k + b + 1) for k, b in zip(N, sb))
            with np.errstate(over="ignore", invalid="ignore"):
                t = W[sl] / multi_factorial(tuple(N))
            tail.add(sum(N), t)
            H += t
        last, div = _tail_diverging(tail, H, self.threshold)
        exact = False
        degs = self.f.degrees()
        if self.f.is_polynomial and degs is not None and N0 >= degs[1]:
            exact = True
        with np.errstate(divide="ignore", invalid="ignore"):
            err = np.where(H > 0, last / H, 0.0)
        if exact:
            err = np.zeros(shape)
        err = np.where(np.isfinite(H), err, np.inf)
        if short:
            err = np.full(shape, np.inf)
        return _Level(rb, sb, H, err, div, last, len(mi_enumerate(n, N0)), exact, notes)

    def _levelm(self, m, ell, rb, sb) -> _Level:
        n, Nm = self.n, self.cutoff(m)
        tb = tuple(b + Nm for b in sb)
        if ell % 2 == 0:
            sub = self.level(m - 1, ell // 2, rb, tb)
            Hp, errp, divp = sub.view(rb, tb)
        else:
            sub = self.level(m - 1, (ell - 1) // 2, tb, rb)
            Hp, errp, divp = sub.view(tb, rb)
            axes = tuple(range(n, 2 * n)) + tuple(range(n))
            Hp, errp, divp = (np.transpose(x, axes) for x in (Hp, errp, divp))
        G = Hp
        for ax in range(2 * n):
            G = _binomial_transform(G, ax)
        errG = _cone_max(errp)
        divG = _cone_max(divp.astype(np.int8)).astype(bool)
        shape = tuple(b + 1 for b in rb) + tuple(b + 1 for b in sb)
        H = np.zeros(shape)
        inner_err = np.zeros(shape)
        inner_div = np.zeros(shape, dtype=bool)
        tail = _ShellTail(shape, self.window)
        with np.errstate(over="ignore", invalid="ignore"):
            G2 = G * G
        for N in mi_enumerate(n, Nm):
            sl = (slice(None),) * n + tuple(slice(k, k + b + 1) for k, b in zip(N, sb))
            with np.errstate(over="ignore", invalid="ignore"):
                t = G2[sl] / multi_factorial(tuple(N))
            tail.add(sum(N), t)
            H += t
            inner_err = np.maximum(inner_err, errG[sl])
            inner_div |= divG[sl]
        last, div = _tail_diverging(tail, H, self.threshold)
        with np.errstate(divide="ignore", invalid="ignore"):
            own = np.where(H > 0, last / H, 0.0)
        err = np.maximum(own, 2 * inner_err)
        err = np.where(np.isfinite(H), err, np.inf)
        div = div | inner_div
        notes = list(sub.notes)
        return _Level(rb, sb, H, err, div, last, len(mi_enumerate(n, Nm)), False, notes)

    # -- queries --------------------------------------------------------------

    def h(self, m: int, ell: int, R: Sequence[int], S: Sequence[int]) -> SeriesEvaluation:
        epsilon_sign(m, ell)
        R, S = tuple(R), tuple(S)
        if len(R) != self.n or len(S) != self.n:
            raise DimensionError("R and S must match the jet dimension")
        lvl = self.level(m, ell, R, S)
        idx = R + S
        v, e, d, last = float(lvl.H[idx]), float(lvl.err[idx]), bool(lvl.div[idx]), float(lvl.last[idx])
        notes = list(lvl.notes)
        if d:
            status = "diverging"
        elif not math.isfinite(v) or not e <= self.rtol:
            status = "inconclusive"
            if not math.isfinite(v):
                notes.append("partial sum exceeds the floating-point range")
        else:
            status = "exact" if lvl.exact and m == 0 else "converged"
        value = math.inf if status == "diverging" else v
        return SeriesEvaluation(value, status, lvl.terms, last, self.window, v, notes)

    def seminorm(self, m: int, ell: int, R: Sequence[int], S: Sequence[int]) -> SeriesEvaluation:
        ev = self.h(m, ell, R, S)
        return _root(ev, m)


def _tail_start(f: Jet) -> int:
    """Degree below which a masked remainder has only zero coefficients (0 if none)."""
    from .jet import ConjugateProvider, LinearProvider, MaskProvider, ScaleProvider, ShiftProvider

    prov = f.provider
    if prov is None:
        return 0
    if isinstance(prov, MaskProvider):
        return max(getattr(prov, "tail_start", 0), _tail_start(prov.f))
    if isinstance(prov, (ConjugateProvider, ScaleProvider, ShiftProvider)):
        return _tail_start(prov.f)
    if isinstance(prov, LinearProvider):
        return max((_tail_start(g) for _, g in prov.terms), default=0)
    return 0


def _root(ev: SeriesEvaluation, m: int) -> SeriesEvaluation:
    k = 2.0 ** (m + 1)
    val = ev.value if ev.value == math.inf else ev.value ** (1 / k)
    return SeriesEvaluation(val, ev.status, ev.terms_used, ev.last_term, ev.monotone_window,
                            ev.partial_sum ** (1 / k), list(ev.notes))


_EVALUATORS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()
_EVAL_LOCK = threading.Lock()


def evaluator(f: Jet, hbar=None, cutoffs: Optional[Sequence[int]] = None) -> SeminormEvaluator:
    """Shared evaluator for (jet, hbar, cutoffs); memo tables live as long as the jet."""
    key = (float(f.hbar if hbar is None else hbar), tuple(cutoffs or default_cutoffs(f.n)))
    with _EVAL_LOCK:
        per = _EVALUATORS.setdefault(f, {})
        ev = per.get(key)
        if ev is None:
            ev = per[key] = SeminormEvaluator(f, key[0], key[1])
        return ev


def _scaled(cutoffs: Sequence[int], factor: float, cap: int) -> tuple:
    return tuple(min(cap, max(c + 1, int(math.ceil(c * factor)))) for c in cutoffs)


def _box_entries(params: SeminormParams, cut: Sequence[int], n: int) -> int:
    """Size of the level-0 coefficient box the evaluator would allocate."""
    rb, sb = list(params.R), list(params.S)
    m, ell = params.m, params.l
    while m > 0:
        tb = [b + cut[min(m, len(cut) - 1)] for b in sb]
        rb, sb = (rb, tb) if ell % 2 == 0 else (tb, rb)
        m, ell = m - 1, ell // 2
    jb = [b + cut[0] for b in sb]
    return math.prod(b + 1 for b in rb) * math.prod(b + 1 for b in jb)


def h_base(f: Jet, R: Sequence[int], S: Sequence[int], hbar=None, N_max: int = 40) -> SeriesEvaluation:
    """h_{0,0,R,S}(f) summed over |N| <= N_max."""
    return evaluator(f, hbar, (N_max,)).h(0, 0, R, S)


def h_recursive(f: Jet, params: SeminormParams, cutoffs: Optional[Sequence[int]] = None,
                adaptive: bool = False) -> SeriesEvaluation:
    """h_{m,l,R,S}(f) with one cutoff per level.

    With ``adaptive`` the cutoffs are enlarged (up to a per-dimension cap)
    until the value converges or diverges.
    """
    cut = tuple(cutoffs or default_cutoffs(f.n))
    ev = evaluator(f, params.hbar, cut).h(params.m, params.l, params.R, params.S)
    cap = MAX_CUTOFF.get(f.n, 12)
    tries = 0
    while adaptive and ev.status == "inconclusive" and tries < 4 and min(cut[: params.m + 1]) < cap:
        if any("unavailable" in note for note in ev.notes):
            break
        bigger = _scaled(cut, 1.6, cap)
        if _box_entries(params, bigger, f.n) > MAX_BOX:
            ev.notes.append("cutoff enlargement stopped at the memory limit")
            break
        cut = bigger
        # enlarged tables are private so they are freed after this call
        ev = SeminormEvaluator(f, params.hbar, cut).h(params.m, params.l, params.R, params.S)
        tries += 1
    return ev


def seminorm(f: Jet, params: SeminormParams, cutoffs: Optional[Sequence[int]] = None,
             adaptive: bool = False) -> SeriesEvaluation:
    """||f||_{m,l,R,S} = h_{m,l,R,S}(f)^(1 / 2^(m+1))."""
    return _root(h_recursive(f, params, cutoffs, adaptive), params.m)


def norm_ml(f: Jet, m: int, ell: int, hbar=None, cutoffs=None, adaptive: bool = False) -> SeriesEvaluation:
    z = (0,) * f.n
    return seminorm(f, SeminormParams(m, ell, z, z, hbar), cutoffs, adaptive)


def norm_m(f: Jet, m: int, hbar=None, cutoffs=None, adaptive: bool = False) -> SeriesEvaluation:
    """max over l of ||f||_{m,l}; the status is the worst branch status."""
    evs = [norm_ml(f, m, ell, hbar, cutoffs, adaptive) for ell in range(2**m)]
    best = max(evs, key=lambda e: e.value)
    return SeriesEvaluation(best.value, _worst(e.status for e in evs), best.terms_used, best.last_term,
                            best.monotone_window, max(e.partial_sum for e in evs))


def product_form_h(c: float, a: Sequence[float], b: Sequence[float], m: int, ell: int,
                   R: Sequence[int], S: Sequence[int]) -> float:
    """Exact h_{m,l,R,S} when h_{0,0,R,S} = c prod_k a_k^R_k b_k^S_k.

    The exponential family has this form with c = |scale e^{hbar abar.beta}|^2
    exp(2 hbar |beta|^2), a_k = 2 hbar |abar_k|^2, b_k = 2 hbar |beta_k|^2 (at
    p = 0), and the form is preserved by every level of the recursion.
    """
    logc, a, b = _product_form(math.log(c) if c > 0 else -math.inf, list(a), list(b), m, ell)
    out = logc + sum(r * math.log(x) if r else 0.0 for r, x in zip(R, a)) + \
        sum(s * math.log(y) if s else 0.0 for s, y in zip(S, b))
    return math.exp(out) if out < 709 else math.inf


def _product_form(logc, a, b, m, ell):
    bits = [(ell >> k) & 1 for k in range(m)]  # bit k is used going from level m-k-1 to m-k
    for level in range(1, m + 1):
        odd = bits[m - level]
        if odd:
            logc = 2 * logc + sum((1 + x) ** 2 for x in a)
            a, b = [(1 + y) ** 2 for y in b], [(1 + x) ** 2 for x in a]
        else:
            logc = 2 * logc + sum((1 + y) ** 2 for y in b)
            a, b = [(1 + x) ** 2 for x in a], [(1 + y) ** 2 for y in b]
    return logc, a, b


def exponential_h_data(f: Jet, hbar=None) -> tuple:
    """(c, a, b) of the product form of h_{0,0} for an exponential jet at p = 0."""
    from .jet import ExponentialProvider

    prov = f.provider
    if not isinstance(prov, ExponentialProvider):
        raise TypeError("expected an exponential-family jet")
    h = float(f.hbar if hbar is None else hbar)
    c = abs(prov.prefactor) ** 2 * math.exp(2 * h * sum(abs(x) ** 2 for x in prov.beta))
    return c, [2 * h * abs(x) ** 2 for x in prov.abar], [2 * h * abs(x) ** 2 for x in prov.beta]


# --------------------------------------------------------------------------
# membership certificate and continuity constant


@dataclass
class MembershipBound:
    c: float
    a: float
    b: float
    log_c: float

    def bound(self, R: Sequence[int], S: Sequence[int]) -> float:
        out = self.log_c + sum(R) * math.log(self.a) if self.a > 0 else (self.log_c if sum(R) == 0 else -math.inf)
        if sum(S):
            out = out + sum(S) * math.log(self.b) if self.b > 0 else -math.inf
        return math.exp(out) if out < 709 else math.inf


def membership_bound(a: float, b: float, c: float, m: int, ell: int, hbar: float, n: int) -> MembershipBound:
    """Constants with h_{m,l,R,S}(f) <= c_{m,l} a_{m,l}^|R| b_{m,l}^|S|.

    Valid for any f whose derivatives obey |d_z^R d_zbar^S f(p)| <= c a^|R| b^|S|.
    Base: c00 = c^2 exp(2 hbar b^2 n), a00 = 2 hbar a^2, b00 = 2 hbar b^2.
    """
    epsilon_sign(m, ell)
    if min(a, b, c) < 0:
        raise ValueError("a, b, c must be non-negative")
    logc = (2 * math.log(c) if c > 0 else -math.inf) + 2 * hbar * b * b * n
    aa, bb = 2 * hbar * a * a, 2 * hbar * b * b
    bits = [(ell >> k) & 1 for k in range(m)]
    for level in range(1, m + 1):
        if bits[m - level]:
            logc = 2 * logc + n * (1 + aa) ** 2
            aa, bb = (1 + bb) ** 2, (1 + aa) ** 2
        else:
            logc = 2 * logc + n * (1 + bb) ** 2
            aa, bb = (1 + aa) ** 2, (1 + bb) ** 2
    cval = math.exp(logc) if logc < 709 else math.inf
    return MembershipBound(cval, aa, bb, logc)


def continuity_constant(x: float, m: int, n: int = 1, N_max: int = 100) -> SeriesEvaluation:
    """c_m(x) = sum_N x^|N| (N!)^(1/2^(m+2) - 1), summed over |N| <= N_max."""
    if x < 0:
        raise ValueError("x must be non-negative")
    e = 1.0 / 2 ** (m + 2) - 1.0
    shells = [0.0] * (N_max + 1)
    for N in mi_enumerate(n, N_max):
        d = sum(N)
        if d == 0:
            shells[0] += 1.0
            continue
        if x == 0:
            continue
        lt = d * math.log(x) + e * sum(lgamma(k + 1) for k in N)
        shells[d] += math.exp(lt) if lt < 709 else math.inf
    total = sum(shells)
    last = shells[-1]
    div = bool(_diverging([np.array(s) for s in shells], np.array(total), WINDOW, DIVERGENCE_THRESHOLD))
    if div:
        status = "diverging"
    elif math.isfinite(total) and last <= RTOL * max(1.0, total):
        status = "converged"
    else:
        status = "inconclusive"
    return SeriesEvaluation(math.inf if div else total, status, len(mi_enumerate(n, N_max)), last,
                            WINDOW, total)


# --------------------------------------------------------------------------
# divergence probe


@dataclass
class DivergenceReport:
    verdict: str
    hbar: float
    value: float
    partial_sum: float
    terms_used: int
    first_increasing: Optional[int]
    log_terms: list

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "hbar": self.hbar,
            "value": None if self.value == math.inf else self.value,
            "partial_sum": self.partial_sum,
            "terms_used": self.terms_used,
            "first_increasing": self.first_increasing,
        }


def divergence_probe(f: Jet, hbar=None, N_max: int = 100, window: int = WINDOW,
                     threshold: float = DIVERGENCE_THRESHOLD) -> DivergenceReport:
    """Terms of delta_0(f * conj f) = sum_r (2hbar)^r / r! |a_{(r),(0)}|^2.

    For the Example-style function with a_r = (r!)^(-1/4) the terms are
    (2hbar)^r sqrt(r!), which grow without bound for every hbar > 0.
    ``first_increasing`` is where the final nondecreasing run of terms starts.
    """
    if f.n != 1:
        raise DimensionError("the divergence probe works in one complex dimension")
    h = float(f.hbar if hbar is None else hbar)
    logs = []
    for r in range(N_max + 1):
        a = abs(sc.to_complex(f.coefficient((r,), (0,))))
        if a == 0 or (h == 0 and r > 0):
            logs.append(-math.inf)
            continue
        lt = 2 * math.log(a) - lgamma(r + 1) + (r * math.log(2 * h) if r else 0.0)
        logs.append(lt)
    terms = [math.exp(t) if t < 709 else math.inf for t in logs]
    total = math.fsum(t for t in terms if math.isfinite(t)) if all(map(math.isfinite, terms)) else math.inf
    start = None
    for r in range(len(logs) - 1, 0, -1):
        if logs[r] >= logs[r - 1] and logs[r] > -math.inf:
            start = r - 1
        else:
            break
    run_ok = start is not None and len(logs) - 1 - start >= window
    if run_ok and total > threshold:
        verdict = "diverging"
    elif math.isfinite(total) and terms[-1] <= RTOL * max(1.0, total):
        verdict = "converged"
    else:
        verdict = "inconclusive"
    return DivergenceReport(verdict, h, math.inf if verdict == "diverging" else total, total,
                            N_max + 1, start if verdict == "diverging" else None, logs)


# --------------------------------------------------------------------------
# inequality suite


@dataclass
class InequalityRow:
    name: str
    m: int
    l: int
    R: tuple
    S: tuple
    lhs: float
    rhs: float
    status: str  # pass | fail | unevaluable
    kind: str = "le"  # le | eq
    note: str = ""

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {"name": self.name, "m": self.m, "l": self.l, "R": format_index(self.R),
                "S": format_index(self.S), "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "status": self.status}


def _judge(lhs: SeriesEvaluation, rhs_value: float, rhs_status: str, tol: float, kind: str = "le") -> str:
    if lhs.status not in ("exact", "converged"):
        return "unevaluable"
    if kind == "eq":
        if rhs_status not in ("exact", "converged"):
            return "unevaluable"
        return "pass" if abs(lhs.value - rhs_value) <= tol * max(abs(rhs_value), 1e-300) else "fail"
    # the right-hand side is a partial sum of a non-negative series, hence a
    # lower bound for the true value; beating it certifies the inequality
    if rhs_status == "diverging":
        return "pass"
    if math.isnan(rhs_value):
        return "unevaluable"
    return "pass" if lhs.value <= rhs_value * (1 + tol) or lhs.value <= rhs_value + tol * 1e-300 else "fail"


def _mul(*xs: float) -> float:
    if any(x == 0 for x in xs):
        return 0.0
    out = 1.0
    for x in xs:
        out *= x
    return out


def _rhs_val(ev: SeriesEvaluation) -> float:
    return math.inf if ev.status == "diverging" else ev.partial_sum


def _rhs_status(*evs: SeriesEvaluation) -> str:
    return _worst(e.status for e in evs)


class InequalitySuite:
    """Checks the seminorm estimates for a pair (f, g) over a parameter grid.

    Each row compares a converged left-hand side with a right-hand side
    built from partial sums (certified lower bounds of the true values).
    """

    def __init__(self, f: Jet, g: Jet, hbar=None, m_max: int = 2, RS_max: int = 2,
                 tol: float = 1e-10, cutoffs=None, hbar_low=None, alphas: Sequence = ()):
        if f.n != g.n:
            raise DimensionError("f and g must have the same dimension")
        self.f, self.g = f, g
        self.n = f.n
        self.hbar = float(f.hbar if hbar is None else hbar)
        self.m_max, self.RS_max, self.tol = m_max, RS_max, tol
        self.cutoffs = cutoffs
        self.hbar_low = self.hbar / 2 if hbar_low is None else float(hbar_low)
        self.alphas = list(alphas)
        self.rows: list = []

    def norm(self, f: Jet, m, ell, R, S, hbar=None, adaptive=True) -> SeriesEvaluation:
        h = self.hbar if hbar is None else hbar
        return seminorm(f, SeminormParams(m, ell, R, S, h), self.cutoffs, adaptive)

    def _add(self, name, m, ell, R, S, lhs, rhs_value, rhs_status, kind="le", note=""):
        status = _judge(lhs, rhs_value, rhs_status, self.tol, kind)
        self.rows.append(InequalityRow(name, m, ell, tuple(R), tuple(S), lhs.value, rhs_value, status, kind, note))

    def _indices(self):
        return [tuple(I) for I in mi_enumerate(self.n, self.RS_max) if max(I, default=0) <= self.RS_max]

    def run(self, which: Optional[Sequence[str]] = None) -> list:
        from .jet import constant, jet_conjugate, jet_derivative, jet_linear

        f, g, n = self.f, self.g, self.n
        which = set(which or ["triangle", "monotone", "absorb", "taylor", "derivative",
                              "pointwise", "star_conj", "conjugation", "hbar", "star"])
        z0 = (0,) * n
        idx = [I for I in mi_enumerate(n, self.RS_max * n) if max(I) <= self.RS_max]
        fg_sum = jet_linear(1, f, 1, g)
        fg_prod = _pointwise(f, g)
        star_cg = _conj_star(f, g)
        fbar = jet_conjugate(f)
        one = constant(1, n, f.p, f.hbar, exact=False)
        for m in range(self.m_max + 1):
            for ell in range(2**m):
                eps = epsilon_sign(m, ell)
                for R in idx:
                    for S in idx:
                        nf = self.norm(f, m, ell, R, S)
                        if "triangle" in which:
                            ng = self.norm(g, m, ell, R, S)
                            lhs = self.norm(fg_sum, m, ell, R, S)
                            self._add("triangle", m, ell, R, S, lhs, nf.value + ng.value,
                                      _rhs_status(nf, ng))
                        if "monotone" in which:
                            for br in (2 * ell, 2 * ell + 1):
                                r = self.norm(f, m + 1, br, R, S, adaptive=False)
                                self._add(f"monotone[{br}]", m, ell, R, S, nf, _rhs_val(r), r.status)
                        if "absorb" in which:
                            if sum(R) == 0:
                                r = self.norm(f, m + 1, 2 * ell, z0, z0, adaptive=False)
                                k = multi_factorial(S) ** (1 / 2 ** (m + 2))
                                self._add("absorb_S", m, ell, R, S, nf, _mul(k, _rhs_val(r)), r.status)
                            if sum(S) == 0:
                                r = self.norm(f, m + 1, 2 * ell + 1, z0, z0, adaptive=False)
                                k = multi_factorial(R) ** (1 / 2 ** (m + 2))
                                self._add("absorb_R", m, ell, R, S, nf, _mul(k, _rhs_val(r)), r.status)
                            r = self.norm(f, m + 2, 4 * ell + 1, z0, z0, adaptive=False)
                            k = multi_factorial(R) ** (1 / 2 ** (m + 3)) * multi_factorial(S) ** (1 / 2 ** (m + 2))
                            self._add("absorb_RS", m, ell, R, S, nf, _mul(k, _rhs_val(r)), r.status)
                        if "derivative" in which:
                            for I in mi_enumerate(n, 1):
                                for J in mi_enumerate(n, 1):
                                    I, J = tuple(I), tuple(J)
                                    d = jet_derivative(f, I, J)
                                    lhs = self.norm(d, m, ell, R, S)
                                    k = math.sqrt(2 * self.hbar) ** (sum(I) + sum(J))
                                    lhs = _scale_eval(lhs, k)
                                    if eps == 1:
                                        RR, SS = _add_idx(R, I), _add_idx(S, J)
                                    else:
                                        RR, SS = _add_idx(R, J), _add_idx(S, I)
                                    r = self.norm(f, m, ell, RR, SS)
                                    kind = "eq" if m == 0 else "le"
                                    self._add(f"derivative[{_fmt(I)}|{_fmt(J)}]", m, ell, R, S, lhs,
                                              _rhs_val(r), r.status, kind)
                        if "pointwise" in which:
                            lhs = self.norm(fg_prod, m, ell, R, S)
                            r1 = self.norm(f, m + 1, ell, R, S, adaptive=False)
                            r2 = self.norm(g, m + 1, ell, R, S, adaptive=False)
                            self._add("pointwise", m, ell, R, S, lhs, _mul(_rhs_val(r1), _rhs_val(r2)),
                                      _rhs_status(r1, r2))
                        if "star_conj" in which:
                            lhs = self.norm(star_cg, m, ell, R, S)
                            r1 = self.norm(f, m + 1, 2**m + ell, R, S, adaptive=False)
                            r2 = self.norm(g, m + 1, ell, R, S, adaptive=False)
                            self._add("star_conj", m, ell, R, S, lhs, _mul(_rhs_val(r1), _rhs_val(r2)),
                                      _rhs_status(r1, r2))
                        if "conjugation" in which:
                            lhs = self.norm(fbar, m, ell, R, S)
                            r1 = self.norm(one, m + 1, ell, R, S, adaptive=False)
                            r2 = self.norm(f, m + 1, 2**m + ell, R, S, adaptive=False)
                            self._add("conjugation", m, ell, R, S, lhs, _mul(_rhs_val(r1), _rhs_val(r2)),
                                      _rhs_status(r1, r2))
                        if "hbar" in which:
                            lhs = self.norm(f, m, ell, R, S, hbar=self.hbar_low)
                            self._add("hbar_monotone", m, ell, R, S, lhs, nf.value, nf.status)
                if "taylor" in which and m == 0:
                    r = self.norm(f, 1, 1, z0, z0)
                    for R in idx:
                        for S in idx:
                            a = abs(sc.to_complex(f.coefficient(R, S)))
                            k = multi_factorial(R) ** 0.25 * multi_factorial(S) ** 0.5 / \
                                math.sqrt(2 * self.hbar) ** (sum(R) + sum(S))
                            lhs = SeriesEvaluation(a, "exact", 1, 0.0, WINDOW, a)
                            self._add("taylor_coefficient", 1, 1, R, S, lhs, _mul(k, r.value), r.status)
                if "star" in which:
                    for alpha in self.alphas:
                        self._star_rows(m, ell, alpha)
        return self.rows

    def _star_rows(self, m, ell, alpha):
        z0 = (0,) * self.n
        prod = _star(self.f, self.g, alpha)
        lhs = self.norm(prod, m, ell, z0, z0)
        c = continuity_constant(abs(alpha) / self.hbar, m, self.n)
        if epsilon_sign(m, ell) == 1:
            bf, bg = 2 * ell + 1, 2 * ell
        else:
            bf, bg = 2 * ell, 2 * ell + 1
        r1 = self.norm(self.f, m + 2, bf, z0, z0, adaptive=False)
        r2 = self.norm(self.g, m + 2, bg, z0, z0, adaptive=False)
        rhs = _mul(c.partial_sum, _rhs_val(r1), _rhs_val(r2))
        self._add(f"star[alpha={alpha:g}]", m, ell, z0, z0, lhs, rhs, _rhs_status(r1, r2))

    def summary(self) -> dict:
        out = {"pass": 0, "fail": 0, "unevaluable": 0}
        for r in self.rows:
            out[r.status] += 1
        return out


def _fmt(I):
    return format_index(I)


def _add_idx(A, B):
    return tuple(a + b for a, b in zip(A, B))


def _scale_eval(ev: SeriesEvaluation, k: float) -> SeriesEvaluation:
    return SeriesEvaluation(ev.value * k, ev.status, ev.terms_used, ev.last_term, ev.monotone_window,
                            ev.partial_sum * k, list(ev.notes))


def _is_exp(f: Jet) -> bool:
    from .jet import ExponentialProvider

    return isinstance(f.provider, ExponentialProvider)


def _pointwise(f: Jet, g: Jet) -> Jet:
    from .jet import jet_pointwise_mul
    from .wick import exp_pointwise_closed_form

    if _is_exp(f) and _is_exp(g):
        return exp_pointwise_closed_form(f, g)
    return jet_pointwise_mul(f, g)


def _star(f: Jet, g: Jet, alpha) -> Jet:
    from .wick import exp_star_closed_form, wick_star

    if _is_exp(f) and _is_exp(g):
        return exp_star_closed_form(f, g, alpha)
    return wick_star(f, g, alpha)


def _conj_star(f: Jet, g: Jet) -> Jet:
    from .jet import jet_conjugate

    return _star(jet_conjugate(f), g, f.hbar)


def inequality_suite(f: Jet, g: Jet, hbar=None, m_max: int = 2, RS_max: int = 2, tol: float = 1e-10,
                     alphas: Sequence = (), which=None, cutoffs=None) -> list:
    """Run every estimate on the grid m <= m_max, all l, |R|,|S| entries <= RS_max."""
    suite = InequalitySuite(f, g, hbar, m_max, RS_max, tol, cutoffs, alphas=alphas)
    return suite.run(which)


# --------------------------------------------------------------------------
# tables


CSV_COLUMNS = ["m", "l", "R", "S", "hbar", "value", "status", "terms_used", "last_term"]


def fmt_float(x: float) -> str:
    """Round-trip decimal formatting with 17 significant digits."""
    if x is None:
        return ""
    if isinstance(x, float) and not math.isfinite(x):
        return "" if x > 0 else "nan"
    return format(float(x), ".17g")


def seminorm_table(f: Jet, grid: Iterable[tuple], cutoffs=None, adaptive: bool = False) -> list:
    """Rows (m, l, R, S, hbar, evaluation) in grid order."""
    rows = []
    for m, ell, R, S, hbar in grid:
        ev = seminorm(f, SeminormParams(m, ell, R, S, hbar), cutoffs, adaptive)
        rows.append((m, ell, tuple(R), tuple(S), hbar, ev))
    return rows


def table_to_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for m, ell, R, S, hbar, ev in rows:
        value = "" if ev.status == "diverging" else fmt_float(ev.value)
        w.writerow([m, ell, format_index(R), format_index(S), fmt_float(float(hbar)), value, ev.status,
                    ev.terms_used, fmt_float(ev.last_term)])
    return buf.getvalue()
