"""Monotone normalized set functions over small ground sets.

Subsets are bitmasks: bit ``j`` set means element ``j`` (0-indexed) is in
the set.  Every representation answers exact value queries with
:class:`fractions.Fraction`; none of them ever returns a float.

Five representations are provided:

* :class:`Explicit` - a full table of ``2^n`` values indexed by bitmask.
* :class:`Additive` - ``f(S) = sum of w_i over S``.
* :class:`Coverage` - weighted items; each element covers a set of items and
  ``f(S)`` is the total weight of items covered by ``S``.
* :class:`XOS` - maximum over a list of additive clauses.
* :class:`SupermodularSquare` - ``f(S) = (sum_S w)^2 / (sum_all w)^2``.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import _scan
from .errors import (
    EXPLICIT_TABLE_LIMIT,
    InvalidArgument,
    require_exhaustive,
)
from .rational import to_rational

CLASSES = ("additive", "submodular", "supermodular", "subadditive", "gs", "xos_certificate")

# Value queries go through a cached table up to this size.
_TABLE_CACHE_N = 16


class SetFunction:
    """Common behaviour for all representations.

    Subclasses implement ``n`` and ``_eval(mask)``; they may override
    ``_build_table`` with a faster incremental construction.
    """

    kind: str = ""

    @property
    def n(self) -> int:
        raise NotImplementedError

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def _eval(self, mask: int) -> Fraction:
        raise NotImplementedError

    def _build_table(self) -> list[Fraction]:
        return [self._eval(s) for s in range(1 << self.n)]

    @cached_property
    def table(self) -> tuple[Fraction, ...]:
        """All ``2^n`` values, indexed by bitmask."""
        return tuple(self._build_table())

    @cached_property
    def float_table(self) -> np.ndarray:
        arr = np.array([float(v) for v in self.table], dtype=np.float64)
        arr.setflags(write=False)
        return arr

    def check_mask(self, mask: int) -> None:
        if not isinstance(mask, (int, np.integer)) or isinstance(mask, bool):
            raise InvalidArgument(f"subset must be an integer bitmask, got {mask!r}")
        if mask < 0 or mask >> self.n:
            raise InvalidArgument(f"bitmask {mask:#b} has bits outside the ground set of size {self.n}")

    def value(self, mask: int) -> Fraction:
        self.check_mask(mask)
        mask = int(mask)
        if self.n <= _TABLE_CACHE_N:
            return self.table[mask]
        return self._eval(mask)

    def __call__(self, mask: int) -> Fraction:
        return self.value(mask)

    def marginal(self, s: int, t: int) -> Fraction:
        """``f(S | T) = f(S u T) - f(T)``."""
        self.check_mask(s)
        self.check_mask(t)
        return self.value(int(s) | int(t)) - self.value(int(t))

    def singleton(self, i: int) -> Fraction:
        return self.value(1 << i)


def _validate_weights(weights, name) -> tuple[Fraction, ...]:
    out = tuple(to_rational(w) for w in weights)
    for i, w in enumerate(out):
        if w < 0:
            raise InvalidArgument(f"{name}[{i}] = {w} is negative; the function would not be monotone")
    return out


@dataclass(frozen=True)
class Explicit(SetFunction):
    values: tuple[Fraction, ...]

    kind = "explicit"

    def __post_init__(self):
        vals = tuple(to_rational(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        size = len(vals)
        n = size.bit_length() - 1
        if size == 0 or size != 1 << n:
            raise InvalidArgument(f"explicit table length must be a power of two, got {size}")
        if n > EXPLICIT_TABLE_LIMIT:
            raise InvalidArgument(f"explicit tables are capped at n={EXPLICIT_TABLE_LIMIT}")
        if vals[0] != 0:
            raise InvalidArgument(f"f(empty) must be 0 (normalized), got {vals[0]}")
        bad = _monotonicity_violation(vals, n)
        if bad is not None:
            s, j = bad
            raise InvalidArgument(
                f"not monotone: f({_show(s)}) = {vals[s]} > f({_show(s | 1 << j)}) = {vals[s | 1 << j]}"
            )

    @property
    def n(self) -> int:
        return len(self.values).bit_length() - 1

    def _eval(self, mask):
        return self.values[mask]

    def _build_table(self):
        return list(self.values)


def _show(mask: int) -> str:
    return "{" + ",".join(str(j + 1) for j in _scan.elements(mask)) + "}"


def _monotonicity_violation(vals, n):
    """First ``(S, j)`` with ``f(S) > f(S + j)``, or None."""
    approx = np.array([float(v) for v in vals])
    tol = _scan.margin(float(np.abs(approx).max()))
    masks = _scan.all_masks(n)
    for j in range(n):
        base = masks[(masks >> j) & 1 == 0]
        diff = approx[base | (1 << j)] - approx[base]
        # exact recheck wherever float cannot certify the sign
        suspect = base[diff <= tol]
        for s in suspect.tolist():
            if vals[s] > vals[s | 1 << j]:
                return s, j
    return None


@dataclass(frozen=True)
class Additive(SetFunction):
    weights: tuple[Fraction, ...]

    kind = "additive"

    def __post_init__(self):
        object.__setattr__(self, "weights", _validate_weights(self.weights, "weights"))

    @property
    def n(self):
        return len(self.weights)

    def _eval(self, mask):
        return sum((self.weights[j] for j in _scan.elements(mask)), Fraction(0))

    def _build_table(self):
        t = [Fraction(0)] * (1 << self.n)
        for s in range(1, 1 << self.n):
            low = s & -s
            t[s] = t[s ^ low] + self.weights[low.bit_length() - 1]
        return t


@dataclass(frozen=True)
class Coverage(SetFunction):
    """Weighted coverage: element ``j`` covers the items in ``covers[j]``."""

    item_weights: tuple[Fraction, ...]
    covers: tuple[tuple[int, ...], ...]

    kind = "coverage"

    def __post_init__(self):
        object.__setattr__(self, "item_weights", _validate_weights(self.item_weights, "item_weights"))
        covers = tuple(tuple(sorted(set(int(i) for i in c))) for c in self.covers)
        for j, c in enumerate(covers):
            for item in c:
                if not 0 <= item < len(self.item_weights):
                    raise InvalidArgument(f"covers[{j}] references unknown item {item}")
        object.__setattr__(self, "covers", covers)

    @property
    def n(self):
        return len(self.covers)

    @cached_property
    def _item_masks(self):
        return [sum(1 << i for i in c) for c in self.covers]

    def _weight_of(self, items: int) -> Fraction:
        return sum((self.item_weights[i] for i in _scan.elements(items)), Fraction(0))

    def _eval(self, mask):
        items = 0
        for j in _scan.elements(mask):
            items |= self._item_masks[j]
        return self._weight_of(items)

    def _build_table(self):
        size = 1 << self.n
        union = [0] * size
        for s in range(1, size):
            low = s & -s
            union[s] = union[s ^ low] | self._item_masks[low.bit_length() - 1]
        memo: dict[int, Fraction] = {}
        out = []
        for u in union:
            v = memo.get(u)
            if v is None:
                v = memo[u] = self._weight_of(u)
            out.append(v)
        return out


@dataclass(frozen=True)
class XOS(SetFunction):
    """Maximum over additive clauses; ``clauses[k][j]`` is clause k's weight on j."""

    clauses: tuple[tuple[Fraction, ...], ...]

    kind = "xos"

    def __post_init__(self):
        if not self.clauses:
            raise InvalidArgument("an XOS function needs at least one clause")
        clauses = tuple(_validate_weights(c, f"clauses[{k}]") for k, c in enumerate(self.clauses))
        widths = {len(c) for c in clauses}
        if len(widths) != 1:
            raise InvalidArgument("all XOS clauses must have one weight per element")
        object.__setattr__(self, "clauses", clauses)

    @property
    def n(self):
        return len(self.clauses[0])

    def _eval(self, mask):
        members = _scan.elements(mask)
        return max(sum((c[j] for j in members), Fraction(0)) for c in self.clauses)

    def _build_table(self):
        best = None
        for c in self.clauses:
            t = Additive(c).table
            best = list(t) if best is None else [max(a, b) for a, b in zip(best, t)]
        return best


@dataclass(frozen=True)
class SupermodularSquare(SetFunction):
    weights: tuple[Fraction, ...]

    kind = "supermodular_square"

    def __post_init__(self):
        w = _validate_weights(self.weights, "weights")
        if sum(w) <= 0:
            raise InvalidArgument("supermodular_square needs a positive total weight")
        object.__setattr__(self, "weights", w)

    @property
    def n(self):
        return len(self.weights)

    def _eval(self, mask):
        total = sum(self.weights)
        part = sum((self.weights[j] for j in _scan.elements(mask)), Fraction(0))
        return part * part / (total * total)

    def _build_table(self):
        total = sum(self.weights)
        sq = total * total
        return [s * s / sq for s in Additive(self.weights).table]


def value(f: SetFunction, mask: int) -> Fraction:
    return f.value(mask)


def marginal(f: SetFunction, s: int, t: int) -> Fraction:
    return f.marginal(s, t)


# --------------------------------------------------------------------------
# class membership


def _integer_table(f: SetFunction):
    """Exact table scaled to integers by the lcm of its denominators.

    Returns an int64 array when the scaled values fit comfortably, else an
    object array of Python ints; both support exact vectorised comparison.
    """
    table = f.table
    den = 1
    for v in table:
        den = math.lcm(den, v.denominator)
    ints = [v.numerator * (den // v.denominator) for v in table]
    if max(abs(x) for x in ints) < 1 << 60:
        return np.array(ints, dtype=np.int64)
    return np.array(ints, dtype=object)


def _pairwise_marginal_ok(F, n, supermodular):
    masks = _scan.all_masks(n)
    for j in range(n):
        for k in range(n):
            if j == k:
                continue
            base = masks[((masks >> j) & 1 == 0) & ((masks >> k) & 1 == 0)]
            bj, bk = 1 << j, 1 << k
            small = F[base | bj] - F[base]
            large = F[base | bj | bk] - F[base | bk]
            ok = small <= large if supermodular else large <= small
            if not np.all(ok):
                return False
    return True


def _triplet_ok(F, n):
    masks = _scan.all_masks(n)
    for i, j, k in itertools.combinations(range(n), 3):
        bi, bj, bk = 1 << i, 1 << j, 1 << k
        base = masks[(masks & (bi | bj | bk)) == 0]
        a = F[base | bi] + F[base | bj | bk]
        b = F[base | bj] + F[base | bi | bk]
        c = F[base | bk] + F[base | bi | bj]
        # the maximum of the three pairings must be attained at least twice
        if not (np.all(a <= np.maximum(b, c)) and np.all(b <= np.maximum(a, c)) and np.all(c <= np.maximum(a, b))):
            return False
    return True


def _subadditive_ok(F, n):
    masks = _scan.all_masks(n)
    # monotone f: disjoint pairs suffice
    for s in range(1 << n):
        t = masks[(masks & s) == 0]
        t = t[t > s]
        if t.size and not np.all(F[s] + F[t] >= F[t | s]):
            return False
    return True


def _additive_ok(f):
    singles = [f.value(1 << j) for j in range(f.n)]
    return list(f.table) == list(Additive(singles).table)


def _xos_matches(f, clauses):
    try:
        cert = XOS(tuple(tuple(c) for c in clauses))
    except InvalidArgument:
        return False
    if cert.n != f.n:
        return False
    return cert.table == f.table


def check_class(f: SetFunction, cls: str, clauses: Optional[Sequence[Sequence]] = None) -> bool:
    """Exact class membership by exhaustive verification of the defining inequalities.

    ``cls`` is one of ``additive``, ``submodular``, ``supermodular``,
    ``subadditive``, ``gs`` or ``xos_certificate``.  The last one checks that
    ``clauses`` (defaulting to ``f``'s own clauses when ``f`` is XOS)
    reproduce ``f`` exactly.  Raises :class:`LimitExceeded` above the
    exhaustive limit.
    """
    if cls not in CLASSES:
        raise InvalidArgument(f"unknown class {cls!r}; expected one of {', '.join(CLASSES)}")
    require_exhaustive(f.n, f"check_class({cls})")
    if cls == "additive":
        return _additive_ok(f)
    if cls == "xos_certificate":
        if clauses is None:
            if not isinstance(f, XOS):
                raise InvalidArgument("xos_certificate needs a clause list for non-XOS functions")
            clauses = f.clauses
        return _xos_matches(f, clauses)
    F = _integer_table(f)
    n = f.n
    if cls == "submodular":
        return _pairwise_marginal_ok(F, n, supermodular=False)
    if cls == "supermodular":
        return _pairwise_marginal_ok(F, n, supermodular=True)
    if cls == "gs":
        return _pairwise_marginal_ok(F, n, supermodular=False) and _triplet_ok(F, n)
    return _subadditive_ok(F, n)


# --------------------------------------------------------------------------
# greedy chains and the well-layered probe


def price_total(p: Sequence[Fraction], mask: int) -> Fraction:
    return sum((p[j] for j in _scan.elements(mask)), Fraction(0))


def greedy_chain(f: SetFunction, p: Sequence[Fraction]) -> list[int]:
    """Chain ``S_0 = {} < S_1 < ... < S_n`` built by always adding the best marginal.

    The step ignores the sign of the marginal surplus.  Ties go to the larger
    marginal value, then to the smaller index.
    """
    chain = [0]
    s = 0
    fs = f.value(0)
    for _ in range(f.n):
        best = None
        for x in range(f.n):
            if s >> x & 1:
                continue
            gain = f.value(s | 1 << x) - fs
            key = (gain - p[x], gain, -x)
            if best is None or key > best[0]:
                best = (key, x)
        s |= 1 << best[1]
        fs = f.value(s)
        chain.append(s)
    return chain


def layer_maxima(f: SetFunction, p: Sequence[Fraction]) -> list[Fraction]:
    """Best surplus ``f(S) - p(S)`` among sets of each size ``0..n``."""
    require_exhaustive(f.n, "layer_maxima")
    n = f.n
    scores = f.float_table - _scan.bit_matrix(n) @ np.array([float(x) for x in p])
    sizes = _scan.popcounts(n)
    mag = float(sum(p)) + 1.0
    out = []
    for k in range(n + 1):
        idx = np.flatnonzero(sizes == k)
        short = idx[_scan.shortlist(scores[idx], mag)]
        out.append(max(f.table[s] - price_total(p, s) for s in short.tolist()))
    return out


@dataclass(frozen=True)
class WellLayeredReport:
    consistent: bool
    counterexample: Optional[tuple[Fraction, ...]] = None
    layer: Optional[int] = None
    trials: int = 0


def well_layered_at(f: SetFunction, p: Sequence[Fraction]) -> Optional[int]:
    """First layer ``i`` whose greedy set is not a best size-``i`` set, or None."""
    p = [to_rational(x) for x in p]
    if len(p) != f.n or any(x < 0 for x in p):
        raise InvalidArgument("price vector must be nonnegative with one entry per element")
    best = layer_maxima(f, p)
    for i, s in enumerate(greedy_chain(f, p)):
        if f.value(s) - price_total(p, s) != best[i]:
            return i
    return None


def well_layered_probe(f: SetFunction, trials: int = 100, seed: int = 0, denominator: int = 1000) -> WellLayeredReport:
    """Sample random rational prices and test the greedy chain layer by layer.

    A ``consistent`` verdict is evidence only; it never certifies membership.
    """
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    rng = random.Random(seed)
    top = f.value(f.full)
    hi = max(1, math.ceil(top * denominator))
    for t in range(trials):
        p = tuple(Fraction(rng.randint(0, hi), denominator) for _ in range(f.n))
        layer = well_layered_at(f, p)
        if layer is not None:
            return WellLayeredReport(False, p, layer, t + 1)
    return WellLayeredReport(True, None, None, trials)
