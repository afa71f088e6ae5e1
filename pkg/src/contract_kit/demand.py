"""Demand queries and agent best responses.

A demand query asks for a set maximizing ``f(S) - p(S)``.  Three engines
answer it: exhaustive search (exact for every ``f``), the stop-at-first-
non-improvement greedy (exact for gross-substitutes ``f``) and the
full-chain greedy (exact for ultra ``f``).

All engines break ties toward the set with the larger value ``f(S)``, so
that a best response computed through a demand query favours the
principal.  Remaining ties go to the smaller bitmask (exhaustive) or the
smaller index / shorter prefix (greedy).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from . import _scan
from .errors import InvalidArgument, require_exhaustive
from .rational import to_rational
from .setfn import SetFunction, greedy_chain, price_total

ENGINES = ("brute", "gs", "ultra")


@dataclass(frozen=True)
class DemandResult:
    """A demanded set and its surplus ``f(set) - p(set)``.

    ``utility`` is filled in by :func:`best_response` with the agent's
    utility ``alpha f(set) - c(set)``.
    """

    set: int
    surplus: Fraction
    utility: Optional[Fraction] = None


def _prices(f: SetFunction, p) -> list[Fraction]:
    prices = [to_rational(x) for x in p]
    if len(prices) != f.n:
        raise InvalidArgument(f"expected {f.n} prices, got {len(prices)}")
    for i, x in enumerate(prices):
        if x < 0:
            raise InvalidArgument(f"price {i} is negative ({x})")
    return prices


def brute_force_demand(f: SetFunction, p: Sequence, within: Optional[int] = None) -> DemandResult:
    """Exact demand by scanning every subset (optionally only subsets of ``within``)."""
    prices = _prices(f, p)
    require_exhaustive(f.n, "brute_force_demand")
    n = f.n
    pf = np.array([float(x) for x in prices])
    scores = f.float_table - _scan.bit_matrix(n) @ pf
    if within is not None:
        scores = np.where((_scan.all_masks(n) & ~int(within)) == 0, scores, -np.inf)
    short = _scan.shortlist(scores, float(pf.sum()) + float(f.float_table[-1]))
    table = f.table

    def key(s):
        return (table[s] - price_total(prices, s), table[s], -s)

    best = max(short.tolist(), key=key)
    return DemandResult(best, table[best] - price_total(prices, best))


def greedy_gs_demand(f: SetFunction, p: Sequence) -> DemandResult:
    """Greedy demand for gross-substitutes functions.

    Adds the element with the best marginal surplus until no element has a
    positive one.  An element whose marginal surplus is exactly zero but
    whose marginal value is positive is still added.
    """
    prices = _prices(f, p)
    s = 0
    fs = f.value(0)
    for _ in range(f.n):
        best = None
        for x in range(f.n):
            if s >> x & 1:
                continue
            gain = f.value(s | 1 << x) - fs
            key = (gain - prices[x], gain, -x)
            if best is None or key > best[0]:
                best = (key, x)
        (net, gain, _), x = best
        if net < 0 or (net == 0 and gain <= 0):
            break
        s |= 1 << x
        fs = f.value(s)
    return DemandResult(s, fs - price_total(prices, s))


def greedy_ultra_demand(f: SetFunction, p: Sequence) -> DemandResult:
    """Greedy demand for ultra functions: best prefix of the full greedy chain."""
    prices = _prices(f, p)
    chain = greedy_chain(f, prices)
    best = max(
        range(len(chain)),
        key=lambda i: (f.value(chain[i]) - price_total(prices, chain[i]), f.value(chain[i]), -i),
    )
    s = chain[best]
    return DemandResult(s, f.value(s) - price_total(prices, s))


_ENGINE_FUNCS: dict[str, Callable[..., DemandResult]] = {
    "brute": brute_force_demand,
    "gs": greedy_gs_demand,
    "ultra": greedy_ultra_demand,
}


def demand(f: SetFunction, p: Sequence, engine: str = "brute") -> DemandResult:
    return engine_func(engine)(f, p)


def engine_func(engine: str):
    try:
        return _ENGINE_FUNCS[engine]
    except KeyError:
        raise InvalidArgument(f"unknown engine {engine!r}; expected one of {', '.join(ENGINES)}") from None


def zero_cost_mask(c: Sequence[Fraction]) -> int:
    return sum(1 << i for i, ci in enumerate(c) if ci == 0)


def max_value_subset(f: SetFunction, allowed: int) -> int:
    """Highest-value subset of ``allowed``; smallest bitmask among ties."""
    best = None
    for s in _scan.submasks(allowed):
        key = (f.value(s), -s)
        if best is None or key > best[0]:
            best = (key, s)
    return best[1]


def best_response(f: SetFunction, c: Sequence, alpha, engine: str = "brute") -> DemandResult:
    """Agent best response to a linear contract ``alpha``.

    For ``alpha > 0`` this is a demand query at prices ``c_i / alpha``.  At
    ``alpha = 0`` every costly action is priced out, so the response is the
    highest-value subset of the zero-cost actions.  The engine choice is
    advisory: ``gs``/``ultra`` are only exact inside their classes.
    """
    alpha = to_rational(alpha)
    costs = [to_rational(x) for x in c]
    if len(costs) != f.n:
        raise InvalidArgument(f"expected {f.n} costs, got {len(costs)}")
    if any(x < 0 for x in costs):
        raise InvalidArgument("costs must be nonnegative")
    if not 0 <= alpha <= 1:
        raise InvalidArgument(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0:
        s = max_value_subset(f, zero_cost_mask(costs))
        return DemandResult(s, f.value(s), Fraction(0))
    run = engine_func(engine)
    res = run(f, [x / alpha for x in costs])
    utility = alpha * f.value(res.set) - price_total(costs, res.set)
    return DemandResult(res.set, res.surplus, utility)
