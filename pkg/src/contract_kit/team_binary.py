"""Teams of agents with one binary action each.

Agent ``i`` either works (paying ``c_i``) or shirks.  To make a set ``S``
of agents work in equilibrium, each ``i`` in ``S`` must be paid a share
``alpha_i = c_i / f(i | S - i)`` of the reward.  The principal's profit is

    g(S) = (1 - sum_i alpha_i) f(S).
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import _scan
from .errors import InvalidArgument, require_exhaustive
from .rational import to_rational
from .setfn import Additive, SetFunction, check_class
from .single_agent import RewardCostInstance

NEG_INF = -math.inf
Profit = Union[Fraction, float]  # float only ever holds -inf


@dataclass(frozen=True)
class BinaryTeamInstance(RewardCostInstance):
    """``n`` agents; ``f`` is defined over sets of working agents."""


@dataclass(frozen=True)
class TeamContract:
    alpha: tuple[Fraction, ...]
    set: int


@dataclass(frozen=True)
class TeamApproxResult:
    set: int
    alpha: tuple[Fraction, ...]
    profit: Fraction
    source: str  # "empty", "single", or "demand"


def min_payment_contract(inst: BinaryTeamInstance, s: int) -> Optional[TeamContract]:
    """Cheapest contract making ``s`` an equilibrium, or None if no contract can."""
    inst.f.check_mask(s)
    fs = inst.f.value(s)
    alpha = []
    for i in range(inst.n):
        if not s >> i & 1:
            alpha.append(Fraction(0))
            continue
        gain = fs - inst.f.value(s & ~(1 << i))
        if gain == 0:
            if inst.c[i] > 0:
                return None
            alpha.append(Fraction(0))
        else:
            alpha.append(inst.c[i] / gain)
    return TeamContract(tuple(alpha), s)


def team_profit(inst: BinaryTeamInstance, s: int) -> Profit:
    """``g(s)``, or ``-inf`` when ``s`` cannot be incentivized."""
    contract = min_payment_contract(inst, s)
    if contract is None:
        return NEG_INF
    return (1 - sum(contract.alpha)) * inst.f.value(s)


def is_nash_team(inst: BinaryTeamInstance, alpha: Sequence, s: int) -> bool:
    alpha = [to_rational(a) for a in alpha]
    if len(alpha) != inst.n:
        raise InvalidArgument(f"expected {inst.n} payments, got {len(alpha)}")
    if any(a < 0 for a in alpha):
        raise InvalidArgument("payments must be nonnegative")
    inst.f.check_mask(s)
    fs = inst.f.value(s)
    for i in range(inst.n):
        bit = 1 << i
        if s & bit:
            if alpha[i] * fs - inst.c[i] < alpha[i] * inst.f.value(s & ~bit):
                return False
        elif alpha[i] * fs < alpha[i] * inst.f.value(s | bit) - inst.c[i]:
            return False
    return True


def _float_profits(inst: BinaryTeamInstance) -> tuple[np.ndarray, np.ndarray]:
    """Float profits for every set, plus a flag for sets whose float value is unreliable.

    A set is flagged when some costly member has a marginal so small that
    the float ratio ``c_i / marginal`` may carry a large relative error.
    """
    n = inst.n
    table = inst.f.float_table
    masks = _scan.all_masks(n)
    scale = float(table[-1]) if table[-1] > 0 else 1.0
    ratio_sum = np.zeros(1 << n)
    fragile = np.zeros(1 << n, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n):
            bit = 1 << i
            member = (masks & bit) != 0
            cost = float(inst.c[i])
            if cost == 0:
                continue
            gain = table - table[masks & ~bit]
            fragile |= member & (np.abs(gain) < 1e-6 * scale)
            ratio_sum += np.where(member, np.where(gain > 0, cost / gain, np.inf), 0.0)
        profits = np.where(np.isinf(ratio_sum), -np.inf, (1.0 - ratio_sum) * table)
    return profits, fragile


def brute_force_optimal_team(inst: BinaryTeamInstance) -> tuple[int, Fraction]:
    """Exact profit maximizer; ties go to the larger ``f``, then the smaller bitmask."""
    require_exhaustive(inst.n, "brute_force_optimal_team")
    profits, fragile = _float_profits(inst)
    top = max(float(profits.max()), 0.0)
    near = np.isfinite(profits) & (profits >= top - 1e-6 * (1.0 + abs(top)))
    candidates = set(np.flatnonzero(near | fragile).tolist()) | {0}
    table = inst.f.table

    def key(s):
        g = team_profit(inst, s)
        return (g, table[s], -s)

    best = max(candidates, key=key)
    return best, team_profit(inst, best)


def best_single_agent(inst: BinaryTeamInstance) -> tuple[int, Profit]:
    """Best one-agent team ``(i, g({i}))``; smallest index among ties."""
    if inst.n == 0:
        raise InvalidArgument("no agents")
    return max(((i, team_profit(inst, 1 << i)) for i in range(inst.n)), key=lambda t: (t[1], -t[0]))


def _singleton_weights(f: SetFunction) -> list[Fraction]:
    if isinstance(f, Additive):
        return list(f.weights)
    require_exhaustive(f.n, "additivity check")
    if not check_class(f, "additive"):
        raise InvalidArgument("fptas_additive_team needs an additive reward function")
    return [f.singleton(i) for i in range(f.n)]


def _cheapest_cover(units: list[int], costs: list[int]) -> tuple[np.ndarray, list[np.ndarray]]:
    """Knapsack over rounded units: least total cost reaching at least ``k`` units.

    Returns the cost array indexed by ``k`` (``-1`` where unreachable) and,
    per item, the boolean array of ``k`` values where that item was taken.
    """
    total = sum(units)
    inf = np.iinfo(np.int64).max
    best = np.full(total + 1, inf, dtype=np.int64)
    best[0] = 0
    took = []
    ks = np.arange(total + 1)
    for r, q in zip(units, costs):
        prev = best[np.maximum(ks - r, 0)]
        cand = np.where(prev == inf, inf, prev + q)
        take = cand < best
        best = np.where(take, cand, best)
        took.append(take)
    return np.where(best == inf, -1, best), took


def _trace(took: list[np.ndarray], units: list[int], k: int) -> list[int]:
    chosen = []
    for j in range(len(units) - 1, -1, -1):
        if took[j][k]:
            chosen.append(j)
            k = max(k - units[j], 0)
    return chosen


def fptas_additive_team(inst: BinaryTeamInstance, epsilon) -> tuple[int, Profit]:
    """Additive rewards: a team with profit at least ``(1 - epsilon)`` times optimal.

    For each guess ``b`` of the largest member value, values are rounded
    down to multiples of ``(epsilon / n) b`` and a knapsack finds, for each
    rounded target, the team with the smallest total ratio ``c_i / f_i``.
    The best estimate is re-scored with the exact profit.
    """
    epsilon = to_rational(epsilon)
    if not 0 < epsilon < 1:
        raise InvalidArgument(f"epsilon must lie in (0, 1), got {epsilon}")
    weights = _singleton_weights(inst.f)
    n = inst.n
    active = [i for i in range(n) if weights[i] > 0]
    ratios = {i: inst.c[i] / weights[i] for i in active}
    denom = math.lcm(*(r.denominator for r in ratios.values())) if ratios else 1
    scaled = {i: int(ratios[i] * denom) for i in active}
    if any(v >= 2**62 // (n + 1) for v in scaled.values()):
        raise InvalidArgument("cost/value ratios are too finely divided for the knapsack")

    best_est, best_set = Fraction(0), 0
    for b in sorted({weights[i] for i in active}):
        unit = epsilon * b / n
        pool = [i for i in active if weights[i] <= b]
        units = [math.floor(weights[i] / unit) for i in pool]
        cover, took = _cheapest_cover(units, [scaled[i] for i in pool])
        for k in np.flatnonzero(cover >= 0).tolist():
            est = (denom - int(cover[k])) * k * unit / denom
            if est > best_est:
                best_est = est
                best_set = sum(1 << pool[j] for j in _trace(took, units, k))
    g = team_profit(inst, best_set)
    if g < 0:
        return 0, Fraction(0)
    return best_set, g


def scale_down_submodular(f: SetFunction, t: int, psi) -> int:
    """Shrink ``t`` towards value ``psi``.

    Repeatedly drops the highest-index element whose removal keeps the
    value at least ``psi``; stops when no element can go.
    """
    psi = to_rational(psi)
    f.check_mask(t)
    if psi < 0:
        raise InvalidArgument(f"psi must be nonnegative, got {psi}")
    if psi >= f.value(t):
        raise InvalidArgument(f"psi={psi} must be below f(T)={f.value(t)}")
    u = t
    while True:
        for i in reversed(_scan.elements(u)):
            if f.value(u & ~(1 << i)) >= psi:
                u &= ~(1 << i)
                break
        else:
            return u


# --- square-root prices -------------------------------------------------------

_SMALL_PRIMES = [p for p in range(2, 1000) if all(p % q for q in range(2, int(p**0.5) + 1))]
_PRECISIONS = (60, 120, 240, 480)


def _split_sqrt(a: Fraction) -> tuple[Fraction, int]:
    """Write ``sqrt(a)`` as ``coef * sqrt(r)`` with integer ``r`` stripped of small square factors."""
    num = a.numerator * a.denominator
    coef = Fraction(1, a.denominator)
    if num == 0:
        return Fraction(0), 1
    root = math.isqrt(num)
    if root * root == num:
        return coef * root, 1
    for p in _SMALL_PRIMES:
        sq = p * p
        if sq > num:
            break
        while num % sq == 0:
            num //= sq
            coef *= p
    root = math.isqrt(num)
    if root * root == num:
        return coef * root, 1
    return coef, num


def _sign(rational: Fraction, radicals: dict[int, Fraction]) -> int:
    """Sign of ``rational + sum coef * sqrt(r)`` over the given radicals."""
    terms = [(r, a) for r, a in radicals.items() if a != 0]
    if not terms:
        return (rational > 0) - (rational < 0)
    if len(terms) == 1:
        r, a = terms[0]
        sa = 1 if a > 0 else -1
        sq = (rational > 0) - (rational < 0)
        if sq == 0 or sq == sa:
            return sa
        lhs, rhs = rational * rational, a * a * r
        return sq if lhs > rhs else sa if lhs < rhs else 0
    for prec in _PRECISIONS:
        with decimal.localcontext() as ctx:
            ctx.prec = prec
            total = decimal.Decimal(rational.numerator) / rational.denominator
            for r, a in terms:
                total += decimal.Decimal(a.numerator) / a.denominator * decimal.Decimal(r).sqrt()
            if abs(total) > decimal.Decimal(10) ** (-(prec // 2)):
                return 1 if total > 0 else -1
    return 0


def sqrt_sum_at_most(radicands: Sequence, bound) -> bool:
    """Whether ``sum sqrt(a) <= sqrt(bound)``.

    Up to two radicands this is decided by cross-squaring.  Longer sums go
    through the radical sign test, which only reports a tie when the
    difference stays below the finest decimal precision it tries.
    """
    terms = [to_rational(a) for a in radicands]
    bound = to_rational(bound)
    if any(a < 0 for a in terms) or bound < 0:
        raise InvalidArgument("radicands must be nonnegative")
    if len(terms) <= 1:
        return sum(terms, Fraction(0)) <= bound
    if len(terms) == 2:
        a, b = terms
        slack = bound - a - b
        return slack >= 0 and 4 * a * b <= slack * slack
    radicals: dict[int, Fraction] = {}
    rational = Fraction(0)
    for a, sign in [(a, 1) for a in terms] + [(bound, -1)]:
        coef, r = _split_sqrt(a)
        coef *= sign
        if r == 1:
            rational += coef
        else:
            radicals[r] = radicals.get(r, Fraction(0)) + coef
    return _sign(rational, radicals) <= 0


def _sqrt_price_demand(f: SetFunction, radicands: dict[int, Fraction]) -> int:
    """Demand set under prices ``sqrt(a_i)`` over the agents in ``radicands``.

    A float pass shortlists candidates; the shortlist is ranked by exact
    sign tests on sums of square roots.
    """
    n = f.n
    allowed = sum(1 << i for i in radicands)
    prices = np.zeros(n)
    parts = {}
    for i, a in radicands.items():
        prices[i] = math.sqrt(a)
        parts[i] = _split_sqrt(a)
    scores = f.float_table - _scan.bit_matrix(n) @ prices
    scores = np.where((_scan.all_masks(n) & ~allowed) == 0, scores, -np.inf)
    short = _scan.shortlist(scores, float(prices.sum()) + float(f.float_table[-1]))

    def compare(x: int, y: int) -> int:
        rational = f.value(x) - f.value(y)
        radicals: dict[int, Fraction] = {}
        for s, sign in ((x, -1), (y, 1)):
            for i in _scan.elements(s):
                coef, r = parts[i]
                if r == 1:
                    rational += sign * coef
                else:
                    radicals[r] = radicals.get(r, Fraction(0)) + sign * coef
        return _sign(rational, radicals)

    best = None
    for s in short.tolist():
        if best is None:
            best = s
            continue
        verdict = compare(s, best)
        if verdict > 0 or (verdict == 0 and (f.value(s), -s) > (f.value(best), -best)):
            best = s
    return best


def constant_approx_submodular_team(inst: BinaryTeamInstance) -> TeamApproxResult:
    """Constant-factor team for submodular rewards.

    Candidates: the empty team, the best single agent, and for each guess
    ``v`` of the optimal reward a team built from the "small" agents
    (``c_i <= f({i}) / 2``): their demand set at prices ``sqrt(c_i v) / 2``,
    shrunk to value about ``v / 32``.  Returns the most profitable one.
    """
    require_exhaustive(inst.n, "constant_approx_submodular_team")
    f = inst.f
    if not check_class(f, "submodular"):
        raise InvalidArgument("constant_approx_submodular_team needs a submodular reward function")
    n = inst.n
    singles = [f.singleton(i) for i in range(n)]
    candidates: list[tuple[int, str]] = [(0, "empty")]
    if n:
        candidates.append((1 << best_single_agent(inst)[0], "single"))
    top = max(singles, default=Fraction(0))
    small = [i for i in range(n) if singles[i] > 0 and 2 * inst.c[i] <= singles[i]]
    if top > 0 and small:
        steps = (n - 1).bit_length() + 1
        for k in range(steps + 1):
            v = top * 2**k
            t = _sqrt_price_demand(f, {i: inst.c[i] * v / 4 for i in small})
            psi = v / 32
            u = scale_down_submodular(f, t, psi) if f.value(t) > psi else t
            candidates.append((u, "demand"))

    def key(cand):
        s, _ = cand
        return (team_profit(inst, s), f.value(s), -s)

    s, source = max(candidates, key=key)
    contract = min_payment_contract(inst, s)
    return TeamApproxResult(s, contract.alpha, team_profit(inst, s), source)
