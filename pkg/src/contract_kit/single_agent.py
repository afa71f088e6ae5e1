"""Single agent, many actions: envelope, critical values and optimal contracts.

The agent picks a set of actions ``S``; the project succeeds with
probability ``f(S)`` and the agent pays the additive cost ``c(S)``.  Under a
linear contract ``alpha`` the agent earns ``alpha f(S) - c(S)`` and the
principal keeps ``(1 - alpha) f(S)``.

As ``alpha`` sweeps ``[0, 1]`` the best response traces the upper envelope
of the lines ``alpha f(S) - c(S)``.  The points where it changes are the
critical values; an optimal contract always sits at one of them (or at 0).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .demand import DemandResult, best_response
from .errors import ConsistencyError, InvalidArgument, require_exhaustive
from .rational import fmt, to_rational
from .setfn import SetFunction, check_class, price_total


@dataclass(frozen=True)
class RewardCostInstance:
    """A success-probability function ``f`` with one nonnegative cost per element."""

    f: SetFunction
    c: tuple[Fraction, ...]

    def __post_init__(self):
        costs = tuple(to_rational(x) for x in self.c)
        object.__setattr__(self, "c", costs)
        if len(costs) != self.f.n:
            raise InvalidArgument(f"costs: got {len(costs)} costs for {self.f.n} actions")
        for i, x in enumerate(costs):
            if x < 0:
                raise InvalidArgument(f"costs[{i}]: {x} is negative")
        top = self.f.value(self.f.full)
        if top > 1:
            raise InvalidArgument(f"function: value of the full set is {top}, above 1")

    @property
    def n(self) -> int:
        return self.f.n

    def cost(self, s: int) -> Fraction:
        return price_total(self.c, s)


@dataclass(frozen=True)
class SingleAgentInstance(RewardCostInstance):
    """One agent choosing any subset of ``n`` actions."""


@dataclass(frozen=True)
class CriticalValue:
    """Contract level where the best response switches from ``before`` to ``after``."""

    alpha: Fraction
    before: int
    after: int


@dataclass(frozen=True)
class EnvelopeSegment:
    """``set`` is the best response on ``[alpha_lo, alpha_hi)`` (closed at 1 for the last one)."""

    set: int
    alpha_lo: Fraction
    alpha_hi: Fraction


@dataclass(frozen=True)
class ContractResult:
    alpha: Fraction
    set: int
    principal_utility: Fraction
    agent_utility: Fraction


def utilities(inst: SingleAgentInstance, alpha, s: int) -> tuple[Fraction, Fraction, Fraction]:
    """``(agent, principal, welfare)`` when the agent takes ``s`` under ``alpha``."""
    alpha = to_rational(alpha)
    if not 0 <= alpha <= 1:
        raise InvalidArgument(f"alpha must lie in [0, 1], got {alpha}")
    fs = inst.f.value(s)
    cs = inst.cost(s)
    return alpha * fs - cs, (1 - alpha) * fs, fs - cs


def _responder(inst, engine):
    memo: dict[Fraction, DemandResult] = {}

    def respond(alpha: Fraction) -> int:
        hit = memo.get(alpha)
        if hit is None:
            hit = memo[alpha] = best_response(inst.f, inst.c, alpha, engine)
        return hit.set

    return respond


def enumerate_critical_values(inst: SingleAgentInstance, lo=0, hi=1, engine: str = "brute") -> list[CriticalValue]:
    """All critical values in ``(lo, hi]``, by recursive bisection on line intersections.

    Each step intersects the lines of the responses at both ends.  If the
    response there ties with the left set, the interval holds exactly one
    critical value; otherwise the response is strictly above both lines and
    both halves are searched.  Uses one best-response query per step.
    """
    lo, hi = to_rational(lo), to_rational(hi)
    if not 0 <= lo < hi <= 1:
        raise InvalidArgument(f"need 0 <= lo < hi <= 1, got lo={lo}, hi={hi}")
    f = inst.f
    respond = _responder(inst, engine)

    def u(s, a):
        return a * f.value(s) - inst.cost(s)

    found = []
    stack = [(lo, hi, respond(lo), respond(hi))]
    while stack:
        left, right, s_left, s_right = stack.pop()
        if s_left == s_right:
            continue
        df = f.value(s_right) - f.value(s_left)
        if df <= 0:
            raise ConsistencyError(
                f"best responses at {left} and {right} do not increase in f; "
                f"engine {engine!r} may be inexact for this function"
            )
        mid = (inst.cost(s_right) - inst.cost(s_left)) / df
        if not left < mid <= right:
            raise ConsistencyError(f"intersection {mid} falls outside ({left}, {right}]")
        s_mid = respond(mid)
        gap = u(s_mid, mid) - u(s_left, mid)
        if gap < 0:
            raise ConsistencyError(f"engine {engine!r} returned a suboptimal response at alpha={mid}")
        if gap == 0:
            found.append(CriticalValue(mid, s_left, s_mid))
            if s_mid != s_right:
                stack.append((mid, right, s_mid, s_right))
        else:
            stack.append((mid, right, s_mid, s_right))
            stack.append((left, mid, s_left, s_mid))
    found.sort(key=lambda cv: cv.alpha)
    return found


def envelope(inst: SingleAgentInstance, lo=0, hi=1, engine: str = "brute") -> list[EnvelopeSegment]:
    """Upper envelope over ``[lo, hi]`` as half-open segments, last one closed.

    A critical value exactly at ``hi`` yields a final one-point segment.
    """
    lo, hi = to_rational(lo), to_rational(hi)
    cvs = enumerate_critical_values(inst, lo, hi, engine)
    current = best_response(inst.f, inst.c, lo, engine).set
    segments = []
    for cv in cvs:
        if cv.alpha > lo:
            segments.append(EnvelopeSegment(current, lo, cv.alpha))
        lo, current = cv.alpha, cv.after
    segments.append(EnvelopeSegment(current, lo, hi))
    return segments


def envelope_csv(inst: SingleAgentInstance, segments: Sequence[EnvelopeSegment]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha_lo", "alpha_hi", "set_bitmask", "f", "cost"])
    for seg in segments:
        w.writerow([fmt(seg.alpha_lo), fmt(seg.alpha_hi), seg.set, fmt(inst.f.value(seg.set)), fmt(inst.cost(seg.set))])
    return buf.getvalue()


def _contract(inst, alpha, s) -> ContractResult:
    agent, principal, _ = utilities(inst, alpha, s)
    return ContractResult(alpha, s, principal, agent)


def _best(results):
    return max(results, key=lambda r: (r.principal_utility, -r.alpha, -r.set))


def optimal_contract(inst: SingleAgentInstance, engine: str = "brute") -> ContractResult:
    """Exact optimum: evaluate 0 and every critical value (left segment endpoints)."""
    start = best_response(inst.f, inst.c, 0, engine).set
    results = [_contract(inst, Fraction(0), start)]
    results += [_contract(inst, cv.alpha, cv.after) for cv in enumerate_critical_values(inst, 0, 1, engine)]
    return _best(results)


def fptas_grid(n: int, epsilon: Fraction, welfare: Fraction) -> list[Fraction]:
    """Contract levels to probe, given the maximum welfare.

    The principal's share ``1 - alpha`` runs geometrically from 1 down to
    ``welfare / 2^n`` with ratio at least ``1 - epsilon`` between
    neighbours.  Shares are rounded up to dyadic rationals to keep the
    numbers small; rounding up only tightens the ratio.
    """
    alphas = [Fraction(0)]
    if welfare > 0:
        floor = Fraction(welfare) / (1 << n)
        den = 1
        while den * epsilon * floor < 4:
            den <<= 1
        share = Fraction(1)
        while share > floor:
            share = Fraction(math.ceil(share * (1 - epsilon) * den), den)
            alphas.append(1 - share)
    if alphas[-1] != 1:
        alphas.append(Fraction(1))
    return alphas


def fptas_contract(inst: SingleAgentInstance, epsilon, engine: str = "brute") -> ContractResult:
    """A contract worth at least ``(1 - epsilon)`` of the optimum, using only best responses.

    The optimum ``alpha*`` keeps a share ``1 - alpha* >= OPT >= W / 2^n``,
    where ``W`` is the maximum welfare (the agent's utility at ``alpha = 1``).
    Some probe ``alpha >= alpha*`` then keeps at least ``(1 - epsilon)`` of
    that share, and its response is worth at least ``f(S*)``.
    """
    epsilon = to_rational(epsilon)
    if not 0 < epsilon < 1:
        raise InvalidArgument(f"epsilon must lie in (0, 1), got {epsilon}")
    respond = _responder(inst, engine)
    top = respond(Fraction(1))
    welfare = inst.f.value(top) - inst.cost(top)
    return _best(_contract(inst, a, respond(a)) for a in fptas_grid(inst.n, epsilon, welfare))


def supermodular_chain(inst: SingleAgentInstance) -> list[tuple[Fraction, int]]:
    """Critical values of a supermodular instance with their (nested) responses.

    Verifies supermodularity exhaustively, then checks that each response
    contains the previous one.
    """
    require_exhaustive(inst.n, "supermodular_chain")
    if not check_class(inst.f, "supermodular"):
        raise InvalidArgument("supermodular_chain needs a supermodular reward function")
    chain = []
    for cv in enumerate_critical_values(inst, 0, 1, "brute"):
        if cv.before & ~cv.after:
            raise ConsistencyError(f"responses around alpha={cv.alpha} are not nested: {cv.before:#b} -> {cv.after:#b}")
        chain.append((cv.alpha, cv.after))
    if len(chain) > inst.n:
        raise ConsistencyError(f"{len(chain)} critical values exceed n={inst.n}")
    return chain
