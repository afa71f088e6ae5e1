"""Teams of agents that each control a group of actions.

Agent ``i`` owns the actions in ``partition[i]`` and picks any subset of
them.  Under a contract ``alpha`` (one share per agent) agent ``i`` earns
``alpha_i f(S) - c(S_i)``; the principal keeps ``(1 - sum alpha) f(S)``.
The game has the exact potential ``f(S) - sum_i c(S_i) / alpha_i``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import _scan
from .demand import brute_force_demand
from .errors import ConsistencyError, InvalidArgument, require_exhaustive
from .rational import fmt, to_rational
from .single_agent import RewardCostInstance, SingleAgentInstance
from .team_binary import BinaryTeamInstance

NEG_INF = -math.inf


@dataclass(frozen=True)
class MultiTeamInstance(RewardCostInstance):
    """``partition[i]`` lists the actions owned by agent ``i``; together they cover every action once."""

    partition: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        super().__post_init__()
        groups = tuple(tuple(int(j) for j in group) for group in self.partition)
        object.__setattr__(self, "partition", groups)
        if not groups:
            raise InvalidArgument("partition: at least one agent is required")
        seen: dict[int, int] = {}
        for i, group in enumerate(groups):
            for j in group:
                if not 0 <= j < self.f.n:
                    raise InvalidArgument(f"partition: agent {i} lists action {j}, outside 0..{self.f.n - 1}")
                if j in seen:
                    raise InvalidArgument(f"partition: action {j} is owned by agents {seen[j]} and {i}")
                seen[j] = i
        missing = sorted(set(range(self.f.n)) - set(seen))
        if missing:
            raise InvalidArgument(f"partition: actions {missing} have no owner")

    @property
    def agents(self) -> int:
        return len(self.partition)

    def agent_mask(self, i: int) -> int:
        return sum(1 << j for j in self.partition[i])

    def owner(self, j: int) -> int:
        for i, group in enumerate(self.partition):
            if j in group:
                return i
        raise InvalidArgument(f"action {j} out of range")


@dataclass(frozen=True)
class DynamicsStep:
    round: int
    agent: Optional[int]
    profile: int
    potential: object


@dataclass(frozen=True)
class DynamicsResult:
    profile: int
    trace: tuple[DynamicsStep, ...]
    converged: bool


def lift_binary(inst: BinaryTeamInstance) -> MultiTeamInstance:
    """One action per agent."""
    return MultiTeamInstance(inst.f, inst.c, tuple((i,) for i in range(inst.n)))


def lift_single(inst: SingleAgentInstance) -> MultiTeamInstance:
    """A single agent owning every action."""
    return MultiTeamInstance(inst.f, inst.c, (tuple(range(inst.n)),))


def _contract(inst: MultiTeamInstance, alpha) -> list[Fraction]:
    shares = [to_rational(a) for a in alpha]
    if len(shares) != inst.agents:
        raise InvalidArgument(f"expected {inst.agents} shares, got {len(shares)}")
    for i, a in enumerate(shares):
        if a < 0:
            raise InvalidArgument(f"share alpha[{i}] = {a} is negative")
    return shares


def doubling_contract(alpha: Sequence, epsilon) -> tuple[Fraction, ...]:
    epsilon = to_rational(epsilon)
    if epsilon <= 0:
        raise InvalidArgument(f"epsilon must be positive, got {epsilon}")
    return tuple(2 * to_rational(a) + epsilon for a in alpha)


def profile_utilities(inst: MultiTeamInstance, alpha, s: int) -> tuple[tuple[Fraction, ...], Fraction]:
    shares = _contract(inst, alpha)
    inst.f.check_mask(s)
    fs = inst.f.value(s)
    agents = tuple(shares[i] * fs - inst.cost(s & inst.agent_mask(i)) for i in range(inst.agents))
    return agents, (1 - sum(shares)) * fs


def potential(inst: MultiTeamInstance, alpha, s: int):
    """``f(S) - sum_i c(S_i) / alpha_i``; ``-inf`` if an unpaid agent bears a cost."""
    shares = _contract(inst, alpha)
    inst.f.check_mask(s)
    total = inst.f.value(s)
    for i, a in enumerate(shares):
        cost = inst.cost(s & inst.agent_mask(i))
        if cost == 0:
            continue
        if a == 0:
            return NEG_INF
        total -= cost / a
    return total


def _agent_value(inst, share, others, t):
    return share * inst.f.value(others | t) - inst.cost(t)


def _no_profitable_deviation(inst, alpha, s: int, own_only: bool) -> bool:
    shares = _contract(inst, alpha)
    inst.f.check_mask(s)
    for i in range(inst.agents):
        mine = inst.agent_mask(i)
        others = s & ~mine
        current = _agent_value(inst, shares[i], others, s & mine)
        for t in _scan.submasks(s & mine if own_only else mine):
            if _agent_value(inst, shares[i], others, t) > current:
                return False
    return True


def is_nash_profile(inst: MultiTeamInstance, alpha, s: int) -> bool:
    return _no_profitable_deviation(inst, alpha, s, own_only=False)


def is_subset_stable(inst: MultiTeamInstance, alpha, s: int) -> bool:
    """No agent gains by dropping some of its own chosen actions."""
    return _no_profitable_deviation(inst, alpha, s, own_only=True)


def find_equilibrium(inst: MultiTeamInstance, alpha) -> int:
    """Potential maximizer (ties: larger ``f``, then smaller bitmask); always a Nash profile.

    Computed as one demand query with action ``j`` priced at
    ``c_j / alpha_owner``.  Costly actions of unpaid agents are excluded.
    """
    shares = _contract(inst, alpha)
    require_exhaustive(inst.n, "find_equilibrium")
    prices = []
    allowed = 0
    for i, group in enumerate(inst.partition):
        for j in group:
            if inst.c[j] == 0 or shares[i] > 0:
                allowed |= 1 << j
    for j in range(inst.n):
        a = shares[inst.owner(j)]
        prices.append(inst.c[j] / a if a > 0 else Fraction(0))
    s = brute_force_demand(inst.f, prices, within=allowed).set
    if not is_nash_profile(inst, shares, s):
        raise ConsistencyError(f"potential maximizer {s:#b} is not an equilibrium")
    return s


def _best_move(inst, share, others, mine):
    def key(t):
        return (_agent_value(inst, share, others, t), inst.f.value(others | t), -t)

    return max(_scan.submasks(mine), key=key)


def best_response_dynamics(inst: MultiTeamInstance, alpha, start: int = 0, max_rounds: int = 1000) -> DynamicsResult:
    """Round-robin best responses; an agent moves only on a strict improvement."""
    shares = _contract(inst, alpha)
    inst.f.check_mask(start)
    if max_rounds < 0:
        raise InvalidArgument("max_rounds must be nonnegative")
    s = start
    trace = [DynamicsStep(0, None, s, potential(inst, shares, s))]
    for rnd in range(1, max_rounds + 1):
        moved = False
        for i in range(inst.agents):
            mine = inst.agent_mask(i)
            others = s & ~mine
            t = _best_move(inst, shares[i], others, mine)
            if _agent_value(inst, shares[i], others, t) > _agent_value(inst, shares[i], others, s & mine):
                s = others | t
                trace.append(DynamicsStep(rnd, i, s, potential(inst, shares, s)))
                moved = True
        if not moved:
            return DynamicsResult(s, tuple(trace), True)
    return DynamicsResult(s, tuple(trace), False)


def enumerate_equilibria(inst: MultiTeamInstance, alpha) -> list[int]:
    """Every pure Nash profile, by ``f`` descending then bitmask.

    A float pass discards profiles where some agent clearly gains by
    deviating; the rest are confirmed exactly.
    """
    shares = _contract(inst, alpha)
    require_exhaustive(inst.n, "enumerate_equilibria")
    n = inst.n
    masks = _scan.all_masks(n)
    table = inst.f.float_table
    costs = _scan.bit_matrix(n) @ np.array([float(x) for x in inst.c])
    maybe = np.ones(1 << n, dtype=bool)
    for i in range(inst.agents):
        mine = inst.agent_mask(i)
        others = masks & ~mine
        a = float(shares[i])
        current = a * table - costs[masks & mine]
        best = np.full(1 << n, -np.inf)
        for t in _scan.submasks(mine):
            best = np.maximum(best, a * table[others | t] - costs[t])
        maybe &= best - current <= _scan.margin(a, float(costs[-1]))
    exact = [s for s in np.flatnonzero(maybe).tolist() if is_nash_profile(inst, shares, s)]
    values = inst.f.table
    exact.sort(key=lambda s: (-values[s], s))
    return exact


@dataclass(frozen=True)
class EquilibriumReport:
    profiles: tuple[int, ...]
    best: Optional[int]
    worst: Optional[int]


def equilibrium_report(inst: MultiTeamInstance, alpha) -> EquilibriumReport:
    """All equilibria plus the ones best and worst for the principal (ties go by ``f``, then bitmask)."""
    profiles = enumerate_equilibria(inst, alpha)
    if not profiles:
        return EquilibriumReport((), None, None)
    principal = {s: profile_utilities(inst, alpha, s)[1] for s in profiles}
    values = inst.f.table
    best = max(profiles, key=lambda s: (principal[s], values[s], -s))
    worst = min(profiles, key=lambda s: (principal[s], values[s], s))
    return EquilibriumReport(tuple(profiles), best, worst)


def _fmt_value(x) -> str:
    return "-inf" if x == NEG_INF else fmt(x)


def equilibria_csv(inst: MultiTeamInstance, alpha, profiles: Sequence[int]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["profile_bitmask", "f", "potential", "principal_utility"] + [f"agent_{i}_utility" for i in range(inst.agents)])
    for s in profiles:
        agents, principal = profile_utilities(inst, alpha, s)
        w.writerow([s, fmt(inst.f.value(s)), _fmt_value(potential(inst, alpha, s)), fmt(principal)] + [fmt(u) for u in agents])
    return buf.getvalue()


def dynamics_csv(inst: MultiTeamInstance, alpha, result: DynamicsResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["round", "agent", "profile_bitmask", "f", "potential"])
    for step in result.trace:
        agent = "" if step.agent is None else step.agent
        w.writerow([step.round, agent, step.profile, fmt(inst.f.value(step.profile)), _fmt_value(step.potential)])
    return buf.getvalue()
