"""End-to-end exit criteria, each timed against its budget.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary ends
with one PASS/FAIL line per criterion.
"""

import random
import statistics
import time
from fractions import Fraction as F

import pytest

from contract_kit.demand import best_response, brute_force_demand, greedy_gs_demand, greedy_ultra_demand
from contract_kit.instances import builtin_example, generate
from contract_kit.setfn import check_class
from contract_kit.single_agent import (
    enumerate_critical_values,
    envelope,
    fptas_contract,
    optimal_contract,
    supermodular_chain,
)
from contract_kit.team_binary import (
    brute_force_optimal_team,
    constant_approx_submodular_team,
    fptas_additive_team,
    is_nash_team,
    min_payment_contract,
    sqrt_sum_at_most,
    team_profit,
)
from contract_kit.team_multi import (
    best_response_dynamics,
    doubling_contract,
    enumerate_equilibria,
    find_equilibrium,
    is_nash_profile,
    is_subset_stable,
    lift_binary,
    lift_single,
)

import oracles

pytestmark = pytest.mark.acceptance

EPSILONS = (F(1, 2), F(1, 10), F(1, 100))


class Criterion:
    """Records number, title, elapsed time and notes for the summary hook."""

    def __init__(self, record_property, number, title, limit):
        self.record = record_property
        self.limit = limit
        record_property("criterion", number)
        record_property("title", title)
        record_property("limit", limit)

    def note(self, text):
        self.record("detail", text)

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        self.record("elapsed", elapsed)
        if exc_type is None:
            assert elapsed < self.limit, f"took {elapsed:.1f}s, budget {self.limit}s"


def _segments(inst):
    return [(s.set, s.alpha_lo, s.alpha_hi) for s in envelope(inst)]


def _gs_corpus(count):
    out, seed = [], 0
    while len(out) < count:
        kind = "additive" if seed % 2 else "coverage"
        params = {} if kind == "additive" else {"items_per_element": 1 + seed % 3}
        inst = generate(kind, 2 + seed % 9, seed, params)
        if check_class(inst.f, "gs"):
            out.append(inst)
        seed += 1
    return out


def test_criterion_01_additive_example(record_property):
    with Criterion(record_property, 1, "three-action additive example: envelope and optimum", 1):
        inst = builtin_example("ex3_1")
        assert _segments(inst) == [
            (0, 0, F(1, 3)),
            (0b001, F(1, 3), F(1, 2)),
            (0b011, F(1, 2), F(4, 5)),
            (0b111, F(4, 5), 1),
        ]
        res = optimal_contract(inst)
        assert (res.alpha, res.set, res.principal_utility) == (F(1, 2), 0b011, F(1, 4))
        assert res.principal_utility == oracles.optimal_contract_value(inst.f, inst.c)


def test_criterion_02_table_example_and_engines(record_property):
    with Criterion(record_property, 2, "three-action table example: envelope and engine agreement", 5):
        inst = builtin_example("ex3_2")
        cvs = enumerate_critical_values(inst)
        assert [cv.alpha for cv in cvs] == [F(1, 20), F(1, 10), F(1, 4), F(1, 2)]
        assert [s for s, _, _ in _segments(inst)] == [0, 0b001, 0b010, 0b011, 0b111]
        rng = random.Random(2)
        for _ in range(1000):
            p = [F(rng.randint(0, 100), rng.randint(1, 100)) for _ in range(3)]
            want = brute_force_demand(inst.f, p)
            assert want.set == oracles.demand(inst.f, p)
            for engine in (greedy_gs_demand, greedy_ultra_demand):
                got = engine(inst.f, p)
                assert (got.set, got.surplus) == (want.set, want.surplus)


def test_criterion_03_two_agent_team_example(record_property):
    with Criterion(record_property, 3, "two-agent team example: profits, payments, optimum", 1):
        inst = builtin_example("ex4_1")
        assert team_profit(inst, 0b01) == team_profit(inst, 0b10) == F(1, 4)
        assert min_payment_contract(inst, 0b11).alpha == (1, 1)
        assert team_profit(inst, 0b11) == F(-3, 4)
        s, g = brute_force_optimal_team(inst)
        assert s in (0b01, 0b10) and g == F(1, 4)


def test_criterion_04_greedy_demand_on_gs(record_property):
    with Criterion(record_property, 4, "greedy demand engines equal brute force on gross-substitutes corpus", 120) as crit:
        corpus = _gs_corpus(200)
        queries = 0
        for k, inst in enumerate(corpus):
            rng = random.Random(k)
            for _ in range(50):
                p = [F(rng.randint(0, 60), rng.choice((20, 50, 100))) for _ in range(inst.n)]
                want = brute_force_demand(inst.f, p)
                for engine in (greedy_gs_demand, greedy_ultra_demand):
                    got = engine(inst.f, p)
                    assert (got.set, got.surplus) == (want.set, want.surplus)
                queries += 1
        assert len(corpus) >= 200 and max(inst.n for inst in corpus) <= 10
        crit.note(f"{len(corpus)} instances, {queries} price vectors")


def test_criterion_05_critical_value_bounds(record_property):
    with Criterion(record_property, 5, "critical-value count and nested chains", 120) as crit:
        worst = 0
        for inst in _gs_corpus(200):
            count = len(enumerate_critical_values(inst, engine="gs"))
            assert count <= inst.n * (inst.n + 1) // 2
            worst = max(worst, count)
        for seed in range(200):
            inst = generate("supermodular_square", 2 + seed % 9, seed)
            chain = supermodular_chain(inst)
            sets = [envelope(inst)[0].set] + [s for _, s in chain]
            assert all(a & ~b == 0 and a != b for a, b in zip(sets, sets[1:]))
            assert len(chain) <= inst.n
            assert [a for a, _ in chain] == [cv.alpha for cv in enumerate_critical_values(inst)]
        crit.note(f"largest gross-substitutes count {worst}")


def test_criterion_06_fptas_guarantees(record_property):
    kinds = ("additive", "coverage", "xos", "supermodular_square")
    with Criterion(record_property, 6, "approximation schemes reach (1 - eps) of the optimum", 300) as crit:
        worst_single = worst_team = F(1)
        for seed in range(200):
            inst = generate(kinds[seed % 4], 2 + seed % 11, seed)
            opt = oracles.optimal_contract_value(inst.f, inst.c)
            for eps in EPSILONS:
                got = fptas_contract(inst, eps).principal_utility
                assert got >= (1 - eps) * opt
                if opt > 0:
                    worst_single = min(worst_single, got / opt)
        for seed in range(200):
            team = generate("binary_team", 2 + seed % 11, seed, {"function": "additive"})
            g_opt = oracles.team_profit(team.f, team.c, oracles.optimal_team(team.f, team.c))
            for eps in EPSILONS:
                s, g = fptas_additive_team(team, eps)
                assert g == oracles.team_profit(team.f, team.c, s)
                assert g >= (1 - eps) * g_opt
                if g_opt > 0:
                    worst_team = min(worst_team, g / g_opt)
        crit.note(f"worst ratio single {float(worst_single):.4f}, team {float(worst_team):.4f}")


def test_criterion_07_constant_factor_teams(record_property):
    with Criterion(record_property, 7, "constant-factor team on coverage rewards, at least 1/128 of optimum", 300) as crit:
        ratios, zero = [], 0
        for seed in range(200):
            inst = generate("binary_team", 2 + seed % 9, seed, {"function": "coverage"})
            g_opt = oracles.team_profit(inst.f, inst.c, oracles.optimal_team(inst.f, inst.c))
            res = constant_approx_submodular_team(inst)
            assert res.profit == oracles.team_profit(inst.f, inst.c, res.set)
            assert 128 * res.profit >= g_opt
            if g_opt > 0:
                ratios.append(float(res.profit / g_opt))
            else:
                zero += 1
        q = statistics.quantiles(ratios, n=4)
        summary = (f"ratio min {min(ratios):.3f}, quartiles {q[0]:.3f}/{q[1]:.3f}/{q[2]:.3f}, "
                   f"max {max(ratios):.3f}, exact {sum(r == 1 for r in ratios)}/{len(ratios)}, zero optimum {zero}")
        print(summary)
        crit.note(summary)


def _marginals(vals, s):
    return {i: vals[s] - vals[s & ~(1 << i)] for i in oracles.members(s)}


def test_criterion_08_structural_properties_on_xos(record_property):
    scales = ("1", "1/5", "1/25")
    with Criterion(record_property, 8, "decomposition, square-root cost and half-reward properties on XOS", 180) as crit:
        premise_hits = sqrt_checks = 0
        for seed in range(200):
            inst = generate("binary_team", 2 + seed % 9, seed, {"function": "xos", "cost_scale": scales[seed % 3]})
            f, c = inst.f, inst.c
            vals = oracles.values(f)
            s_opt = oracles.optimal_team(f, c)
            g_opt = oracles.team_profit(f, c, s_opt)
            small = sum(1 << i for i in range(inst.n) if 2 * c[i] <= vals[1 << i])
            best_one = max(oracles.team_profit(f, c, 1 << i) for i in range(inst.n))
            assert g_opt <= vals[s_opt & small] + max(0, best_one)
            for s in oracles.subsets_of(s_opt):
                assert sqrt_sum_at_most([c[i] for i in oracles.members(s)], vals[s])
                sqrt_checks += 1
            for s in range(1, 1 << inst.n):
                if vals[s] == 0:
                    continue
                marg = _marginals(vals, s)
                if all(m >= 0 and m * m >= 2 * c[i] * vals[s] for i, m in marg.items()):
                    premise_hits += 1
                    assert oracles.team_profit(f, c, s) >= vals[s] / 2
        assert premise_hits > 0
        crit.note(f"{sqrt_checks} square-root checks, {premise_hits} sets meeting the half-reward premise")


def test_criterion_09_equilibria(record_property):
    kinds = ("coverage", "xos", "additive", "supermodular_square")
    with Criterion(record_property, 9, "equilibria exist, dynamics converge, doubling keeps half", 300) as crit:
        doubling_checks = 0
        for seed in range(200):
            rng = random.Random(seed)
            kind = kinds[seed % 4]
            inst = generate("multi_team", 2 + seed % 9, seed, {"function": kind})
            vals = oracles.values(inst.f)
            by_value = sorted(range(1 << inst.n), key=lambda s: -vals[s])
            for _ in range(2):
                alpha = tuple(F(rng.randint(0, 10), 20) for _ in range(inst.agents))
                eqs = enumerate_equilibria(inst, alpha)
                assert eqs
                assert find_equilibrium(inst, alpha) in eqs
                res = best_response_dynamics(inst, alpha, start=rng.randrange(1 << inst.n))
                assert res.converged and is_nash_profile(inst, alpha, res.profile)
                pots = [step.potential for step in res.trace]
                assert all(a <= b for a, b in zip(pots, pots[1:]))
                if kind in ("coverage", "additive"):
                    top = next(vals[s] for s in by_value if is_subset_stable(inst, alpha, s))
                    for eps in (F(1, 100), F(1, 10)):
                        for s in enumerate_equilibria(inst, doubling_contract(alpha, eps)):
                            assert 2 * vals[s] >= top
                            doubling_checks += 1
        crit.note(f"{doubling_checks} doubled-contract equilibria checked")


def test_criterion_10_specializations(record_property):
    with Criterion(record_property, 10, "one-action agents and single owners match the simpler models", 60):
        for seed in range(100):
            rng = random.Random(seed)
            team = generate("binary_team", 2 + seed % 6, seed, {"function": ("coverage", "xos", "additive")[seed % 3]})
            lifted = lift_binary(team)
            contracts = [tuple(F(rng.randint(0, 10), 20) for _ in range(team.n))]
            s = rng.randrange(1 << team.n)
            if min_payment_contract(team, s) is not None:
                contracts.append(min_payment_contract(team, s).alpha)
            for alpha in contracts:
                for profile in range(1 << team.n):
                    assert is_nash_profile(lifted, alpha, profile) == is_nash_team(team, alpha, profile)
        for seed in range(100):
            rng = random.Random(seed)
            inst = generate(("coverage", "xos", "supermodular_square", "additive")[seed % 4], 1 + seed % 8, seed)
            alpha = F(rng.randint(1, 40), 40)
            got = find_equilibrium(lift_single(inst), (alpha,))
            assert got == best_response(inst.f, inst.c, alpha).set == oracles.best_response(inst.f, inst.c, alpha)

