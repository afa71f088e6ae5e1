"""``contract-kit`` command line.

Every command prints one JSON report on stdout.  Exact values are rational
strings; ``--decimal`` adds a parallel block with 20-digit decimal renderings
for display.  Sets are reported as a bitmask plus a list of members numbered
from 1.

Exit codes: 0 success (and "true" for check-class), 1 "false" for
check-class, 2 usage or input errors, 3 internal consistency failures.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence

from . import demand as demand_mod
from . import instances, single_agent, team_binary, team_multi
from ._scan import elements
from .errors import ConsistencyError, ContractKitError
from .rational import fmt, parse_list, to_decimal_str, to_rational
from .setfn import XOS, check_class

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
CLASSES = ("additive", "submodular", "supermodular", "subadditive", "gs", "xos_certificate")


class ModelMismatch(ContractKitError):
    pass


def _set(mask: int) -> dict:
    return {"bitmask": mask, "members": [j + 1 for j in elements(mask)]}


def _exact(obj):
    if isinstance(obj, Fraction):
        return fmt(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return "-inf" if obj < 0 else "inf"
    if isinstance(obj, dict):
        return {k: _exact(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_exact(v) for v in obj]
    return obj


def _decimal(obj):
    """Mirror of the payload keeping only rational leaves, rendered as decimals."""
    if isinstance(obj, Fraction):
        return to_decimal_str(obj)
    if isinstance(obj, dict):
        out = {k: _decimal(v) for k, v in obj.items()}
        return {k: v for k, v in out.items() if v is not None} or None
    if isinstance(obj, (list, tuple)):
        out = [_decimal(v) for v in obj]
        return out if any(v is not None for v in out) else None
    return None


def _load(source: str):
    path = Path(source)
    if path.is_file():
        return instances.load(path)
    if source in instances.EXAMPLES:
        return instances.builtin_example(source)
    raise ContractKitError(f"--instance: no file {source!r} and no built-in example of that name "
                           f"(built-ins: {', '.join(instances.EXAMPLES)})")


def _require(inst, *models: str):
    name = instances.model_name(inst)
    if name not in models:
        raise ModelMismatch(f"this command needs a {' or '.join(models)} instance, got {name}")
    return name


def _contract_payload(inst, res: single_agent.ContractResult) -> dict:
    return {
        "alpha": res.alpha,
        "set": _set(res.set),
        "f": inst.f.value(res.set),
        "cost": inst.cost(res.set),
        "principal_utility": res.principal_utility,
        "agent_utility": res.agent_utility,
    }


def _team_payload(inst, s: int, alpha: Sequence[Fraction], profit) -> dict:
    return {"set": _set(s), "alpha": list(alpha), "f": inst.f.value(s), "profit": profit}


def cmd_check_class(args, inst):
    clauses = None
    if args.cls == "xos_certificate":
        if not isinstance(inst.f, XOS):
            raise ContractKitError("xos_certificate needs a function given by xos clauses")
        clauses = inst.f.clauses
    verdict = check_class(inst.f, args.cls, clauses)
    return {"class": args.cls, "verdict": verdict}, (EXIT_OK if verdict else EXIT_FALSE)


def cmd_demand(args, inst):
    prices = parse_list(args.prices)
    res = demand_mod.demand(inst.f, prices, args.engine)
    return {"engine": args.engine, "prices": prices, "set": _set(res.set), "f": inst.f.value(res.set),
            "surplus": res.surplus}, EXIT_OK


def cmd_envelope(args, inst):
    _require(inst, "single_agent")
    lo, hi = to_rational(args.lo), to_rational(args.hi)
    cvs = single_agent.enumerate_critical_values(inst, lo, hi, args.engine)
    segments = single_agent.envelope(inst, lo, hi, args.engine)
    if args.out:
        Path(args.out).write_text(single_agent.envelope_csv(inst, segments))
    return {
        "critical_values": [{"alpha": cv.alpha, "before": _set(cv.before), "after": _set(cv.after)} for cv in cvs],
        "segments": [{"alpha_lo": s.alpha_lo, "alpha_hi": s.alpha_hi, "set": _set(s.set), "f": inst.f.value(s.set),
                      "cost": inst.cost(s.set)} for s in segments],
    }, EXIT_OK


def cmd_optimal(args, inst):
    model = _require(inst, "single_agent", "binary_team")
    if model == "single_agent":
        return _contract_payload(inst, single_agent.optimal_contract(inst, args.engine)), EXIT_OK
    s, g = team_binary.brute_force_optimal_team(inst)
    return _team_payload(inst, s, team_binary.min_payment_contract(inst, s).alpha, g), EXIT_OK


def cmd_fptas(args, inst):
    model = _require(inst, "single_agent", "binary_team")
    eps = to_rational(args.eps)
    if model == "single_agent":
        return {"epsilon": eps, **_contract_payload(inst, single_agent.fptas_contract(inst, eps, args.engine))}, EXIT_OK
    s, g = team_binary.fptas_additive_team(inst, eps)
    return {"epsilon": eps, **_team_payload(inst, s, team_binary.min_payment_contract(inst, s).alpha, g)}, EXIT_OK


def cmd_team_approx(args, inst):
    _require(inst, "binary_team")
    res = team_binary.constant_approx_submodular_team(inst)
    out = {**_team_payload(inst, res.set, res.alpha, res.profit), "source": res.source}
    s_opt, g_opt = team_binary.brute_force_optimal_team(inst)
    out["optimum"] = {"set": _set(s_opt), "profit": g_opt}
    out["ratio"] = res.profit / g_opt if g_opt > 0 else None
    return out, EXIT_OK


def cmd_equilibria(args, inst):
    model = _require(inst, "multi_team", "binary_team")
    if model == "binary_team":
        inst = team_multi.lift_binary(inst)
    alpha = parse_list(args.alpha)
    if args.dynamics:
        res = team_multi.best_response_dynamics(inst, alpha, args.start, args.max_rounds)
        if args.out:
            Path(args.out).write_text(team_multi.dynamics_csv(inst, alpha, res))
        return {
            "alpha": alpha,
            "converged": res.converged,
            "profile": _set(res.profile),
            "nash": team_multi.is_nash_profile(inst, alpha, res.profile),
            "trace": [{"round": st.round, "agent": st.agent, "profile": _set(st.profile), "potential": st.potential}
                      for st in res.trace],
        }, EXIT_OK
    report = team_multi.equilibrium_report(inst, alpha)
    if args.out:
        Path(args.out).write_text(team_multi.equilibria_csv(inst, alpha, report.profiles))

    def row(s):
        agents, principal = team_multi.profile_utilities(inst, alpha, s)
        return {"profile": _set(s), "f": inst.f.value(s), "potential": team_multi.potential(inst, alpha, s),
                "principal_utility": principal, "agent_utilities": list(agents)}

    chosen = team_multi.find_equilibrium(inst, alpha)
    return {
        "alpha": alpha,
        "equilibria": [row(s) for s in report.profiles],
        "potential_maximizer": _set(chosen),
        "best_for_principal": row(report.best) if report.best is not None else None,
        "worst_for_principal": row(report.worst) if report.worst is not None else None,
    }, EXIT_OK


def _param(text: str) -> tuple[str, Any]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ContractKitError(f"--param expects key=value, got {text!r}")
    if value.lstrip("-").isdigit():
        return key, int(value)
    return key, value


def cmd_gen(args, _inst):
    params = dict(_param(p) for p in args.param)
    inst = instances.generate(args.kind, args.n, args.seed, params)
    if args.out:
        instances.save(inst, args.out)
    return {"kind": args.kind, "n": args.n, "seed": args.seed, "params": params, "out": args.out,
            "digest": instances.digest(inst), "instance": instances.to_dict(inst)}, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contract-kit", description="Exact linear contracts for single agents and teams.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, func, help_text, needs_instance=True):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func, needs_instance=needs_instance)
        if needs_instance:
            p.add_argument("--instance", required=True, help="instance JSON file or built-in example name")
        p.add_argument("--decimal", action="store_true", help="add 20-digit decimal renderings")
        return p

    def engine(p):
        p.add_argument("--engine", choices=demand_mod.ENGINES, default="brute", help="demand engine (default: brute)")

    p = command("check-class", cmd_check_class, "test whether the reward function lies in a class")
    p.add_argument("--class", dest="cls", choices=CLASSES, required=True)

    p = command("demand", cmd_demand, "answer one demand query")
    p.add_argument("--prices", required=True, help='comma separated, e.g. "1/2,0.3,0"')
    engine(p)

    p = command("envelope", cmd_envelope, "critical values and envelope segments of a single agent")
    p.add_argument("--from", dest="lo", default="0")
    p.add_argument("--to", dest="hi", default="1")
    p.add_argument("--out", help="write the segments as CSV here")
    engine(p)

    p = command("optimal", cmd_optimal, "exact optimal contract (single agent or binary team)")
    engine(p)

    p = command("fptas", cmd_fptas, "(1 - eps)-approximate contract (single agent or additive binary team)")
    p.add_argument("--eps", required=True)
    engine(p)

    command("team-approx", cmd_team_approx, "constant-factor team for a submodular binary team")

    p = command("equilibria", cmd_equilibria, "equilibria of a team contract, or best-response dynamics")
    p.add_argument("--alpha", required=True, help="one share per agent, comma separated")
    p.add_argument("--dynamics", action="store_true", help="run best-response dynamics instead of enumerating")
    p.add_argument("--start", type=int, default=0, help="starting profile bitmask for --dynamics")
    p.add_argument("--max-rounds", type=int, default=1000)
    p.add_argument("--out", help="write a CSV of the equilibria or of the dynamics trace here")

    p = command("gen", cmd_gen, "generate a seeded random instance", needs_instance=False)
    p.add_argument("--kind", choices=instances.GENERATOR_KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--param", action="append", default=[], help="generator parameter key=value (repeatable)")
    p.add_argument("--out", help="write the instance file here")
    return parser


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    report: dict = {"command": args.command}
    try:
        inst = None
        if args.needs_instance:
            inst = _load(args.instance)
            report["instance"] = {"source": args.instance, "model": instances.model_name(inst),
                                  "digest": instances.digest(inst)}
        payload, code = args.func(args, inst)
    except ConsistencyError as exc:
        print(f"contract-kit: internal consistency failure: {exc}", file=stderr)
        return EXIT_INTERNAL
    except (ContractKitError, OSError) as exc:
        print(f"contract-kit: {args.command}: {exc}", file=stderr)
        return EXIT_USAGE
    report["result"] = _exact(payload)
    if args.decimal:
        report["decimal"] = _decimal(payload) or {}
    json.dump(report, stdout, indent=2)
    stdout.write("\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
