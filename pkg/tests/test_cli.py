import io
import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from contract_kit.cli import run
from contract_kit.demand import best_response
from contract_kit.instances import generate, load, save
from contract_kit.team_binary import min_payment_contract, team_profit
from contract_kit.team_multi import profile_utilities


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    report = json.loads(out.getvalue()) if out.getvalue() else None
    return code, report, err.getvalue()


def q(text):
    return F(text)


# --- single agent -------------------------------------------------------------


def test_optimal_on_additive_example():
    code, rep, _ = invoke("optimal", "--instance", "ex3_1")
    assert code == 0
    res = rep["result"]
    assert res["alpha"] == "1/2"
    assert res["set"] == {"bitmask": 3, "members": [1, 2]}
    assert res["principal_utility"] == "1/4"
    assert rep["instance"]["model"] == "single_agent"
    assert rep["instance"]["digest"].startswith("sha256:")


def test_envelope_on_table_example(tmp_path):
    out = tmp_path / "env.csv"
    code, rep, _ = invoke("envelope", "--instance", "ex3_2", "--out", str(out))
    assert code == 0
    res = rep["result"]
    assert [cv["alpha"] for cv in res["critical_values"]] == ["1/20", "1/10", "1/4", "1/2"]
    assert len(res["segments"]) == 5
    assert out.read_text().splitlines()[0] == "alpha_lo,alpha_hi,set_bitmask,f,cost"
    assert len(out.read_text().splitlines()) == 6


def test_envelope_window():
    _, rep, _ = invoke("envelope", "--instance", "ex3_1", "--from", "2/5", "--to", "0.8")
    assert [cv["alpha"] for cv in rep["result"]["critical_values"]] == ["1/2", "4/5"]


def test_demand_queries():
    code, rep, _ = invoke("demand", "--instance", "ex3_1", "--prices", "2,2,2")
    assert code == 0 and rep["result"]["set"] == {"bitmask": 0, "members": []}
    _, rep, _ = invoke("demand", "--instance", "ex3_2", "--prices", "1/24,1/8,5/12", "--engine", "gs")
    assert rep["result"]["set"]["bitmask"] == 3 and rep["result"]["surplus"] == "23/60"


def test_fptas_single_agent():
    code, rep, _ = invoke("fptas", "--instance", "ex3_2", "--eps", "0.1", "--engine", "ultra")
    assert code == 0
    assert q(rep["result"]["principal_utility"]) >= F(9, 10) * F(9, 20)
    assert rep["result"]["epsilon"] == "1/10"


def test_decimal_block():
    _, rep, _ = invoke("optimal", "--instance", "ex3_1", "--decimal")
    assert rep["decimal"]["alpha"] == "0.5"
    assert rep["decimal"]["principal_utility"] == "0.25"
    assert "set" not in rep["decimal"]


# --- teams --------------------------------------------------------------------


def test_optimal_binary_team():
    code, rep, _ = invoke("optimal", "--instance", "ex4_1")
    assert code == 0
    res = rep["result"]
    assert res["set"]["members"] == [1] and res["profit"] == "1/4" and res["alpha"] == ["1/2", "0"]


def test_team_approx_reports_ratio():
    code, rep, _ = invoke("team-approx", "--instance", "ex4_1")
    assert code == 0
    res = rep["result"]
    assert res["profit"] == "1/4" and res["optimum"]["profit"] == "1/4" and res["ratio"] == "1"
    assert res["source"] == "single"


def test_fptas_additive_team(tmp_path):
    path = tmp_path / "team.json"
    save(generate("binary_team", 6, 3, {"function": "additive"}), path)
    code, rep, _ = invoke("fptas", "--instance", str(path), "--eps", "1/10")
    assert code == 0
    inst = load(path)
    s = rep["result"]["set"]["bitmask"]
    assert q(rep["result"]["profit"]) == team_profit(inst, s)


def test_equilibria_on_lifted_team(tmp_path):
    out = tmp_path / "eq.csv"
    code, rep, _ = invoke("equilibria", "--instance", "ex4_1", "--alpha", "1/2,1/2", "--out", str(out))
    assert code == 0
    res = rep["result"]
    assert [row["profile"]["bitmask"] for row in res["equilibria"]] == [1, 2, 0]
    assert res["potential_maximizer"]["bitmask"] == 1
    assert out.read_text().splitlines()[1] == "1,1/2,0,0,0,1/4"


def test_equilibria_dynamics(tmp_path):
    out = tmp_path / "dyn.csv"
    code, rep, _ = invoke("equilibria", "--instance", "ex4_1", "--alpha", "1,0", "--dynamics", "--start", "2",
                          "--out", str(out))
    assert code == 0
    res = rep["result"]
    assert res["converged"] and res["nash"] and res["profile"]["bitmask"] == 1
    assert out.read_text().startswith("round,agent,profile_bitmask,f,potential\n")


# --- generation ---------------------------------------------------------------


def test_gen_writes_loadable_file(tmp_path):
    path = tmp_path / "g.json"
    code, rep, _ = invoke("gen", "--kind", "multi_team", "--n", "5", "--seed", "9", "--param", "agents=2",
                          "--param", "function=xos", "--out", str(path))
    assert code == 0
    inst = load(path)
    assert inst == generate("multi_team", 5, 9, {"agents": 2, "function": "xos"})
    assert rep["result"]["instance"]["partition"] == [list(g) for g in inst.partition]
    code, rep2, _ = invoke("gen", "--kind", "multi_team", "--n", "5", "--seed", "9", "--param", "agents=2",
                           "--param", "function=xos")
    assert rep2["result"]["digest"] == rep["result"]["digest"]


# --- exit codes ---------------------------------------------------------------


def test_check_class_exit_codes(tmp_path):
    assert invoke("check-class", "--instance", "ex3_1", "--class", "additive")[0] == 0
    code, rep, _ = invoke("check-class", "--instance", "ex3_2", "--class", "additive")
    assert code == 1 and rep["result"]["verdict"] is False
    path = tmp_path / "sq.json"
    save(generate("supermodular_square", 3, 1), path)
    assert invoke("check-class", "--instance", str(path), "--class", "submodular")[0] == 1
    assert invoke("check-class", "--instance", str(path), "--class", "xos_certificate")[0] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["envelope", "--instance", "ex4_1"],
        ["team-approx", "--instance", "ex3_1"],
        ["equilibria", "--instance", "ex3_1", "--alpha", "1/2"],
        ["optimal", "--instance", "missing.json"],
        ["demand", "--instance", "ex3_1", "--prices", "1,2"],
        ["demand", "--instance", "ex3_1", "--prices", "a,b,c"],
        ["fptas", "--instance", "ex3_1", "--eps", "2"],
        ["fptas", "--instance", "ex4_1", "--eps", "1/2"],
        ["equilibria", "--instance", "ex4_1", "--alpha", "1/2"],
        ["gen", "--kind", "additive", "--n", "3", "--seed", "1", "--param", "nope"],
    ],
)
def test_bad_input_exits_2(argv):
    code, rep, err = invoke(*argv)
    assert code == 2 and rep is None
    assert err.startswith("contract-kit: ")


def test_usage_errors_exit_2(capsys):
    assert run(["frobnicate"]) == 2
    assert run(["optimal"]) == 2
    assert run(["demand", "--instance", "ex3_1", "--prices", "0,0,0", "--engine", "lp"]) == 2
    assert "usage" in capsys.readouterr().err


def test_help_exits_0(capsys):
    assert run(["--help"]) == 0
    assert "team-approx" in capsys.readouterr().out


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "contract_kit.cli", "optimal", "--instance", "ex3_1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["alpha"] == "1/2"


# --- reports re-validate ------------------------------------------------------


@pytest.mark.parametrize("seed", range(8))
def test_single_agent_reports_revalidate(seed, tmp_path):
    path = tmp_path / "i.json"
    save(generate(("coverage", "xos")[seed % 2], 3 + seed, seed), path)
    inst = load(path)
    for argv in (["optimal"], ["fptas", "--eps", "1/10"]):
        _, rep, _ = invoke(argv[0], "--instance", str(path), *argv[1:])
        res = rep["result"]
        alpha, s = q(res["alpha"]), res["set"]["bitmask"]
        assert best_response(inst.f, inst.c, alpha).set == s
        assert q(res["principal_utility"]) == (1 - alpha) * inst.f.value(s)
        assert q(res["agent_utility"]) == alpha * inst.f.value(s) - inst.cost(s)
        assert q(res["f"]) == inst.f.value(s) and q(res["cost"]) == inst.cost(s)


@pytest.mark.parametrize("seed", range(8))
def test_team_reports_revalidate(seed, tmp_path):
    path = tmp_path / "t.json"
    save(generate("binary_team", 3 + seed, seed), path)
    inst = load(path)
    for command in ("optimal", "team-approx"):
        _, rep, _ = invoke(command, "--instance", str(path))
        res = rep["result"]
        s = res["set"]["bitmask"]
        assert [q(a) for a in res["alpha"]] == list(min_payment_contract(inst, s).alpha)
        assert q(res["profit"]) == (1 - sum(q(a) for a in res["alpha"])) * inst.f.value(s)


@pytest.mark.parametrize("seed", range(6))
def test_equilibrium_reports_revalidate(seed, tmp_path):
    path = tmp_path / "m.json"
    save(generate("multi_team", 3 + seed, seed), path)
    inst = load(path)
    alpha = ",".join(f"1/{2 + i}" for i in range(inst.agents))
    _, rep, _ = invoke("equilibria", "--instance", str(path), "--alpha", alpha)
    shares = [q(a) for a in rep["result"]["alpha"]]
    for row in rep["result"]["equilibria"]:
        agents, principal = profile_utilities(inst, shares, row["profile"]["bitmask"])
        assert [q(u) for u in row["agent_utilities"]] == list(agents)
        assert q(row["principal_utility"]) == principal
