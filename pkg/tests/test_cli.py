import json
import subprocess
import sys

import pytest

from csrgames.cli import NP_WARNING, auto_select, dispatch
from csrgames.io import dump_instance, load_instance, load_placement
from csrgames.model import Instance, is_equilibrium
from helpers import with_server

ODD3 = Instance.from_costs([[0, 1, 2], [2, 0, 1], [1, 2, 0]], interests=[{0, 1}] * 3)
NON_ULTRA = Instance.from_costs([[0, 1, 3], [1, 0, 1], [3, 1, 0]], weights=[[1, 1]] * 3)
TREE_JSON = {
    "objects": ["a", "b"],
    "nodes": [{"id": p, "weights": {"a": "2", "b": "1"}} for p in "xyz"] + [{"id": "srv", "capacity": 2}],
    "network": {
        "kind": "tree",
        "internal": [{"id": "r", "label": "9", "parent": None}, {"id": "s", "label": "1", "parent": "r"},
                     {"id": "t", "label": "4", "parent": "r"}],
        "leaves": [{"player": "x", "parent": "s"}, {"player": "y", "parent": "s"},
                   {"player": "z", "parent": "t"}, {"player": "srv", "parent": "r"}],
    },
    "server": "srv",
}


@pytest.fixture
def write(tmp_path):
    def put(name, content):
        path = tmp_path / name
        if isinstance(content, Instance):
            content = dump_instance(content)
        elif not isinstance(content, str):
            content = json.dumps(content)
        path.write_text(content)
        return str(path)
    return put


class TestAutoSelect:
    def test_ultrametric(self):
        inst = with_server([[0, 1], [1, 0]], weights=[[1, 1]] * 2)
        assert auto_select(inst) == ("hierarchical", None)

    def test_symmetric_binary_three_objects(self):
        inst = with_server([[0, 1, 2], [1, 0, 3], [2, 3, 0]], interests=[{0, 1}, {2}, {1}], m=3, d_srv=5)
        assert auto_select(inst)[0] == "potential"

    def test_two_objects_symmetric(self):
        assert auto_select(NON_ULTRA)[0] == "two-object"

    def test_directed_binary_two_objects(self):
        assert auto_select(ODD3)[0] == "twobin"

    def test_directed_general(self):
        inst = Instance.from_costs([[0, 1, 2], [2, 0, 1], [1, 2, 0]], weights=[[1, 2, 3]] * 3)
        assert auto_select(inst) == ("bruteforce", NP_WARNING)


class TestSolve:
    def test_twobin_odd_cycle(self, write, capsys):
        assert dispatch(["solve", "--alg", "twobin", write("odd.json", ODD3)]) == 1
        assert "status=NoEquilibrium" in capsys.readouterr().err

    def test_hierarchical_non_ultrametric(self, write, capsys):
        assert dispatch(["solve", "--alg", "hierarchical", write("bad.json", NON_ULTRA)]) == 65
        assert "(0, 1, 2)" in capsys.readouterr().err

    def test_trace_matches_counter(self, write, capsys, tmp_path):
        out = tmp_path / "p.json"
        path = write("tree.json", TREE_JSON)
        assert dispatch(["solve", "--trace", path, "-o", str(out)]) == 0
        err = capsys.readouterr().err.strip().splitlines()
        steps = int(err[-1].split("steps=")[1].split()[0])
        assert len(err) - 1 == steps
        assert all(line.split(",")[2] in ("SWAP", "DELETE") for line in err[:-1])
        inst = load_instance(path)
        assert is_equilibrium(inst, load_placement(inst, str(out)))

    def test_potential_stdout(self, write, capsys):
        inst = with_server([[0, 1, 2], [1, 0, 3], [2, 3, 0]], interests=[{0, 1}, {2}, {1}], m=3, d_srv=5)
        assert dispatch(["--seed", "3", "solve", "--alg", "potential", "--schedule", "random",
                         write("pot.json", inst)]) == 0
        placement = json.loads(capsys.readouterr().out)
        assert set(placement) == {"0", "1", "2", "3"}

    def test_bruteforce_warning(self, write, capsys):
        inst = Instance.from_costs([[0, 1, 2], [2, 0, 1], [1, 2, 0]], weights=[[1, 2, 3]] * 3)
        assert dispatch(["solve", write("g.json", inst)]) == 0
        assert "NP-complete" in capsys.readouterr().err

    def test_budget_unknown(self, write):
        assert dispatch(["solve", "--alg", "bruteforce", "--budget", "1", write("odd.json", ODD3)]) == 2


class TestOtherCommands:
    def test_verify(self, write, capsys):
        inst = Instance.from_costs([[0, 1], [1, 0]], interests=[{0, 1}] * 2, objects=("a", "b"))
        path = write("i.json", inst)
        assert dispatch(["verify", path, write("good.json", {"0": ["a"], "1": ["b"]})]) == 0
        assert capsys.readouterr().out.strip() == "EQUILIBRIUM"
        assert dispatch(["verify", path, write("bad.json", {"0": ["a"], "1": ["a"]})]) == 1
        assert capsys.readouterr().out.startswith("NOT AN EQUILIBRIUM: node 0 prefers ['b']")

    def test_bruteforce_all(self, write, capsys):
        inst = Instance.from_costs([[0, 1], [1, 0]], interests=[{0, 1}] * 2, objects=("a", "b"))
        assert dispatch(["bruteforce", "--all", write("i.json", inst)]) == 0
        assert json.loads(capsys.readouterr().out) == [{"0": ["a"], "1": ["b"]}, {"0": ["b"], "1": ["a"]}]
        assert dispatch(["bruteforce", write("odd.json", ODD3)]) == 1

    def test_dynamics(self, write, capsys):
        inst = Instance.from_costs([[0, 1], [1, 0]], interests=[{0}, {0}], objects=("a", "b"))
        assert dispatch(["dynamics", write("i.json", inst), write("s.json", {"0": ["b"], "1": ["b"]})]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert [ln.split(",")[:4] for ln in lines] == [["1", "0", "b", "a"], ["2", "1", "b", "a"]]

    def test_gadget_then_solve(self, write, tmp_path):
        out = tmp_path / "i3.json"
        cnf = write("f.cnf", "p cnf 2 2\n1 2 -1 0\n-2 -2 1 0\n")
        assert dispatch(["gadget", "--which", "I3", cnf, "-o", str(out)]) == 0
        assert load_instance(str(out)).m == 3
        assert dispatch(["solve", str(out)]) == 0

    def test_gadget_unsat(self, write, tmp_path):
        out = tmp_path / "i1.json"
        cnf = write("u.cnf", "p cnf 1 2\n1 1 1 0\n-1 -1 -1 0\n")
        assert dispatch(["gadget", "--which", "I1", cnf, "-o", str(out)]) == 0
        assert dispatch(["bruteforce", str(out)]) == 1

    def test_gadget_not_3sat(self, write):
        assert dispatch(["gadget", "--which", "I1", write("x.cnf", "p cnf 1 1\n1 0\n")]) == 65

    def test_gadget_gamma_on_I1(self, write):
        cnf = write("f.cnf", "p cnf 1 1\n1 1 1 0\n")
        assert dispatch(["gadget", "--which", "I1", "--pin-s", "gamma", cnf]) == 64

    def test_evencycle(self, write, capsys):
        assert dispatch(["evencycle", write("sq.txt", "4\n0 1\n1 2\n2 3\n3 0\n")]) == 0
        assert sorted(map(int, capsys.readouterr().out.split())) == [0, 1, 2, 3]
        assert dispatch(["evencycle", write("tri.txt", "3\n0 1\n1 2\n2 0\n")]) == 1
        assert capsys.readouterr().out.strip() == "NONE"
        assert dispatch(["evencycle", write("loop.txt", "2\n0 0\n")]) == 65

    def test_fsolve(self, write, capsys):
        assert dispatch(["fsolve", "--eps", "1/100", write("tree.json", TREE_JSON)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert set(result) == {"x", "y", "z", "srv"}
        assert dispatch(["fsolve", write("odd.json", ODD3)]) == 65


class TestExitCodes:
    def test_unknown_subcommand(self):
        assert dispatch(["frobnicate"]) == 64

    def test_no_subcommand(self):
        assert dispatch([]) == 64

    def test_bad_json(self, write):
        assert dispatch(["verify", write("x.json", "{nope"), write("p.json", {})]) == 65

    def test_missing_file(self, tmp_path):
        assert dispatch(["solve", str(tmp_path / "absent.json")]) == 65

    def test_console_script(self, write):
        proc = subprocess.run([sys.executable, "-m", "csrgames.cli", "evencycle",
                               write("sq.txt", "2\n0 1\n1 0\n")], capture_output=True, text=True)
        assert proc.returncode == 0 and proc.stdout.split() == ["0", "1"]
