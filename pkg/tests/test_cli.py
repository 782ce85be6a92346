import csv
import subprocess
import sys
from fractions import Fraction

import pytest

from costcomp.cli import main, parse_param
from costcomp.core import best_machine, expected_utility_machine
from costcomp.information import value_of_information
from costcomp.loader import load_file, load_text
from costcomp.numbers import ExactnessError
from costcomp.scenarios import BUILTINS, ScenarioError, builtin

STOCK_YAML = """\
name: stock-bond-file
states: [s1, s2]
types: [t0]
actions: [stock, bond]
prior:
  s1: "2/3"
  s2: "1/3"
utility:
  s1: {stock: 3, bond: 1}
  s2: {stock: -4, bond: 1}
partition:
  up: [s1]
  down: [s2]
analysis: voi
"""


def cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def value_line(out, label):
    for line in out.splitlines():
        if line.strip().startswith(label + " = "):
            return line.split(" = ", 1)[1].split()[0]
    raise AssertionError(f"{label} not in report:\n{out}")


# -- builtins ---------------------------------------------------------------------

def test_stock_bond_shape():
    sc = builtin("stock-bond")
    std = sc.standard
    assert len(std.states) == 2 and len(std.types) == 1 and len(std.actions) == 2
    assert std.prior.mass("s1", "t0") == Fraction(2, 3) and std.prior.mass("s2", "t0") == Fraction(1, 3)


def test_guess_number_shape():
    sc = builtin("guess-number", N=100)
    assert len(sc.problem.states) == 100
    assert sc.params["payoff"] == 100
    assert sc.problem.utility(42, "t0", 42, 0) == 100


def test_unknown_builtin_lists_all():
    with pytest.raises(ScenarioError) as e:
        builtin("nope")
    for name in BUILTINS:
        assert name in str(e.value)


def test_bad_builtin_parameter():
    with pytest.raises(ScenarioError, match="bad parameters"):
        builtin("stock-bond", N=3)


GOLDEN = [
    ("stock-bond", [], "value of information", "4/3"),
    ("primality", [], "value of computational information", "282/10235"),
    ("guess-number", [], "value of conversation", "99"),
    ("first-impressions", [], "eu(5)", "459/512"),
    ("polarization", [], "A final posterior", "81/956"),
    ("status-quo", [], "keeps status quo", "1/2"),
    ("zk-toy", [], "value of conversation", "3"),
    ("safe", ["--param", "B=12", "--param", "K=6"], "value of computational information", "63000/64"),
]


@pytest.mark.parametrize("name,extra,label,expected", GOLDEN)
def test_golden_default_analysis(capsys, name, extra, label, expected):
    sc = builtin(name)
    code, out, _ = cli(capsys, sc.default_command, name, *extra)
    assert code == 0
    assert Fraction(value_line(out, label)) == Fraction(expected)


def test_primality_golden_is_derived():
    # good cell: the candidate is always right (10); bad cell: always-0 is best
    always0 = Fraction(10 * (4094 - 2 * 564), 4094)
    eps = Fraction(1, 100)
    assert eps * 10 + (1 - eps) * always0 - always0 == Fraction(282, 10235)


def test_status_quo_problem_matches_analysis():
    from costcomp.bias import status_quo_analysis
    sc = builtin("status-quo", k=3)
    m, v = best_machine(sc.problem)
    r = status_quo_analysis(sc.bias["instance"])
    assert v == r.expected_value and m.name == f"analyse-{r.analyze_count}"


# -- commands --------------------------------------------------------------------

def test_voi_stock_bond(capsys):
    code, out, _ = cli(capsys, "voi", "stock-bond")
    assert code == 0 and value_line(out, "value of information") == "4/3"


def test_eval_stock_bond(capsys):
    code, out, _ = cli(capsys, "eval", "stock-bond")
    assert value_line(out, "EU(stock)") == "2/3" and value_line(out, "EU(bond)") == "1"


def test_voc_guess_number(capsys):
    code, out, _ = cli(capsys, "voc", "guess-number")
    assert code == 0 and value_line(out, "value of conversation") == "99"


def test_voc_trace(capsys):
    code, out, _ = cli(capsys, "voc", "guess-number", "--trace", "77")
    assert "0, M, x>50?" in out and "    77, 0" in out


def test_voci_pre_cell_blind_file_scenario(capsys, tmp_path):
    path = tmp_path / "sb.yaml"
    path.write_text(STOCK_YAML)
    code, out, _ = cli(capsys, "voci", str(path), "--mode", "pre")
    assert code == 0 and value_line(out, "value of computational information") == "0"


def test_voci_post_file_scenario(capsys, tmp_path):
    path = tmp_path / "sb.yaml"
    path.write_text(STOCK_YAML)
    code, out, _ = cli(capsys, "voci", str(path))
    assert value_line(out, "value of computational information") == "4/3"


def test_speedup_command(capsys):
    code, out, _ = cli(capsys, "speedup", "safe", "--param", "B=10", "--param", "K=5", "--p", "2*x")
    assert code == 0 and Fraction(value_line(out, "value of speedup")) == Fraction(1000 * 2 ** 5, 2 ** 10)
    code, out, _ = cli(capsys, "speedup", "safe", "--param", "B=10", "--param", "K=5", "--p", "id")
    assert value_line(out, "value of speedup") == "0"


def test_best_command(capsys):
    code, out, _ = cli(capsys, "best", "guess-number")
    assert value_line(out, "best expected utility") == "1" and "best machine: guess-1" in out


def test_bias_commands(capsys):
    for name in ("first-impressions", "polarization", "status-quo"):
        code, out, _ = cli(capsys, "bias", name)
        assert code == 0 and "FAIL" not in out


def test_zk_check_passes_and_fails(capsys):
    assert cli(capsys, "zk-check", "zk-toy")[0] == 0
    code, out, _ = cli(capsys, "zk-check", "zk-toy", "--param", "inject=1")
    assert code == 2 and "condition2 FAIL" in out


def test_zk_sweep(capsys, monkeypatch):
    monkeypatch.setenv("COSTCOMP_WORKERS", "2")
    code, out, _ = cli(capsys, "zk-check", "zk-toy", "--param", "sweep=6")
    assert code == 0 and value_line(out, "inequality holds") == "6"


def test_validation_errors_exit_1(capsys, tmp_path):
    assert cli(capsys, "eval", "nope")[0] == 1
    assert cli(capsys, "eval", "first-impressions", "--param", "rho=0.75")[0] == 1
    assert cli(capsys, "voi", "guess-number")[0] == 1  # no standard problem
    assert cli(capsys, "voc", "stock-bond")[0] == 1  # no informant
    assert cli(capsys, "eval")[0] == 1
    bad = tmp_path / "bad.yaml"
    bad.write_text(STOCK_YAML.replace('"1/3"', '"1/5"'))
    code, _, err = cli(capsys, "voi", str(bad))
    assert code == 1 and "prior mass 13/15 ≠ 1" in err


def test_csv_output(capsys, tmp_path):
    path = tmp_path / "out.csv"
    cli(capsys, "eval", "stock-bond", "--csv", str(path))
    raw = path.read_bytes()
    assert raw.count(b"\r\n") == 3
    rows = list(csv.reader(path.open(newline="")))
    assert rows == [["label", "fraction", "decimal"], ["EU(stock)", "2/3", "0.666666666667"],
                    ["EU(bond)", "1", "1"]]


def test_reports_are_deterministic(capsys):
    first = cli(capsys, "voci", "primality", "--param", "N=256")
    second = cli(capsys, "voci", "primality", "--param", "N=256")
    assert first[:2] == second[:2]


def test_report_header_names_machine_space(capsys):
    _, out, _ = cli(capsys, "voci", "primality", "--param", "N=256")
    assert "finite declared set of 4 machines" in out


def test_list(capsys):
    code, out, _ = cli(capsys, "list")
    assert code == 0 and all(name in out for name in BUILTINS)


def test_parse_param():
    assert parse_param("N=12") == ("N", 12)
    assert parse_param("eps=1/50") == ("eps", Fraction(1, 50))
    assert parse_param("variant=constant") == ("variant", "constant")
    with pytest.raises(ExactnessError):
        parse_param("rho=0.5")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "costcomp", "voi", "stock-bond"], capture_output=True, text=True)
    assert r.returncode == 0 and "4/3" in r.stdout


# -- loader ----------------------------------------------------------------------

def test_load_file_voi(tmp_path):
    path = tmp_path / "sb.yaml"
    path.write_text(STOCK_YAML)
    sc = load_file(path)
    assert sc.name == "stock-bond-file" and sc.default_command == "voi"
    assert value_of_information(sc.standard, sc.partition) == Fraction(4, 3)


def test_prior_mass_error():
    text = STOCK_YAML.replace('"2/3"', '"17/30"').replace('"1/3"', '"1/3"')
    with pytest.raises(ScenarioError, match="prior mass 9/10 ≠ 1"):
        load_text(text)


def test_decimal_rejected_with_line():
    with pytest.raises(ScenarioError, match=r"line 6: decimal literal '0.66'"):
        load_text(STOCK_YAML.replace('"2/3"', "0.66"))


@pytest.mark.parametrize("old,new,msg", [
    ("  s2: {stock: -4, bond: 1}", "  s2: {stock: -4}", "utility undefined at \\(s2, t0, bond\\)"),
    ("  down: [s2]", "  down: [s3]", "undeclared state 's3'"),
    ("  up: [s1]\n  down: [s2]", "  up: [s1, s2]\n  down: [s2]", "cells 0 and 1"),
    ("analysis: voi", "analysis: frob", "unknown analysis"),
    ("states: [s1, s2]", "states: [s1, s1]", "duplicate entries"),
    ("types: [t0]\n", "", "missing section 'types'"),
    ("  s1: \"2/3\"\n", "  s1: \"2/3\"\n  s1: \"0\"\n", "duplicate key"),
])
def test_load_errors(old, new, msg):
    assert old in STOCK_YAML
    with pytest.raises(ScenarioError, match=msg):
        load_text(STOCK_YAML.replace(old, new))


def test_error_lines_point_at_the_problem():
    with pytest.raises(ScenarioError, match="^line 13:"):
        load_text(STOCK_YAML.replace("  down: [s2]", "  down: [s3]"))


PROGRAM_YAML = """\
name: parity
states: [w]
types: ["0", "1", "10", "11"]
actions: [even, odd]
prior: uniform
utility:
  w: {even: 0, odd: 1}
complexity_cost: "1/100"
machines:
  - name: parity
    kind: program
    deadline: 30
    default: even
    source: |
      .actions even odd
      push 0
      loop: read
      add
      jeof done
      jmp loop
      done: push 2
      mod
      halt
  - name: say-odd
    kind: constant
    action: odd
    complexity: 3
  - name: table
    kind: table
    out: {w: {"0": even, "1": odd, "10": odd, "11": even}}
"""


def test_program_and_table_machines():
    sc = load_text(PROGRAM_YAML)
    prob = sc.problem
    assert expected_utility_machine(prob, "parity") == Fraction(1, 2)
    assert expected_utility_machine(prob, "say-odd") == 1 - Fraction(3, 100)
    assert expected_utility_machine(prob, "table") == Fraction(1, 2)


def test_program_file_reference(tmp_path):
    (tmp_path / "p.asm").write_text(".actions even odd\npush 1\nhalt\n")
    text = PROGRAM_YAML.split("  - name: parity")[0] + \
        "  - name: file\n    kind: program\n    deadline: 5\n    default: even\n    file: p.asm\n"
    (tmp_path / "s.yaml").write_text(text)
    sc = load_file(tmp_path / "s.yaml")
    assert expected_utility_machine(sc.problem, "file") == 1


def test_program_error_has_line():
    text = PROGRAM_YAML.replace("      jmp loop", "      jmp nowhere")
    with pytest.raises(ScenarioError, match="line 10: machine parity: .*bad operand"):
        load_text(text)


TREE_YAML = """\
name: two-questions
states: [1, 2, 3, 4]
types: [t0]
actions: [1, 2, 3, 4]
prior: uniform
utility:
  1: {1: 4, 2: 0, 3: 0, 4: 0}
  2: {1: 0, 2: 4, 3: 0, 4: 0}
  3: {1: 0, 2: 0, 3: 4, 4: 0}
  4: {1: 0, 2: 0, 3: 0, 4: 4}
informant: threshold
rounds: 3
machines:
  - name: halve
    kind: tree
    alphabet: ["yes", "no"]
    fallback: 1
    tree:
      send: "x>2?"
      replies:
        "yes": {send: "x>3?", replies: {"yes": {act: 4}, "no": {act: 3}}}
        "no": {send: "x>1?", replies: {"yes": {act: 2}, "no": {act: 1}}}
  - name: one
    kind: constant
    action: 1
analysis: voc
"""


def test_tree_scenario_voc(capsys, tmp_path):
    path = tmp_path / "tree.yaml"
    path.write_text(TREE_YAML)
    code, out, _ = cli(capsys, "voc", str(path))
    assert code == 0 and value_line(out, "value of conversation") == "3"


def test_informant_replies():
    text = TREE_YAML.replace("informant: threshold",
                             "informant:\n  replies: {1: \"no\", 2: \"no\", 3: \"yes\", 4: \"yes\"}")
    sc = load_text(text)
    assert sc.informant.alphabet == frozenset({"no", "yes"})
