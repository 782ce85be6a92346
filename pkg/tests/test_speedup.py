from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from costcomp.core import ComputationalDecisionProblem, JointPrior, SeparableUtility
from costcomp.machines import ConstantMachine
from costcomp.scenarios import BUILTINS, builtin, safe_closed_form
from costcomp.speedup import (
    SpeedupError, SpeedupFunction, SpeedupUtility, check_speedup_relation, value_of_p_speedup,
)

from oracles import RandomInstance

P_GRID = [SpeedupFunction.identity(), SpeedupFunction.linear(1, 1), SpeedupFunction.linear(2, 1),
          SpeedupFunction.linear(3, 2), SpeedupFunction.polynomial([2, 3, 1])]


def test_relation_reflexive():
    C = {("m", "s", "t"): 7, ("m", "s2", "t"): 0}
    assert check_speedup_relation(C, C, SpeedupFunction.identity())


def test_relation_halving():
    C = {("m", s, "t"): c for s, c in enumerate([0, 1, 5, 8, 13])}
    half = {k: -(-c // 2) for k, c in C.items()}
    assert check_speedup_relation(half, C, SpeedupFunction.linear(2))


def test_relation_rejects_slower():
    C = {("m", "s", "t"): 3}
    assert not check_speedup_relation({("m", "s", "t"): 4}, C, SpeedupFunction.linear(5))


def test_relation_domain_mismatch():
    with pytest.raises(SpeedupError):
        check_speedup_relation({}, {("m", "s", "t"): 1}, SpeedupFunction.identity())


def test_identity_has_no_value():
    inst = RandomInstance(3)
    assert value_of_p_speedup(inst.problem(), p=SpeedupFunction.identity()) == 0


def test_halving_constant_ten():
    prob = ComputationalDecisionProblem(["s"], ["t"], ["a"], JointPrior.uniform(["s"], ["t"]),
                                        SeparableUtility(lambda s, t, a: 100, lambda c: c, monotone=True),
                                        [ConstantMachine("ten", "a", 10)])
    assert value_of_p_speedup(prob, p=SpeedupFunction.linear(2)) == 10 - 5


def test_safe_doubling_small():
    sc = builtin("safe", B=8, K=4, payoff=160)
    v = value_of_p_speedup(sc.problem, p=SpeedupFunction.linear(2))
    assert v == 160 * Fraction(2 ** 4, 2 ** 8) == safe_closed_form(8, 4, 160)["speedup"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(range(len(P_GRID))))
def test_matches_assignment_bruteforce(seed, k):
    inst = RandomInstance(seed, max_states=4, max_machines=3, max_complexity=8, max_pairs=4)
    p = P_GRID[k]
    assert value_of_p_speedup(inst.problem(), p=p) == inst.speedup_bruteforce(p)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_monotone_in_p(seed):
    inst = RandomInstance(seed, max_complexity=8)
    vals = [value_of_p_speedup(inst.problem(), p=p) for p in P_GRID]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert vals[0] == 0


def test_grid_is_a_dominance_chain():
    dom = range(0, 64)
    assert all(a.dominated_by(b, dom) for a, b in zip(P_GRID, P_GRID[1:]))


@pytest.mark.parametrize("name", [n for n in BUILTINS if n != "polarization"])
def test_identity_zero_on_builtins(name):
    params = {"safe": {"B": 8, "K": 4}, "primality": {"N": 256}}.get(name, {})
    sc = builtin(name, **params)
    machines = list(sc.problem.machines) or sc.conversers
    assert value_of_p_speedup(sc.problem, machines, SpeedupFunction.identity(), informant=sc.informant,
                              tape_length=sc.tape_length, rounds=sc.rounds) == 0


@given(st.integers(0, 200), st.integers(1, 4), st.integers(0, 5))
def test_min_preimage(c, a, b):
    p = SpeedupFunction.linear(a, b)
    m = p.min_preimage(c)
    assert p(m) >= c and (m == 0 or p(m - 1) < c) and m <= c


def test_speedup_utility_nonmonotone_scan():
    # cost is cheapest at 2: any faster complexity in [minpre(c), c] may be picked
    u = lambda s, t, a, c: -abs(c - 2)
    fast = SpeedupUtility(u, SpeedupFunction.linear(3))
    assert fast(None, None, None, 6) == 0
    assert fast(None, None, None, 9) == -1


@pytest.mark.parametrize("text,x,y", [("id", 5, 5), ("2*x", 5, 10), ("linear:2,3", 5, 13),
                                      ("poly:1,0,1", 3, 10), ("table:0,2,4,6", 2, 4)])
def test_parse(text, x, y):
    assert SpeedupFunction.parse(text)(x) == y


@pytest.mark.parametrize("bad", ["linear:0", "poly:-1,1", "table:1,0", "table:0,0,1", "fast", "linear:a"])
def test_parse_rejects(bad):
    with pytest.raises(SpeedupError):
        SpeedupFunction.parse(bad)


def test_table_beyond_domain():
    p = SpeedupFunction.table([0, 1, 2])
    with pytest.raises(SpeedupError):
        p(5)
