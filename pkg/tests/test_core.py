from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from costcomp.core import (
    ComputationalDecisionProblem, DecisionError, EmptyChoiceError, Evaluator, JointPrior, MachineSet,
    NullEventError, PartialAssignmentError, PriorError, SeparableUtility, StandardDecisionProblem,
    UnknownActionError, best_action, best_machine, condition_prior, expected_utility_action,
    expected_utility_machine,
)
from costcomp.machines import BeliefTable, ConstantMachine, FunctionMachine, SparseMachine
from costcomp.numbers import ExactnessError, fmt_decimal, fmt_fraction, parse_fraction
from costcomp.scenarios import builtin, primality_utility, sieve, stock_bond

from oracles import RandomInstance, primes_below


def stock():
    return stock_bond().standard


# -- standard problems --------------------------------------------------------

def test_stock_expected_utility():
    assert expected_utility_action(stock(), "stock") == Fraction(2, 3)


def test_bond_expected_utility():
    assert expected_utility_action(stock(), "bond") == 1


def test_best_action_is_bond():
    assert best_action(stock()) == ("bond", 1)


def test_zero_utility():
    p = StandardDecisionProblem(["x", "y"], ["t"], ["a", "b"], JointPrior.uniform(["x", "y"], ["t"]),
                                lambda s, t, a: 0)
    assert expected_utility_action(p, "a") == 0


def test_tie_goes_to_first_action():
    p = StandardDecisionProblem(["x"], ["t"], ["b", "a"], JointPrior.uniform(["x"], ["t"]),
                                lambda s, t, a: 5)
    assert best_action(p) == ("b", 5)


def test_unknown_action():
    with pytest.raises(UnknownActionError):
        expected_utility_action(stock(), "gold")


def test_partial_utility():
    with pytest.raises(PartialAssignmentError):
        StandardDecisionProblem(["x", "y"], ["t"], ["a"], JointPrior.uniform(["x", "y"], ["t"]),
                                {("x", "t", "a"): 1})


def test_prior_must_sum_to_one():
    with pytest.raises(PriorError, match="9/10"):
        StandardDecisionProblem(["x", "y"], ["t"], ["a"],
                                JointPrior.from_table({("x", "t"): Fraction(1, 2), ("y", "t"): Fraction(2, 5)}),
                                lambda s, t, a: 0)


def test_negative_mass_rejected():
    with pytest.raises(PriorError):
        JointPrior.from_table({("x", "t"): Fraction(-1, 2)})


def test_empty_action_set():
    p = StandardDecisionProblem(["x"], ["t"], [], JointPrior.uniform(["x"], ["t"]), lambda s, t, a: 0)
    with pytest.raises(EmptyChoiceError):
        best_action(p)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_best_action_matches_enumeration(seed):
    inst = RandomInstance(seed, max_states=4, max_types=3)
    a, v = best_action(inst.standard())
    values = [inst.eu_action(b) for b in inst.actions]
    assert v == max(values)
    assert a == inst.actions[values.index(max(values))]


# -- conditioning ---------------------------------------------------------------

def test_condition_uniform_on_upper_half():
    prior = JointPrior.uniform(range(1, 101), ["t0"])
    post = condition_prior(prior, range(51, 101))
    assert post.mass(75, "t0") == Fraction(1, 50)
    assert post.mass(10, "t0") == 0
    assert post.total == 1


def test_condition_to_point_mass():
    post = condition_prior(stock().prior, ["s1"])
    assert post.as_table() == {("s1", "t0"): 1}


def test_condition_on_everything_is_identity():
    prior = stock().prior
    assert condition_prior(prior, ["s1", "s2"]) == prior


def test_condition_on_null_event():
    prior = JointPrior.from_table({("a", "t"): 1, ("b", "t"): 0})
    with pytest.raises(NullEventError):
        condition_prior(prior, ["b"])


# -- machines -------------------------------------------------------------------

def test_constant_utility_machine():
    p = ComputationalDecisionProblem(["x", "y"], ["t"], ["a"], JointPrior.uniform(["x", "y"], ["t"]),
                                     lambda s, t, a, c: Fraction(7, 3), [ConstantMachine("k", "a", 4)])
    assert expected_utility_machine(p, "k") == Fraction(7, 3)


def test_singleton_best_machine():
    inst = RandomInstance(11)
    prob = inst.problem().with_machines(inst.belief_tables()[:1])
    m, v = best_machine(prob)
    assert m.name == "m0" and v == inst.eu_machine(0)


def test_duplicate_machine_names():
    with pytest.raises(DecisionError, match="duplicate"):
        MachineSet([ConstantMachine("a", 1), ConstantMachine("a", 2)])


def test_machine_output_outside_actions():
    p = ComputationalDecisionProblem(["x"], ["t"], ["a"], JointPrior.uniform(["x"], ["t"]),
                                     lambda s, t, a, c: 0, [ConstantMachine("bad", "zzz")])
    with pytest.raises(UnknownActionError):
        expected_utility_machine(p, "bad")


def test_partial_belief_table():
    m = BeliefTable("half", {("x", "t"): "a"}, {("x", "t"): 0})
    p = ComputationalDecisionProblem(["x", "y"], ["t"], ["a"], JointPrior.uniform(["x", "y"], ["t"]),
                                     lambda s, t, a, c: 0, [m])
    with pytest.raises(PartialAssignmentError):
        p.validate()


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_machine_values_match_oracle(seed):
    inst = RandomInstance(seed)
    prob = inst.problem()
    for k, m in enumerate(prob.machines):
        assert expected_utility_machine(prob, m) == inst.eu_machine(k)
    m, v = best_machine(prob)
    vals = [inst.eu_machine(k) for k in range(len(inst.machines))]
    assert v == max(vals) and m.name == f"m{vals.index(max(vals))}"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_sparse_path_agrees_with_dense(seed):
    inst = RandomInstance(seed)
    prob = inst.problem()
    for name, out, comp in inst.machines:
        a0 = inst.actions[0]
        exc = {p: (out[p], comp[p]) for p in inst.pairs if (out[p], comp[p]) != (a0, 1)}
        sparse = SparseMachine(name, a0, 1, exc)
        dense = FunctionMachine(name, lambda s, t, o=out: o[(s, t)], lambda s, t, c=comp: c[(s, t)])
        assert Evaluator(prob).total(sparse) == Evaluator(prob).total(dense)


def test_state_free_shortcut_matches_full_sum():
    util = SeparableUtility(lambda s, t, a: 3 if a == "go" else 0, lambda c: c, state_free=True)
    plain = SeparableUtility(lambda s, t, a: 3 if a == "go" else 0, lambda c: c)
    states = range(50)
    prior = JointPrior.uniform(states, [0])
    m = SparseMachine("m", "stay", 2, {(7, 0): ("go", 1)})
    p1 = ComputationalDecisionProblem(states, [0], ["go", "stay"], prior, util, [m])
    p2 = p1.with_utility(plain)
    assert expected_utility_machine(p1, m) == expected_utility_machine(p2, m) == Fraction(49 * -2 + (3 - 1), 50)


# -- primality and safe values ----------------------------------------------------

def test_sieve_matches_trial_division_count():
    flags = sieve(4096)
    assert sum(flags) == len(primes_below(4096)) == 564


def test_primality_always_zero_value():
    # inputs 2..4095 are 4094 numbers; "no" is right on the 4094-564 composites
    sc = builtin("primality")
    v = expected_utility_machine(sc.problem, "always-0")
    assert v == Fraction(10 * (4094 - 2 * 564), 4094)
    assert v == Fraction(14830, 2047)


def test_primality_best_of_three_matches_each():
    sc = builtin("primality")
    names = ["always-0", "always-pass", "trial-division"]
    subset = sc.problem.machines.subset(names)
    vals = {n: expected_utility_machine(sc.problem, n) for n in names}
    m, v = best_machine(sc.problem, subset)
    assert v == max(vals.values()) and vals[m.name] == v
    assert vals["always-pass"] == 1


def test_safe_brute_force_value():
    sc = builtin("safe")
    assert expected_utility_machine(sc.problem, "brute-force") == Fraction(1000, 2 ** 10)


def test_safe_searchers_tie_and_first_wins():
    sc = builtin("safe", B=8, K=4, payoff=16)
    prob = sc.problem
    searchers = [m for m in prob.machines if m.name != "double"]
    vals = {expected_utility_machine(prob, m) for m in searchers}
    assert vals == {Fraction(16, 16)}
    assert best_machine(prob, searchers)[0].name == "brute-force"


def test_primality_utility_penalizes_wrong_answers():
    flags = sieve(16)
    u = primality_utility(flags)
    assert u("good", 7, 1, 0) == 10
    assert u("good", 8, 1, 0) == -10
    assert u("good", 8, 2, 0) == 1
    assert u("good", 7, 1, 3) == 7


# -- numbers -----------------------------------------------------------------------

@pytest.mark.parametrize("text,value", [("3/4", Fraction(3, 4)), ("-2", Fraction(-2)), (5, Fraction(5)),
                                        ("10/4", Fraction(5, 2))])
def test_parse_fraction(text, value):
    assert parse_fraction(text) == value


@pytest.mark.parametrize("bad", [0.5, "0.5", "1e3", "1/0", True, None])
def test_parse_fraction_rejects(bad):
    with pytest.raises(ExactnessError):
        parse_fraction(bad)


def test_formatting():
    assert fmt_fraction(Fraction(4, 3)) == "4/3"
    assert fmt_fraction(Fraction(6, 3)) == "2"
    assert fmt_decimal(Fraction(4, 3)) == "1.33333333333"
    assert fmt_decimal(Fraction(459, 512)) == "0.896484375"


@given(st.fractions(), st.fractions())
def test_fraction_roundtrip(a, b):
    assert parse_fraction(fmt_fraction(a)) == a
    assert parse_fraction(fmt_fraction(a + b)) == a + b
