"""Builtin scenarios.

Each builtin is a function of keyword parameters returning a
:class:`Scenario`: the problem(s), the machine spaces, and whatever the
analyses need (partition, informant, speedup, tape length).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Iterator, Mapping

from .bias import (
    SignalModel, StatusQuoInstance, first_impressions_problem, polarization_builtin,
)
from .conversation import FunctionInformant, threshold_informant
from .core import (
    ComputationalDecisionProblem, DecisionError, JointPrior, SeparableUtility,
    StandardDecisionProblem, standard_as_computational,
)
from .information import CellBlind, CellDispatch, Partition
from .machines import BeliefTable, ConstantMachine, FunctionMachine, SparseMachine
from .speedup import SpeedupFunction
from .trees import act_now, binary_search_tree
from .vm import ProgramAgent, ProgramMachine, assemble, int_encoder


class ScenarioError(DecisionError):
    pass


@dataclass
class Scenario:
    name: str
    params: dict = field(default_factory=dict)
    standard: StandardDecisionProblem | None = None
    problem: ComputationalDecisionProblem | None = None
    partition: Partition | None = None
    cell_machines: list | None = None
    informant: Any = None
    conversers: list | None = None
    speedup: SpeedupFunction | None = None
    tape_length: int = 0
    rounds: int = 64
    eval_subset: list | None = None
    default_command: str = "eval"
    bias: dict | None = None
    zk: Any = None
    notes: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# stock / bond


def stock_bond() -> Scenario:
    """Two states, a risky stock and a safe bond."""
    states, types, actions = ("s1", "s2"), ("t0",), ("stock", "bond")
    prior = JointPrior.from_table({("s1", "t0"): Fraction(2, 3), ("s2", "t0"): Fraction(1, 3)})
    table = {("s1", "stock"): 3, ("s2", "stock"): -4, ("s1", "bond"): 1, ("s2", "bond"): 1}
    std = StandardDecisionProblem(states, types, actions, prior, lambda s, t, a: table[(s, a)])
    machines = [ConstantMachine(a, a) for a in actions]
    return Scenario(
        "stock-bond", {}, std, standard_as_computational(std, machines),
        Partition([("s1",), ("s2",)], ["s1", "s2"]),
        cell_machines=[CellBlind(m) for m in machines],
        speedup=SpeedupFunction.identity(), default_command="voi")


# ---------------------------------------------------------------------------
# primality

TRIAL_DIVISION = """\
# read the type as a big-endian integer, then trial-divide
.actions 0 1
        push 0
        store 0
rd:     jeof got
        load 0
        push 2
        mul
        read
        add
        store 0
        jmp rd
got:    load 0
        push 2
        lt
        jnz comp
        push 2
        store 1
loop:   load 1
        load 1
        mul
        load 0
        gt
        jnz prime
        load 0
        load 1
        mod
        jz comp
        load 1
        push 1
        add
        store 1
        jmp loop
prime:  push 1
        halt
comp:   push 0
        halt
"""


def sieve(limit: int) -> list[bool]:
    """``is_prime[k]`` for ``k < limit``."""
    flags = [True] * limit
    flags[:2] = [False] * min(2, limit)
    k = 2
    while k * k < limit:
        if flags[k]:
            flags[k * k::k] = [False] * len(range(k * k, limit, k))
        k += 1
    return flags


def trial_division_program():
    return assemble(TRIAL_DIVISION, "trial-division")


def primality_utility(is_prime: list[bool], cost_per_unit=1) -> SeparableUtility:
    """10 for a correct yes/no answer, -10 for a wrong one, 1 for passing; less complexity."""
    def payoff(s, t, a):
        if a == 2:
            return 1
        return 10 if (a == 1) == is_prime[t] else -10
    return SeparableUtility(payoff, lambda c: cost_per_unit * c, monotone=True)


def primality(N: int = 4096, deadline: int = 200, eps=Fraction(1, 100), penalty: int = 10) -> Scenario:
    """Inputs uniform on ``2..N-1``; states say whether the candidate machine is good."""
    N, deadline, eps = int(N), int(deadline), Fraction(eps)
    if not 0 < eps < 1:
        raise ScenarioError("eps must lie strictly between 0 and 1")
    width = max(1, (N - 1).bit_length())
    flags = sieve(N)
    types = range(2, N)
    states = ("good", "bad")
    prior = JointPrior.product({"good": eps, "bad": 1 - eps}, types=types)
    util = primality_utility(flags)
    program = trial_division_program()
    trial = ProgramMachine(program, deadline, 0, penalty=penalty, encode=int_encoder(width),
                           name="trial-division")
    candidate = {}
    for t in types:
        right = int(flags[t])
        candidate[("good", t)] = right
        candidate[("bad", t)] = 1 - right
    star = BeliefTable("candidate", candidate, {k: 0 for k in candidate})
    machines = [ConstantMachine("always-0", 0), ConstantMachine("always-pass", 2), trial, star]
    problem = ComputationalDecisionProblem(states, tuple(types), (0, 1, 2), prior, util, machines)
    part = Partition([("good",), ("bad",)], ["candidate-good", "candidate-bad"])
    cells = [CellBlind(m) for m in machines] + [
        CellDispatch("trust-if-told", {0: star, 1: trial}, trial)]
    return Scenario("primality", {"N": N, "deadline": deadline, "eps": eps}, None, problem, part,
                    cell_machines=cells, speedup=SpeedupFunction.linear(2, 0),
                    default_command="voci")


# ---------------------------------------------------------------------------
# safe


class _SearchRange(Mapping):
    """Lazy ``(s, t0) -> ("open", tries)`` over a block of consecutive combinations."""

    def __init__(self, start: int, count: int, type_=0):
        self.start, self.count, self.type_ = start, count, type_

    def __getitem__(self, key):
        s, t = key
        if t == self.type_ and self.start <= s < self.start + self.count:
            return ("open", s - self.start + 1)
        raise KeyError(key)

    def __iter__(self) -> Iterator:
        return ((s, self.type_) for s in range(self.start, self.start + self.count))

    def __len__(self):
        return self.count

    def get(self, key, default=None):
        try:
            return self[key]
        except KeyError:
            return default


def safe_closed_form(B: int, K: int, payoff) -> dict:
    """Exact values of the safe analyses for any ``B`` and ``K``, without enumeration."""
    V = Fraction(payoff)
    hit = Fraction(1, 2 ** (B - K))
    return {"eval": V * hit, "voci": V * (1 - hit), "speedup": V * hit}


def safe(B: int = 20, K: int = 10, payoff=1000) -> Scenario:
    """Combinations ``0..2^B-1`` uniformly; a budget of ``2^K`` tries.

    Utility is ``payoff`` for opening the safe, less ``payoff`` if the
    machine overran the budget.  The partition reveals the leading ``B-K``
    bits, which pins the combination to a block of exactly ``2^K``.
    """
    B, K, V = int(B), int(K), Fraction(payoff)
    if V.denominator == 1:
        V = int(V)  # keeps the per-state arithmetic in machine integers
    if not 0 <= K <= B:
        raise ScenarioError("need 0 <= K <= B")
    budget = 2 ** K
    states = range(2 ** B)
    prior = JointPrior.uniform(states, (0,))

    def payoff_fn(s, t, a):
        return V if a == "open" else 0

    util = SeparableUtility(payoff_fn, lambda c: V if c > budget else 0, monotone=True,
                            state_free=True)
    blocks = 2 ** (B - K)
    searchers = [SparseMachine("brute-force" if q == 0 else f"search-{q}", "fail", budget,
                               _SearchRange(q * budget, budget)) for q in range(blocks)]
    double = SparseMachine("double", "fail", 2 * budget, _SearchRange(0, min(2 * budget, 2 ** B)))
    machines = searchers + [double]
    problem = ComputationalDecisionProblem(states, (0,), ("open", "fail"), prior, util, machines)
    cells = [range(q * budget, (q + 1) * budget) for q in range(blocks)]
    part = Partition(cells, [format(q, f"0{B - K}b") if B > K else "all" for q in range(blocks)],
                     cell_of=lambda s: s >> K)
    pre = [CellBlind(searchers[0]), CellBlind(double),
           CellDispatch("cell-searcher", dict(enumerate(searchers)), searchers[0])]
    return Scenario("safe", {"B": B, "K": K, "payoff": V}, None, problem, part, cell_machines=pre,
                    speedup=SpeedupFunction.linear(2, 0), eval_subset=["brute-force", "double"],
                    default_command="voci")


# ---------------------------------------------------------------------------
# guess the number

PUZZLE_MODULUS = 101 * 103

PUZZLE_SOLVER = f"""\
# find a factor of {PUZZLE_MODULUS} by trial division, send it, act on the reply
        push 2
        store 0
loop:   push {PUZZLE_MODULUS}
        load 0
        mod
        jz found
        load 0
        push 1
        add
        store 0
        jmp loop
found:  load 0
        send
        recv
        halt
"""


def puzzle_informant(N: int) -> FunctionInformant:
    """Reveals the number only to a machine that sends a nontrivial factor of the modulus."""
    def reply(state, history):
        m = history[-1]
        if isinstance(m, int) and 1 < m < PUZZLE_MODULUS and PUZZLE_MODULUS % m == 0:
            return state
        return 0
    return FunctionInformant("puzzle-gate", reply, range(0, N + 1))


def guess_number(N: int = 100, rounds: int = 7, cost: int = 0, payoff: int = 100,
                 puzzle: int = 0) -> Scenario:
    """A number uniform on ``1..N``; the payoff for naming it exactly."""
    N, rounds, cost, payoff = int(N), int(rounds), int(cost), Fraction(payoff)
    states = range(1, N + 1)
    prior = JointPrior.uniform(states, ("t0",))
    util = SeparableUtility(lambda s, t, a: payoff if a == s else 0, lambda c: c, monotone=True)
    guesses = [act_now(f"guess-{k}", k) for k in states]
    if puzzle:
        solver = ProgramAgent(assemble(PUZZLE_SOLVER, "puzzle-solver"), 100000, 1, reads_type=False)
        conversers = [solver] + guesses
        informant = puzzle_informant(N)
    else:
        conversers = [binary_search_tree(1, N, rounds, cost=cost)] + guesses
        informant = threshold_informant()
    fixed = [ConstantMachine(f"guess-{k}", k) for k in states]
    problem = ComputationalDecisionProblem(states, ("t0",), tuple(states), prior, util, fixed)
    return Scenario("guess-number", {"N": N, "rounds": rounds, "cost": cost, "payoff": payoff,
                                     "puzzle": int(puzzle)},
                    None, problem, informant=informant, conversers=conversers,
                    speedup=SpeedupFunction.identity(), rounds=max(rounds, 1) + 1,
                    eval_subset=["guess-1"], default_command="voc")


# ---------------------------------------------------------------------------
# bias scenarios


def first_impressions(rho=Fraction(3, 4), c=0, n: int = 5, grid: int = 20) -> Scenario:
    """Read ``m`` of ``n`` noisy signals at cost ``c`` each, then answer by majority."""
    model = SignalModel(Fraction(rho), int(n), Fraction(c))
    problem = first_impressions_problem(model)
    return Scenario("first-impressions", {"rho": model.rho, "c": model.c, "n": model.n, "grid": int(grid)},
                    None, problem, speedup=SpeedupFunction.identity(),
                    bias={"kind": "first-impressions", "model": model, "grid": int(grid)},
                    default_command="bias")


def polarization() -> Scenario:
    """Two agents with opposite priors reading one evidence stream."""
    a, b, evidence, ratios = polarization_builtin()
    return Scenario("polarization", {}, bias={"kind": "polarization", "agents": (a, b),
                                              "evidence": evidence, "ratios": ratios},
                    default_command="bias")


def setup_cost(slope):
    slope = Fraction(slope)
    return lambda k: slope * (k - 1)


def status_quo_problem(inst: StatusQuoInstance) -> ComputationalDecisionProblem:
    """Value profiles of the ``k`` alternatives as states; machines analyse a prefix of ``j``."""
    vals = list(inst.values.items())
    mass = {}
    for prof in product(vals, repeat=inst.k):
        p = Fraction(1)
        for _, q in prof:
            p *= q
        mass[tuple(v for v, _ in prof)] = p
    states = list(mass)
    prior = JointPrior.product(mass, types=("t0",))
    actions = ("status-quo",) + tuple(range(inst.k))

    def analyse(j):
        def out(s, t):
            best, pick = inst.g0, "status-quo"
            for i in range(j):
                if s[i] > best:
                    best, pick = s[i], i
            return pick
        return out

    def payoff(s, t, a):
        return inst.g0 if a == "status-quo" else s[a]

    setup = inst.setup(inst.k)
    util = SeparableUtility(payoff, lambda j: j * inst.a + (setup if j else 0), monotone=True)
    machines = [FunctionMachine(f"analyse-{j}", analyse(j), j) for j in range(inst.k + 1)]
    return ComputationalDecisionProblem(states, ("t0",), actions, prior, util, machines)


def status_quo(k: int = 3, g0=6, a=1, slope=Fraction(1, 4), low=0, high=10) -> Scenario:
    """Alternatives worth ``low`` or ``high`` with equal odds; set-up cost ``slope * (k - 1)``."""
    values = {Fraction(low): Fraction(1, 2), Fraction(high): Fraction(1, 2)}
    inst = StatusQuoInstance(Fraction(g0), int(k), values, Fraction(a), setup_cost(slope))
    return Scenario("status-quo", {"k": int(k), "g0": Fraction(g0), "a": Fraction(a),
                                   "slope": Fraction(slope), "low": Fraction(low), "high": Fraction(high)},
                    None, status_quo_problem(inst), speedup=SpeedupFunction.identity(),
                    bias={"kind": "status-quo", "instance": inst, "values": values,
                          "setup": setup_cost(slope)},
                    default_command="bias")


# ---------------------------------------------------------------------------
# zero-knowledge toy


def zk_toy(variant: str = "secret", inject: int = 0, randomized: int = 0, sweep: int = 0) -> Scenario:
    """Toy zero-knowledge family: conversation value against speedup value."""
    from .zk import constant_toy, secret_toy

    if variant == "constant":
        inst = constant_toy()
    elif variant == "secret":
        inst = secret_toy(randomized=bool(int(randomized)), inject_violation=bool(int(inject)))
    else:
        raise ScenarioError(f"unknown zk-toy variant {variant!r}; choose constant or secret")
    problem = inst.family.problem()
    return Scenario("zk-toy", {"variant": variant, "inject": int(inject), "randomized": int(randomized),
                               "sweep": int(sweep)},
                    None, problem, informant=inst.prover, conversers=list(inst.verifiers),
                    speedup=inst.p, tape_length=inst.tape_length, zk=inst,
                    default_command="zk-check")


BUILTINS: dict[str, Callable[..., Scenario]] = {
    "stock-bond": stock_bond,
    "primality": primality,
    "safe": safe,
    "guess-number": guess_number,
    "first-impressions": first_impressions,
    "polarization": polarization,
    "status-quo": status_quo,
    "zk-toy": zk_toy,
}


def builtin(name: str, **params) -> Scenario:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ScenarioError(f"unknown builtin {name!r}; builtins: {', '.join(BUILTINS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ScenarioError(f"bad parameters for {name}: {exc}") from None
