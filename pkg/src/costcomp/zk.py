"""Precise simulators and the conversation-versus-speedup inequality.

A family fixes a language, an input length and a prior on pairs
``(x, (x, z))``: the state is the instance and the type is the instance
together with auxiliary input ``z``, so the decision maker has no
uncertainty about what a machine will do.  A simulator is a non-interactive
program that, given ``(x, z)`` and coins, produces a verifier view together
with its own step count.

The checks here are exhaustive over finite tapes.  None of this is
cryptography: toy provers simply reveal state-derived values.
"""
from __future__ import annotations

import random
from types import SimpleNamespace
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Mapping, Sequence

from .conversation import (
    DEFAULT_ROUNDS, SILENT, _NeedBit, _PrefixTape, ConversationError, as_interactive,
    enumerate_outcomes, generate_view, value_of_conversation,
)
from .core import ComputationalDecisionProblem, DecisionError, JointPrior, SeparableUtility
from .protocol import Act, Context, FixedTape, InteractiveMachine, Send, View
from .speedup import SpeedupFunction, value_of_p_speedup


class ZkError(DecisionError):
    pass


class PreconditionError(ZkError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class ZkProblemFamily:
    """Instances ``x`` of length ``n`` in a language, with auxiliary inputs.

    ``prior`` maps ``(x, z)`` to mass (uniform over all pairs if omitted).
    ``utility(s, t, a, c)`` must be nonincreasing in ``c``; that is checked
    for ``c`` in ``0..complexity_bound``.
    """

    name: str
    n: int
    language: Callable[[str], bool]
    instances: Sequence[str]
    auxiliary: Sequence[str]
    actions: Sequence
    utility: Callable
    prior: Mapping | None = None
    complexity_bound: int = 64

    def pairs(self) -> list[tuple[str, tuple]]:
        return [(x, (x, z)) for x in self.instances for z in self.auxiliary]

    def joint_prior(self) -> JointPrior:
        if self.prior is None:
            pairs = self.pairs()
            return JointPrior.from_table({p: Fraction(1, len(pairs)) for p in pairs})
        return JointPrior.from_table({(x, (x, z)): m for (x, z), m in self.prior.items()})

    def problem(self, machines=()) -> ComputationalDecisionProblem:
        types = [(x, z) for x in self.instances for z in self.auxiliary]
        return ComputationalDecisionProblem(tuple(self.instances), tuple(types), tuple(self.actions),
                                            self.joint_prior(), self.utility, machines)

    def validate(self) -> "ZkProblemFamily":
        def outside(why):
            return ZkError(f"problem outside the zero-knowledge decision class: {why}")

        for x in self.instances:
            if len(x) != self.n or any(ch not in "01" for ch in x):
                raise outside(f"instance {x!r} is not a bitstring of length {self.n}")
            if not self.language(x):
                raise outside(f"instance {x!r} is not in the language")
        prior = self.joint_prior()
        for (s, t), m in prior.items():
            if not (isinstance(t, tuple) and len(t) == 2 and t[0] == s):
                raise outside(f"positive mass on ({s!r}, {t!r}) whose type does not extend the state")
        for (s, t), _ in prior.items():
            for a in self.actions:
                prev = None
                for c in range(self.complexity_bound + 1):
                    v = self.utility(s, t, a, c)
                    if prev is not None and v > prev:
                        raise outside(f"utility increases with complexity at {(s, t, a, c)!r}")
                    prev = v
        return self


class Simulator:
    """``run(x, z, tape) -> (view, steps)``; ``tape.draw()`` supplies coins."""

    name = "simulator"

    def run(self, x, z, tape) -> tuple[View, int]:
        raise NotImplementedError


class FunctionSimulator(Simulator):
    def __init__(self, name: str, fn: Callable):
        self.name = name
        self._fn = fn

    def run(self, x, z, tape):
        return self._fn(x, z, tape)


def simulator_outputs(sim: Simulator, x, z, tape_length: int) -> list[tuple[tuple, Fraction, View, int]]:
    """``(tape prefix, probability, view, steps)`` over every tape of the given length."""
    out = []
    stack = [()]
    while stack:
        prefix = stack.pop()
        tape = _PrefixTape(prefix, tape_length, "simulator")
        try:
            view, steps = sim.run(x, z, tape)
        except _NeedBit:
            stack.extend([prefix + (1,), prefix + (0,)])
            continue
        out.append((prefix, Fraction(1, 2 ** len(prefix)), view, steps))
    return out


def sum_rule(simulator_steps: int, verifier_complexity: int) -> int:
    """Composite complexity of running the verifier on the simulator's output."""
    return simulator_steps + verifier_complexity


@dataclass
class SimulatorTriple:
    prover: InteractiveMachine
    verifier: InteractiveMachine
    simulator: Simulator
    composition: Callable[[int, int], int] = sum_rule


@dataclass
class SimulatorReport:
    verifier: str
    precision: str
    condition1: dict = field(default_factory=dict)  # (x, z) -> (ok, detail)
    condition2: list = field(default_factory=list)  # (x, z, tape, composite, bound, ok)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.condition1.values()) and all(row[-1] for row in self.condition2)

    def failures(self) -> list[str]:
        lines = []
        for (x, z), (ok, detail) in self.condition1.items():
            if not ok:
                lines.append(f"condition1 FAIL x={x} z={z}: {detail}")
        for x, z, tape, comp, bound, ok in self.condition2:
            if not ok:
                r = "".join(map(str, tape))
                lines.append(f"condition2 FAIL x={x} z={z} r={r}: composite {comp} > bound {bound}")
        return lines

    def lines(self) -> list[str]:
        out = []
        for (x, z), (ok, detail) in self.condition1.items():
            out.append(f"{self.verifier} condition1 x={x} z={z} {'pass' if ok else 'FAIL'}"
                       + ("" if ok else f" {detail}"))
        for x, z, tape, comp, bound, ok in self.condition2:
            r = "".join(map(str, tape)) or "-"
            out.append(f"{self.verifier} condition2 x={x} z={z} r={r} composite={comp} bound={bound} "
                       f"{'pass' if ok else 'FAIL'}")
        return out


def _distribution(pairs) -> dict:
    d: dict = {}
    for w, view in pairs:
        d[view] = d.get(view, Fraction(0)) + w
    return d


def check_simulator_conditions(triple: SimulatorTriple, family: ZkProblemFamily, tape_length: int,
                               p: SpeedupFunction, rounds: int = DEFAULT_ROUNDS) -> SimulatorReport:
    """Exact view distributions match, and the composite cost stays within ``p`` on every tape."""
    v = triple.verifier
    report = SimulatorReport(v.name, p.label)
    for x, (_, z) in family.pairs():
        t = (x, z)
        real = _distribution((w, oc.view) for w, oc in
                             enumerate_outcomes(triple.prover, v, x, t, tape_length, rounds))
        outs = simulator_outputs(triple.simulator, x, z, tape_length)
        sim = _distribution((w, view) for _, w, view, _ in outs)
        if real == sim:
            report.condition1[(x, z)] = (True, "")
        else:
            bad = sorted((view for view in set(real) | set(sim)
                          if real.get(view, 0) != sim.get(view, 0)), key=View.render)
            detail = "; ".join(f"{view.render()} real={real.get(view, 0)} simulated={sim.get(view, 0)}"
                               for view in bad)
            report.condition1[(x, z)] = (False, detail)
        for tape, _, view, steps in outs:
            vc = _verifier_complexity(v, x, t, view, rounds)
            comp = triple.composition(steps, vc)
            bound = p(vc)
            report.condition2.append((x, z, tape, comp, bound, comp <= bound))
    return report


class _Script(InteractiveMachine):
    """Replays a fixed reply sequence; used to rerun a verifier on a given view."""

    name = "script"
    alphabet = None

    def __init__(self, replies: tuple):
        self.replies = replies

    def move(self, ctx: Context):
        k = len(ctx.history) - 1
        if k >= len(self.replies):
            raise ZkError("view-shape mismatch: verifier sends more messages than the view records")
        return Send(self.replies[k])


def replay_on_view(verifier: InteractiveMachine, state, type_, view: View,
                   rounds: int = DEFAULT_ROUNDS):
    """The verifier's action and complexity on a (simulated) final view."""
    verifier = as_interactive(verifier)
    try:
        if view.history:
            oc = generate_view(_Script(view.history), verifier, state, type_, None,
                               FixedTape(view.coins), rounds)
        else:
            oc = generate_view(SILENT, verifier, state, type_, None, FixedTape(view.coins), rounds)
    except ConversationError as exc:
        raise ZkError(f"view-shape mismatch: {exc}") from None
    if oc.view.history != view.history or oc.view.coins != view.coins:
        raise ZkError(f"view-shape mismatch: {view.render()} replays as {oc.view.render()}")
    return oc.action, verifier.complexity(state, view)


def _verifier_complexity(verifier, state, type_, view, rounds):
    return replay_on_view(verifier, state, type_, view, rounds)[1]


class SimulatedMachine(InteractiveMachine):
    """Runs the simulator, then the verifier on the simulated view; never sends.

    ``complexity`` is the raw composite cost.  ``rebound_complexity`` is the
    verifier's complexity on the simulated view alone; :meth:`rebound`
    returns a twin priced that way.
    """

    def __init__(self, machine: InteractiveMachine, simulator: Simulator, *,
                 composition: Callable[[int, int], int] = sum_rule, rebound: bool = False,
                 rounds: int = DEFAULT_ROUNDS):
        self.machine = machine
        self.simulator = simulator
        self.composition = composition
        self.is_rebound = rebound
        self.rounds = rounds
        self.name = f"{machine.name}∘{simulator.name}" + ("~" if rebound else "")

    def _simulate(self, type_, tape):
        x, z = type_
        return self.simulator.run(x, z, tape)

    def move(self, ctx: Context):
        view, _ = self._simulate(ctx.read_input(), SimpleNamespace(draw=ctx.coin))
        action, _ = replay_on_view(self.machine, ctx.state, ctx.input, view, self.rounds)
        return Act(action)

    def _parts(self, state, view: View):
        sim_view, steps = self._simulate(view.type_prefix, FixedTape(view.coins))
        _, vc = replay_on_view(self.machine, state, view.type_prefix, sim_view, self.rounds)
        return steps, vc

    def complexity(self, state, view: View) -> int:
        steps, vc = self._parts(state, view)
        return vc if self.is_rebound else self.composition(steps, vc)

    def rebound_complexity(self, state, view: View) -> int:
        return self._parts(state, view)[1]

    def rebound(self) -> "SimulatedMachine":
        return SimulatedMachine(self.machine, self.simulator, composition=self.composition,
                                rebound=True, rounds=self.rounds)


def build_simulated_machine(machine: InteractiveMachine, simulator: Simulator, **kw) -> SimulatedMachine:
    return SimulatedMachine(machine, simulator, **kw)


@dataclass
class Theorem1Report:
    voc: Fraction
    speedup_value: Fraction
    simulator_reports: list

    @property
    def inequality_holds(self) -> bool:
        return self.voc <= self.speedup_value

    def lines(self) -> list[str]:
        out = []
        for rep in self.simulator_reports:
            out.append(f"simulator for {rep.verifier}: {'pass' if rep.passed else 'FAIL'}")
        out.append(f"value of conversation: {self.voc}")
        out.append(f"value of speedup: {self.speedup_value}")
        out.append(f"inequality holds: {self.inequality_holds}")
        return out


def check_theorem1_instance(family: ZkProblemFamily, prover: InteractiveMachine,
                            machines: Sequence[InteractiveMachine], simulators: Mapping[str, Simulator],
                            p: SpeedupFunction, tape_length: int = 0, rounds: int = DEFAULT_ROUNDS,
                            composition: Callable[[int, int], int] = sum_rule) -> Theorem1Report:
    """Value of conversing with ``prover`` against the value of a ``p``-speedup.

    The machine space for both values is the verifiers plus, for each, the
    machine that runs its simulator first.  Preconditions are checked and
    reported, never skipped.
    """
    family.validate()
    reports = []
    for m in machines:
        if m.name not in simulators:
            raise PreconditionError(f"no simulator declared for verifier {m.name!r}")
        rep = check_simulator_conditions(SimulatorTriple(prover, m, simulators[m.name], composition),
                                         family, tape_length, p, rounds)
        reports.append(rep)
    failed = [r for r in reports if not r.passed]
    if failed:
        lines = [ln for r in failed for ln in r.failures()]
        raise PreconditionError("simulator check failed:\n" + "\n".join(lines), reports)
    space = list(machines) + [SimulatedMachine(m, simulators[m.name], composition=composition, rounds=rounds)
                              for m in machines]
    problem = family.problem()
    voc = value_of_conversation(problem, prover, space, tape_length, rounds)
    speed = value_of_p_speedup(problem, space, p, tape_length=tape_length, rounds=rounds)
    return Theorem1Report(voc, speed, reports)


# ---------------------------------------------------------------------------
# generated toy families


class RevealingProver(InteractiveMachine):
    """Answers every message with ``(secret(x), coin)``; the coin is 0 unless randomized."""

    def __init__(self, secret: Callable[[str], Any], values: Sequence, randomized: bool = False,
                 name: str = "prover"):
        self.secret = secret
        self.randomized = randomized
        self.name = name
        self.alphabet = frozenset(product(values, (0, 1) if randomized else (0,)))

    def move(self, ctx: Context):
        r = ctx.coin() if self.randomized else 0
        return Send((self.secret(ctx.input), r))


class ConstantProver(InteractiveMachine):
    def __init__(self, message="ok", name: str = "prover"):
        self.message = message
        self.name = name
        self.alphabet = frozenset([message])

    def move(self, ctx: Context):
        return Send(self.message)


class ToyVerifier(InteractiveMachine):
    """Verifier strategies for the toy families.

    ``mode`` is one of ``ask`` (ask once, act on the reply), ``self``
    (compute the secret alone at ``self_cost``), ``guess`` (act ``guess``
    at no cost) and ``coin`` (flip a coin: ask on 1, compute alone on 0).
    Asking costs ``ask_cost`` per reply received.  Unanswered questions
    end in ``guess``.
    """

    def __init__(self, mode: str, secret: Callable[[str], Any], *, ask_cost: int = 1,
                 self_cost: int = 10, guess=0, read=lambda reply: reply[0], name: str | None = None):
        if mode not in ("ask", "self", "guess", "coin"):
            raise ZkError(f"unknown verifier mode {mode!r}")
        self.mode = mode
        self.secret = secret
        self.ask_cost = ask_cost
        self.self_cost = self_cost
        self.guess = guess
        self.read = read
        self.name = name or mode

    def move(self, ctx: Context):
        x, _ = ctx.read_input()
        mode = self.mode
        if mode == "coin":
            flip = ctx.coins[0] if ctx.coins else ctx.coin()
            mode = "ask" if flip else "self"
        if mode == "ask":
            if ctx.history:
                return Act(self.read(ctx.history[0]))
            return Send("?")
        if mode == "self":
            return Act(self.secret(x))
        return Act(self.guess)

    def on_silence(self, ctx: Context):
        return self.guess

    def complexity(self, state, view: View) -> int:
        mode = self.mode
        if mode == "coin":
            mode = "ask" if view.coins and view.coins[0] else "self"
        if mode == "ask":
            return self.ask_cost * len(view.history)
        if mode == "self":
            return self.self_cost
        return 0


def toy_simulator(verifier: ToyVerifier, prover, *, steps: int = 0,
                  violate_at: int | None = None) -> Simulator:
    """A perfect simulator for ``verifier`` talking to ``prover``.

    It reproduces the prover's reply itself at ``steps`` steps.  With
    ``violate_at`` set it spends one extra internal coin and, when that
    coin comes up 1, costs ``violate_at`` steps instead; the view
    distribution is unchanged.
    """
    def run(x, z, tape):
        coins = []
        mode = verifier.mode
        if mode == "coin":
            flip = tape.draw()
            coins.append(flip)
            mode = "ask" if flip else "self"
        cost = 0
        history: tuple = ()
        if mode == "ask":
            if isinstance(prover, ConstantProver):
                history = (prover.message,)
            else:
                r = tape.draw() if prover.randomized else 0
                history = ((prover.secret(x), r),)
            cost = steps
            if violate_at is not None and tape.draw() == 1:
                cost = violate_at
        return View((x, z), history, tuple(coins)), cost

    return FunctionSimulator(f"S[{verifier.name}]", run)


@dataclass
class ToyInstance:
    family: ZkProblemFamily
    prover: InteractiveMachine
    verifiers: list
    simulators: dict
    p: SpeedupFunction
    tape_length: int


def constant_toy() -> ToyInstance:
    """The prover always says ``ok``; nothing is learned from it."""
    n = 2
    insts = ["01", "10"]
    fam = ZkProblemFamily("constant", n, lambda x: x.count("1") == 1, insts, ["0"], (0, 1),
                          SeparableUtility(lambda s, t, a: 1 if a == int(s[0]) else 0,
                                           lambda c: c, monotone=True))
    prover = ConstantProver()
    secret = lambda x: int(x[0])
    vs = [ToyVerifier("ask", secret, ask_cost=0, read=lambda r: 0),
          ToyVerifier("self", secret, self_cost=1),
          ToyVerifier("guess", secret)]
    sims = {v.name: toy_simulator(v, prover) for v in vs}
    return ToyInstance(fam, prover, vs, sims, SpeedupFunction.identity(), 2)


def secret_toy(*, self_cost: int = 12, ask_cost: int = 1, sim_steps: int = 3, slack: int = 0,
               payoff: int = 20, randomized: bool = False, inject_violation: bool = False) -> ToyInstance:
    """The prover reveals ``int(x) mod 3``; computing it alone costs ``self_cost``."""
    n = 3
    insts = [format(i, "03b") for i in range(8) if i % 2 == 1]
    secret = lambda x: int(x, 2) % 3
    fam = ZkProblemFamily(
        "secret", n, lambda x: int(x, 2) % 2 == 1, insts, ["0", "1"], (0, 1, 2),
        SeparableUtility(lambda s, t, a: payoff if a == secret(s) else 0, lambda c: c, monotone=True))
    prover = RevealingProver(secret, (0, 1, 2), randomized)
    vs = [ToyVerifier("ask", secret, ask_cost=ask_cost, self_cost=self_cost),
          ToyVerifier("self", secret, ask_cost=ask_cost, self_cost=self_cost),
          ToyVerifier("guess", secret),
          ToyVerifier("coin", secret, ask_cost=ask_cost, self_cost=self_cost)]
    b = sim_steps + slack
    sims = {v.name: toy_simulator(v, prover, steps=sim_steps,
                                  violate_at=b + 1 if inject_violation and v.mode == "ask" else None)
            for v in vs}
    return ToyInstance(fam, prover, vs, sims, SpeedupFunction.linear(1, b), 4)


def random_toy(seed: int) -> ToyInstance:
    """A generated family with valid simulators and ``p(x) = x + b``."""
    rng = random.Random(seed)
    n = rng.choice([2, 3])
    mod = rng.choice([2, 3])
    res = rng.randrange(mod)
    insts = [format(i, f"0{n}b") for i in range(2 ** n) if i % mod == res]
    auxes = ["0"] if rng.random() < 0.5 else ["0", "1"]
    k_actions = rng.choice([2, 3, 4])
    mult, off = rng.randrange(1, 5), rng.randrange(k_actions)
    secret = lambda x: (int(x, 2) * mult + off) % k_actions
    payoff = rng.randint(5, 30)
    scale = rng.choice([1, 1, 2])
    fam = ZkProblemFamily(
        f"toy-{seed}", n, lambda x: int(x, 2) % mod == res, insts, auxes, tuple(range(k_actions)),
        SeparableUtility(lambda s, t, a: payoff if a == secret(s) else 0, lambda c: scale * c,
                         monotone=True))
    randomized = rng.random() < 0.5
    prover = RevealingProver(secret, range(k_actions), randomized)
    ask_cost, self_cost = rng.randint(0, 3), rng.randint(1, 40)
    guess = rng.randrange(k_actions)
    vs = [ToyVerifier("ask", secret, ask_cost=ask_cost, self_cost=self_cost, guess=guess),
          ToyVerifier("self", secret, ask_cost=ask_cost, self_cost=self_cost, guess=guess),
          ToyVerifier("guess", secret, guess=guess)]
    if rng.random() < 0.5:
        vs.append(ToyVerifier("coin", secret, ask_cost=ask_cost, self_cost=self_cost, guess=guess))
    steps = rng.randint(0, 6)
    p = SpeedupFunction.linear(1, steps + rng.randint(0, 3))
    sims = {v.name: toy_simulator(v, prover, steps=steps) for v in vs}
    return ToyInstance(fam, prover, vs, sims, p, rng.randint(2, 8))


def run_toy(inst: ToyInstance) -> Theorem1Report:
    return check_theorem1_instance(inst.family, inst.prover, inst.verifiers, inst.simulators,
                                   inst.p, inst.tape_length)
