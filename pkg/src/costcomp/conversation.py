"""Conversations between a decision maker's machine and an informant.

The machine moves first from the view ``t;<>;r``.  Each ``Send`` is answered
by the informant, which runs on the true state and sees only the messages
sent to it and its own coins.  The conversation ends when the machine acts.

Randomness is exact: both parties read from finite tapes of declared
length ``R``, and expected utilities average over every tape pair.  Tapes
are expanded lazily, one bit at a time, so a deterministic pair costs a
single run regardless of ``R``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .core import ComputationalDecisionProblem, DecisionError, EmptyChoiceError
from .protocol import (
    Act, Context, FixedTape, InsufficientRandomness, InteractiveMachine, Send, View,
)

DEFAULT_ROUNDS = 64


class ConversationError(DecisionError):
    pass


class _Silent(InteractiveMachine):
    """The informant that never answers."""

    name = "⊥"
    alphabet = frozenset()

    def move(self, ctx):
        raise ConversationError("the silent informant has no moves")


SILENT = _Silent()


def is_silent(informant) -> bool:
    return informant is SILENT or informant is None


@dataclass(frozen=True)
class TranscriptLine:
    round: int
    sender: str  # "M" or "W"
    message: Any


@dataclass(frozen=True)
class ConversationOutcome:
    view: View
    action: Any
    complexity: int
    transcript: tuple = field(default=(), compare=False)

    def transcript_lines(self) -> list[str]:
        """``round, sender, message`` rows, then ``action, complexity``."""
        lines = [f"{ln.round}, {ln.sender}, {ln.message}" for ln in self.transcript]
        lines.append(f"{self.action}, {self.complexity}")
        return lines


class _NeedBit(Exception):
    def __init__(self, which: str):
        self.which = which


class _PrefixTape:
    """Reads a known prefix; asks the enumerator to branch beyond it."""

    def __init__(self, prefix: tuple, limit: int, which: str):
        self.prefix = prefix
        self.limit = limit
        self.which = which
        self.used: list = []

    def draw(self) -> int:
        i = len(self.used)
        if i < len(self.prefix):
            b = self.prefix[i]
        elif i < self.limit:
            raise _NeedBit(self.which)
        else:
            raise InsufficientRandomness(
                f"insufficient random prefix: {self.which} tape of length {self.limit} exhausted")
        self.used.append(b)
        return b


def _as_tape(tape):
    if tape is None:
        return FixedTape(())
    if hasattr(tape, "draw"):
        return tape
    return FixedTape(tape)


def _prefix_of(ctx: Context, current):
    if ctx.prefix is not None:
        p = ctx.prefix
    elif ctx.read_all:
        p = ctx.input
    elif ctx.read_upto:
        p = ctx.input[:ctx.read_upto]
    else:
        return current
    if current in ("", None):
        return p
    try:
        return p if len(p) >= len(current) else current
    except TypeError:
        return p


class StaticMachine(InteractiveMachine):
    """An ordinary (non-interactive) machine seen as one that never sends."""

    def __init__(self, machine):
        self.machine = machine
        self.name = machine.name

    def move(self, ctx: Context):
        return Act(self.machine.out(ctx.state, ctx.read_input()))

    def complexity(self, state, view: View) -> int:
        return self.machine.complexity(state, view.type_prefix)


def as_interactive(machine) -> InteractiveMachine:
    return machine if isinstance(machine, InteractiveMachine) else StaticMachine(machine)


def generate_view(informant, machine: InteractiveMachine, state, type_, tape_w=None, tape_m=None,
                  rounds: int = DEFAULT_ROUNDS) -> ConversationOutcome:
    """Run one conversation to completion and price the machine's final view."""
    machine = as_interactive(machine)
    tw, tm = _as_tape(tape_w), _as_tape(tape_m)
    m_hist: list = []
    w_hist: list = []
    prefix: Any = ""
    transcript: list = []
    silent = is_silent(informant)
    for rnd in range(rounds + 1):
        ctx = Context(type_, state, tuple(m_hist), tuple(tm.used), tm)
        mv = machine.move(ctx)
        prefix = _prefix_of(ctx, prefix)
        if isinstance(mv, Act):
            action = mv.action
            break
        if not isinstance(mv, Send):
            raise ConversationError(f"{machine.name} made an invalid move {mv!r}")
        if silent:
            action = machine.on_silence(ctx)
            break
        if rnd == rounds:
            raise ConversationError(f"conversation exceeded the round bound {rounds}")
        transcript.append(TranscriptLine(rnd, "M", mv.message))
        w_hist.append(mv.message)
        wctx = Context(state, state, tuple(w_hist), tuple(tw.used), tw)
        reply = informant.move(wctx)
        if not isinstance(reply, Send):
            raise ConversationError(f"informant {informant.name} must reply, got {reply!r}")
        r = reply.message
        if informant.alphabet is not None and r not in informant.alphabet:
            raise ConversationError(f"informant {informant.name} replied {r!r} outside its alphabet")
        if machine.alphabet and r not in machine.alphabet:
            raise ConversationError(f"{machine.name} cannot read reply {r!r}")
        transcript.append(TranscriptLine(rnd, "W", r))
        m_hist.append(r)
    view = View(prefix, tuple(m_hist), tuple(tm.used))
    return ConversationOutcome(view, action, machine.complexity(state, view), tuple(transcript))


def enumerate_outcomes(informant, machine, state, type_, tape_length: int = 0,
                       rounds: int = DEFAULT_ROUNDS) -> list[tuple[Fraction, ConversationOutcome]]:
    """Every distinct outcome over all pairs of tapes of length ``tape_length``, with its probability.

    A bit neither party reads never splits the enumeration, which is what
    makes the result exact for the full ``2^R x 2^R`` uniform tape space.
    """
    out = []
    stack = [((), ())]
    while stack:
        pm, pw = stack.pop()
        tm = _PrefixTape(pm, tape_length, "machine")
        tw = _PrefixTape(pw, tape_length, "informant")
        try:
            oc = generate_view(informant, machine, state, type_, tw, tm, rounds)
        except _NeedBit as need:
            if need.which == "machine":
                stack.extend([(pm + (1,), pw), (pm + (0,), pw)])
            else:
                stack.extend([(pm, pw + (1,)), (pm, pw + (0,))])
            continue
        out.append((Fraction(1, 2 ** (len(pm) + len(pw))), oc))
    return out


def sample_outcomes(informant, machine, state, type_, tape_length: int, samples: int,
                    seed: int = 0, rounds: int = DEFAULT_ROUNDS):
    """Monte Carlo alternative for long tapes; weights are ``1/samples``."""
    rng = random.Random(seed)
    out = []
    for _ in range(samples):
        tw = FixedTape(rng.getrandbits(1) for _ in range(tape_length))
        tm = FixedTape(rng.getrandbits(1) for _ in range(tape_length))
        out.append((Fraction(1, samples), generate_view(informant, machine, state, type_, tw, tm, rounds)))
    return out


def conversation_expected_utility(problem: ComputationalDecisionProblem, informant, machine,
                                  tape_length: int = 0, rounds: int = DEFAULT_ROUNDS,
                                  utility=None) -> Fraction:
    """Exact expectation of ``u'(s, t, action, complexity)`` over the prior and both tapes."""
    u = problem.utility if utility is None else utility

    def term(s, t):
        total = Fraction(0)
        for w, oc in enumerate_outcomes(informant, machine, s, t, tape_length, rounds):
            total += w * u(s, t, problem.check_action(oc.action), oc.complexity)
        return total

    return problem.prior.expect(term)


@dataclass(frozen=True)
class ConversationValue:
    value: Fraction
    with_informant: Fraction
    silent: Fraction
    best_with: str
    best_silent: str


def _argmax(values: Sequence[Fraction]) -> int:
    return max(range(len(values)), key=lambda i: (values[i], -i))


def value_of_conversation(problem: ComputationalDecisionProblem, informant, machines=None,
                          tape_length: int = 0, rounds: int = DEFAULT_ROUNDS, *,
                          utility=None, witness: bool = False):
    """Best expected utility conversing with ``informant`` less the best with silence.

    One machine is chosen for all states before any message is exchanged.
    """
    machines = list(problem.machines if machines is None else machines)
    if not machines:
        raise EmptyChoiceError("empty machine set")
    loud = [conversation_expected_utility(problem, informant, m, tape_length, rounds, utility)
            for m in machines]
    if is_silent(informant):
        quiet = loud
    else:
        quiet = [conversation_expected_utility(problem, SILENT, m, tape_length, rounds, utility)
                 for m in machines]
    i, j = _argmax(loud), _argmax(quiet)
    value = loud[i] - quiet[j]
    if witness:
        return ConversationValue(value, loud[i], quiet[j], machines[i].name, machines[j].name)
    return value


def particular_conversation_value(problem: ComputationalDecisionProblem, informant, machines=None,
                                  tape_length: int = 0, rounds: int = DEFAULT_ROUNDS,
                                  utility=None) -> tuple[Fraction, Fraction]:
    """Diagnostic: let the final action depend on the whole conversation.

    For each machine, the conversation is run as usual, but once the view is
    fixed the best action given that view replaces the machine's own.  The
    machine's complexity is kept.  Returns ``(inner, outer)`` where
    ``outer`` is :func:`value_of_conversation`; ``inner >= outer`` always.
    """
    machines = list(problem.machines if machines is None else machines)
    if not machines:
        raise EmptyChoiceError("empty machine set")
    u = problem.utility if utility is None else utility
    inner_best = None
    for m in machines:
        by_view: dict = {}
        for (s, t), mass in problem.prior.items():
            for w, oc in enumerate_outcomes(informant, m, s, t, tape_length, rounds):
                by_view.setdefault(oc.view, []).append((mass * w, s, t, oc.complexity))
        total = Fraction(0)
        for entries in by_view.values():
            total += max(sum(p * u(s, t, a, c) for p, s, t, c in entries) for a in problem.actions)
        inner_best = total if inner_best is None else max(inner_best, total)
    quiet = max(conversation_expected_utility(problem, SILENT, m, tape_length, rounds, utility)
                for m in machines)
    outer = value_of_conversation(problem, informant, machines, tape_length, rounds, utility=utility)
    return inner_best - quiet, outer


# ---------------------------------------------------------------------------
# informants and adapters


class FunctionInformant(InteractiveMachine):
    """Replies ``reply(state, messages_received)``; no coins."""

    def __init__(self, name: str, reply, alphabet: Iterable):
        self.name = name
        self._reply = reply
        self.alphabet = frozenset(alphabet)

    def move(self, ctx: Context):
        return Send(self._reply(ctx.input, ctx.history))


def threshold_informant(name: str = "truthful") -> FunctionInformant:
    """Answers questions ``"x>k?"`` truthfully with ``yes``/``no``."""
    def reply(state, history):
        q = history[-1]
        if not (isinstance(q, str) and q.startswith("x>") and q.endswith("?")):
            raise ConversationError(f"{name} cannot parse question {q!r}")
        return "yes" if state > int(q[2:-1]) else "no"
    return FunctionInformant(name, reply, ("yes", "no"))


class PartitionInformant(InteractiveMachine):
    """Announces the index of the state's cell in reply to any message."""

    def __init__(self, partition, name: str = "cell-announcer"):
        self.partition = partition
        self.name = name
        self.alphabet = frozenset(range(len(partition)))

    def move(self, ctx: Context):
        return Send(self.partition.cell_of(ctx.input))


class AskingMachine(InteractiveMachine):
    """Wraps a cell-aware machine: ask once, then act on the announced cell.

    Silence is treated as the null cell.  Messaging is free, so the
    conversation value with a :class:`PartitionInformant` matches the
    pre-commit value of computational information.
    """

    def __init__(self, machine, question="cell?"):
        self.machine = machine
        self.name = machine.name
        self.question = question

    def move(self, ctx: Context):
        t = ctx.read_input()
        if not ctx.history:
            return Send(self.question)
        return Act(self.machine.out(ctx.history[0], ctx.state, t))

    def on_silence(self, ctx: Context):
        return self.machine.out(None, ctx.state, ctx.read_input())

    def complexity(self, state, view: View) -> int:
        cell = view.history[0] if view.history else None
        return self.machine.complexity(cell, state, view.type_prefix)


def export_transcript(outcome: ConversationOutcome) -> str:
    return "\n".join(outcome.transcript_lines()) + "\n"
