"""Standard and computational decision problems, evaluated exactly.

A standard problem is the tuple (states, types, actions, prior, utility); a
computational problem swaps the utility for one that also sees the complexity
of the chosen machine, and adds a finite, ordered set of machines.  All
arithmetic is over :class:`~fractions.Fraction`, so sums do not depend on the
order in which (state, type) pairs are visited.

Ties are always broken in favour of the smallest declared index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence

State = Hashable
Type = Hashable
Action = Hashable


class DecisionError(ValueError):
    pass


class UnknownActionError(DecisionError):
    pass


class PartialAssignmentError(DecisionError):
    pass


class NullEventError(DecisionError):
    pass


class EmptyChoiceError(DecisionError):
    pass


class PriorError(DecisionError):
    pass


# ---------------------------------------------------------------------------
# priors


class _Block:
    """A rectangle ``states x types`` on which the prior has constant mass."""

    __slots__ = ("mass", "states", "types", "_lookup")

    def __init__(self, mass: Fraction, states: Sequence, types: Sequence):
        self.mass = mass
        self.states = states
        self.types = types
        self._lookup = None

    def has_state(self, s) -> bool:
        if isinstance(self.states, range):
            return s in self.states
        if self._lookup is None:
            self._lookup = frozenset(self.states)
        return s in self._lookup

    def has_type(self, t) -> bool:
        return t in self.types

    def __len__(self):
        return len(self.states) * len(self.types)

    def pairs(self) -> Iterator[tuple]:
        for s in self.states:
            for t in self.types:
                yield s, t

    def restrict(self, cell) -> "_Block | None":
        if (isinstance(cell, range) and isinstance(self.states, range)
                and cell.step == 1 and self.states.step == 1):
            kept = range(max(cell.start, self.states.start), min(cell.stop, self.states.stop))
            return _Block(self.mass, kept, self.types) if len(kept) else None
        if len(cell) <= len(self.states):
            kept = [s for s in cell if self.has_state(s)]
        else:
            kept = [s for s in self.states if s in cell]
        if not kept:
            return None
        if len(kept) == len(self.states):
            return self
        return _Block(self.mass, tuple(kept), self.types)

    def scaled(self, factor: Fraction) -> "_Block":
        return _Block(self.mass * factor, self.states, self.types)


class JointPrior:
    """Exact probability mass on ``S x T``.

    Stored as a list of constant-mass rectangles so that uniform priors over
    large state spaces (``range(2**20)``) cost no memory.  Zero-mass entries
    are dropped.  A prior need not be normalized while it is being built
    (:meth:`restrict` returns unnormalized sub-measures); problem
    constructors insist on total mass exactly 1.
    """

    def __init__(self, blocks: Iterable[_Block]):
        kept = []
        for b in blocks:
            if b.mass < 0:
                raise PriorError(f"negative prior mass {b.mass}")
            if b.mass and len(b):
                kept.append(b)
        self._blocks = tuple(kept)
        self.total = sum((b.mass * len(b) for b in self._blocks), Fraction(0))

    # -- constructors ------------------------------------------------------
    @classmethod
    def from_table(cls, mass: Mapping[tuple, Any]) -> "JointPrior":
        blocks = []
        for (s, t), m in mass.items():
            blocks.append(_Block(Fraction(m), (s,), (t,)))
        return cls(blocks)

    @classmethod
    def uniform(cls, states: Sequence, types: Sequence) -> "JointPrior":
        n = len(states) * len(types)
        if n == 0:
            raise PriorError("uniform prior over an empty set")
        return cls([_Block(Fraction(1, n), states, tuple(types))])

    @classmethod
    def product(cls, state_mass: Mapping, type_mass: Mapping | None = None,
                types: Sequence | None = None) -> "JointPrior":
        """Independent product; ``type_mass`` defaults to uniform over ``types``."""
        if type_mass is None:
            if not types:
                raise PriorError("product prior needs type masses or a type list")
            type_mass = {t: Fraction(1, len(types)) for t in types}
        by_state: dict[Fraction, list] = {}
        for s, m in state_mass.items():
            by_state.setdefault(Fraction(m), []).append(s)
        by_type: dict[Fraction, list] = {}
        for t, m in type_mass.items():
            by_type.setdefault(Fraction(m), []).append(t)
        blocks = [
            _Block(ms * mt, tuple(ss), tuple(ts))
            for ms, ss in by_state.items()
            for mt, ts in by_type.items()
        ]
        return cls(blocks)

    # -- queries -----------------------------------------------------------
    @property
    def blocks(self) -> tuple:
        return self._blocks

    def items(self) -> Iterator[tuple[tuple, Fraction]]:
        for b in self._blocks:
            for pair in b.pairs():
                yield pair, b.mass

    def mass(self, s, t) -> Fraction:
        total = None
        for b in self._blocks:
            if b.has_state(s) and b.has_type(t):
                total = b.mass if total is None else total + b.mass
        return Fraction(0) if total is None else total

    def states(self) -> set:
        out = set()
        for b in self._blocks:
            out.update(b.states)
        return out

    def types(self) -> set:
        out = set()
        for b in self._blocks:
            out.update(b.types)
        return out

    def restrict(self, cell) -> "JointPrior":
        """Unnormalized restriction to the states in ``cell``."""
        blocks = []
        for b in self._blocks:
            r = b.restrict(cell)
            if r is not None:
                blocks.append(r)
        return JointPrior(blocks)

    def scaled(self, factor) -> "JointPrior":
        factor = Fraction(factor)
        return JointPrior([b.scaled(factor) for b in self._blocks])

    def expect(self, f: Callable[[Any, Any], Any]) -> Fraction:
        """``sum_{(s,t)} mass(s,t) * f(s,t)`` exactly."""
        total = Fraction(0)
        for b in self._blocks:
            inner = 0
            for s in b.states:
                for t in b.types:
                    inner += f(s, t)
            total += b.mass * inner
        return total

    def as_table(self) -> dict:
        table: dict = {}
        for pair, m in self.items():
            table[pair] = table.get(pair, Fraction(0)) + m
        return table

    def __eq__(self, other):
        if not isinstance(other, JointPrior):
            return NotImplemented
        return self.as_table() == other.as_table()

    def __repr__(self):
        return f"JointPrior(total={self.total}, blocks={len(self._blocks)})"


def condition_prior(prior: JointPrior, cell) -> JointPrior:
    """Condition ``prior`` on the event that the state lies in ``cell``."""
    restricted = prior.restrict(cell)
    if restricted.total == 0:
        raise NullEventError("conditioning on null event")
    return restricted.scaled(1 / restricted.total)


def _check_prior(prior: JointPrior, states: Sequence, types: Sequence):
    if prior.total != 1:
        raise PriorError(f"prior mass {prior.total} ≠ 1")
    type_set = set(types)
    for b in prior.blocks:
        if not set(b.types) <= type_set:
            raise PriorError(f"prior mentions undeclared types {set(b.types) - type_set}")
    if isinstance(states, range):
        for b in prior.blocks:
            if isinstance(b.states, range):
                if b.states and (b.states[0] not in states or b.states[-1] not in states):
                    raise PriorError("prior mentions undeclared states")
            elif any(s not in states for s in b.states):
                raise PriorError("prior mentions undeclared states")
    else:
        extra = prior.states() - set(states)
        if extra:
            raise PriorError(f"prior mentions undeclared states {sorted(map(str, extra))[:5]}")


# ---------------------------------------------------------------------------
# standard problems


@dataclass(frozen=True)
class StandardDecisionProblem:
    """(S, T, A, Pr, u) with a total, exact utility table."""

    states: Sequence
    types: Sequence
    actions: Sequence
    prior: JointPrior
    utility: Mapping = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "states", _freeze(self.states))
        object.__setattr__(self, "types", _freeze(self.types))
        object.__setattr__(self, "actions", _freeze(self.actions))
        _check_prior(self.prior, self.states, self.types)
        util = self.utility
        table = {}
        for s in self.states:
            for t in self.types:
                for a in self.actions:
                    try:
                        v = util(s, t, a) if callable(util) else util[(s, t, a)]
                    except KeyError:
                        raise PartialAssignmentError(
                            f"utility undefined at ({s!r}, {t!r}, {a!r})") from None
                    table[(s, t, a)] = Fraction(v)
        object.__setattr__(self, "utility", table)

    def u(self, s, t, a) -> Fraction:
        return self.utility[(s, t, a)]


def _freeze(seq):
    return seq if isinstance(seq, range) else tuple(seq)


def expected_utility_action(problem: StandardDecisionProblem, action,
                            prior: JointPrior | None = None) -> Fraction:
    """Expected utility of ``action`` under ``prior`` (default: the problem's)."""
    if action not in problem.actions:
        raise UnknownActionError(f"unknown action {action!r}")
    prior = problem.prior if prior is None else prior
    util = problem.utility
    return prior.expect(lambda s, t: util[(s, t, action)])


def best_action(problem: StandardDecisionProblem,
                prior: JointPrior | None = None) -> tuple[Any, Fraction]:
    """Maximizing action and its value; first declared action wins ties."""
    if not problem.actions:
        raise EmptyChoiceError("empty action set")
    best = None
    for a in problem.actions:
        v = expected_utility_action(problem, a, prior)
        if best is None or v > best[1]:
            best = (a, v)
    return best


# ---------------------------------------------------------------------------
# machines


class Machine:
    """A non-interactive machine: the decision maker's belief about what it
    outputs and what it costs in each (state, type).

    Subclasses implement :meth:`out` and :meth:`complexity`.  A machine that
    behaves identically on all but a few pairs may also implement
    :meth:`sparse`, which lets evaluators skip the common part.
    """

    name: str = "machine"

    def out(self, s, t):
        raise NotImplementedError

    def complexity(self, s, t) -> int:
        raise NotImplementedError

    def sparse(self):
        """``(default_output, default_complexity, exceptional_pairs)`` or None.

        Outside ``exceptional_pairs`` the machine must output the default
        with the default complexity.
        """
        return None

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class MachineSet(Sequence):
    """Ordered machines with unique names; order is the tie-break order."""

    def __init__(self, machines: Iterable[Machine] = ()):
        self._machines = tuple(machines)
        names = [m.name for m in self._machines]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DecisionError(f"duplicate machine identifiers {dupes}")
        self._index = {n: i for i, n in enumerate(names)}

    def __getitem__(self, i):
        return self._machines[i]

    def __len__(self):
        return len(self._machines)

    def __contains__(self, m):
        return getattr(m, "name", m) in self._index

    def names(self) -> list[str]:
        return [m.name for m in self._machines]

    def get(self, name: str) -> Machine:
        try:
            return self._machines[self._index[name]]
        except KeyError:
            raise DecisionError(f"unknown machine {name!r}") from None

    def index(self, m) -> int:
        return self._index[getattr(m, "name", m)]

    def subset(self, names: Iterable[str]) -> "MachineSet":
        wanted = set(names)
        missing = wanted - set(self._index)
        if missing:
            raise DecisionError(f"unknown machines {sorted(missing)}")
        return MachineSet(m for m in self._machines if m.name in wanted)

    def __add__(self, other):
        return MachineSet(tuple(self) + tuple(other))

    def __repr__(self):
        return f"MachineSet({self.names()})"


# ---------------------------------------------------------------------------
# utilities that see complexity


class SeparableUtility:
    """``u'(s, t, a, c) = payoff(s, t, a) - cost(c)``.

    ``cost`` nondecreasing makes the utility monotone in complexity, which
    some analyses exploit; pass ``monotone=True`` to assert it.
    ``state_free=True`` asserts the payoff depends on the action alone, which
    lets evaluators price a machine's default behaviour without visiting
    every state.
    """

    def __init__(self, payoff, cost=None, monotone: bool = False, state_free: bool = False):
        self.payoff = payoff
        self.cost = cost if cost is not None else (lambda c: 0)
        self.monotone = monotone
        self.state_free = state_free

    def __call__(self, s, t, a, c):
        p = self.payoff(s, t, a) if callable(self.payoff) else self.payoff[(s, t, a)]
        return p - self.cost(c)


class TableUtility:
    """Utility given as an explicit table over ``(s, t, a, c)``."""

    def __init__(self, table: Mapping, monotone: bool = False):
        self.table = {k: Fraction(v) for k, v in table.items()}
        self.monotone = monotone

    def __call__(self, s, t, a, c):
        try:
            return self.table[(s, t, a, c)]
        except KeyError:
            raise PartialAssignmentError(f"utility undefined at {(s, t, a, c)!r}") from None


@dataclass(frozen=True)
class ComputationalDecisionProblem:
    """(S, T, A, Pr, machines, complexity, out, u').

    ``out`` and ``complexity`` are realized by the machines themselves (tables
    or backends); ``utility`` is any callable ``(s, t, a, c) -> rational``.
    """

    states: Sequence
    types: Sequence
    actions: Sequence
    prior: JointPrior
    utility: Callable = field(repr=False)
    machines: MachineSet = field(default_factory=MachineSet)

    def __post_init__(self):
        object.__setattr__(self, "states", _freeze(self.states))
        object.__setattr__(self, "types", _freeze(self.types))
        object.__setattr__(self, "actions", _freeze(self.actions))
        if not isinstance(self.machines, MachineSet):
            object.__setattr__(self, "machines", MachineSet(self.machines))
        _check_prior(self.prior, self.states, self.types)
        object.__setattr__(self, "_action_set", frozenset(self.actions))

    def with_machines(self, machines) -> "ComputationalDecisionProblem":
        return ComputationalDecisionProblem(self.states, self.types, self.actions,
                                            self.prior, self.utility, MachineSet(machines))

    def with_utility(self, utility) -> "ComputationalDecisionProblem":
        return ComputationalDecisionProblem(self.states, self.types, self.actions,
                                            self.prior, utility, self.machines)

    def check_action(self, a):
        if a not in self._action_set:
            raise UnknownActionError(f"machine output {a!r} is not an action")
        return a

    def validate(self):
        """Check every machine is total on the support of the prior."""
        for m in self.machines:
            for (s, t), _ in self.prior.items():
                self.check_action(m.out(s, t))
                c = m.complexity(s, t)
                if not isinstance(c, int) or c < 0:
                    raise PartialAssignmentError(f"complexity of {m.name} at {(s, t)!r} is {c!r}")
        return self


class Evaluator:
    """Expected utilities of machines, memoizing the shared part of sparse machines.

    One evaluator is bound to a problem and a utility; the memo is keyed by
    the identity of the (immutable) prior passed in.
    """

    def __init__(self, problem: ComputationalDecisionProblem, utility=None):
        self.problem = problem
        self.utility = problem.utility if utility is None else utility
        self._base: dict = {}

    def default_sum(self, prior: JointPrior, a0, c0) -> Fraction:
        key = (id(prior), a0, c0)
        if key not in self._base:
            u = self.utility
            self.problem.check_action(a0)
            if getattr(u, "state_free", False):
                value = prior.total * u(None, None, a0, c0)
            else:
                value = prior.expect(lambda s, t: u(s, t, a0, c0))
            self._base[key] = (value, prior)
        return self._base[key][0]

    def total(self, machine: Machine, prior: JointPrior | None = None) -> Fraction:
        """``sum mass * u'(s, t, out, C)`` over ``prior`` (which may be unnormalized)."""
        prior = self.problem.prior if prior is None else prior
        u = self.utility
        check = self.problem.check_action
        sp = machine.sparse()
        if sp is None:
            def term(s, t):
                return u(s, t, check(machine.out(s, t)), machine.complexity(s, t))
            return prior.expect(term)
        a0, c0, pairs = sp
        # exception deltas grouped by mass, so the inner sums stay integral
        by_mass: dict = {}
        masses: dict = {}
        for s, t in pairs:
            m = prior.mass(s, t)
            if m:
                a = check(machine.out(s, t))
                d = u(s, t, a, machine.complexity(s, t)) - u(s, t, a0, c0)
                masses[id(m)] = m
                by_mass[id(m)] = by_mass.get(id(m), 0) + d
        total = self.default_sum(prior, a0, c0)
        for k, d in by_mass.items():
            total += masses[k] * d
        return total


def expected_utility_machine(problem: ComputationalDecisionProblem, machine,
                             prior: JointPrior | None = None, utility=None) -> Fraction:
    """Expected utility of a machine: sum of Pr(s,t) u'(s,t,out(M,s,t),C(M,s,t))."""
    if isinstance(machine, str):
        machine = problem.machines.get(machine)
    return Evaluator(problem, utility).total(machine, prior)


def best_machine(problem: ComputationalDecisionProblem, subset=None,
                 prior: JointPrior | None = None, utility=None) -> tuple[Machine, Fraction]:
    """Maximizer of expected utility over ``subset`` (default: all machines).

    The machine space is finite, so the supremum is attained; the first
    declared machine wins ties.
    """
    machines = problem.machines if subset is None else subset
    if not len(machines):
        raise EmptyChoiceError("empty machine set")
    ev = Evaluator(problem, utility)
    best = None
    for m in machines:
        v = ev.total(m, prior)
        if best is None or v > best[1]:
            best = (m, v)
    return best


def standard_as_computational(problem: StandardDecisionProblem, machines=()) -> ComputationalDecisionProblem:
    """View a standard problem as a computational one whose utility ignores complexity."""
    util = problem.utility
    return ComputationalDecisionProblem(
        problem.states, problem.types, problem.actions, problem.prior,
        lambda s, t, a, c: util[(s, t, a)], MachineSet(machines))
