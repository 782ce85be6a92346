"""Value of information, and of computational information.

Two variants for computational problems:

* :func:`voci_postchoice` lets the decision maker pick the best machine
  *after* learning the cell: the expectation of per-cell maxima, less the
  best unconditional machine.
* :func:`voci_precommit` fixes one machine up front; that machine receives
  the cell index as an extra read-only input and may do with it whatever
  it likes (including ignore it, or pay to read it).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .core import (
    ComputationalDecisionProblem, DecisionError, EmptyChoiceError, Evaluator, JointPrior,
    Machine, MachineSet, StandardDecisionProblem, best_action,
)


class PartitionError(DecisionError):
    pass


class Partition:
    """Disjoint, nonempty cells of states that together cover the state space."""

    def __init__(self, cells: Sequence[Sequence], names: Sequence[str] | None = None,
                 cell_of: Callable | None = None):
        self.cells = tuple(c if isinstance(c, range) else tuple(c) for c in cells)
        self.names = tuple(names) if names is not None else tuple(f"q{i}" for i in range(len(self.cells)))
        if len(self.names) != len(self.cells):
            raise PartitionError("one name per cell required")
        if any(len(c) == 0 for c in self.cells):
            raise PartitionError("empty cell")
        if cell_of is None:
            index = {}
            for i, cell in enumerate(self.cells):
                for s in cell:
                    if s in index:
                        raise PartitionError(f"state {s!r} lies in cells {index[s]} and {i}")
                    index[s] = i
            self._index = index
            self._cell_of = index.__getitem__
        else:
            self._index = None
            self._cell_of = cell_of

    @classmethod
    def by_key(cls, states: Iterable, key: Callable, names: Callable | None = None) -> "Partition":
        """Group ``states`` by ``key(state)``; cells ordered by first appearance."""
        groups: dict = {}
        for s in states:
            groups.setdefault(key(s), []).append(s)
        order = list(groups)
        pos = {k: i for i, k in enumerate(order)}
        labels = [names(k) if names else str(k) for k in order]
        return cls([groups[k] for k in order], labels, cell_of=lambda s: pos[key(s)])

    @classmethod
    def trivial(cls, states: Sequence) -> "Partition":
        return cls([states], ["all"], cell_of=lambda s: 0)

    @classmethod
    def discrete(cls, states: Sequence) -> "Partition":
        return cls([(s,) for s in states], [str(s) for s in states])

    def cell_of(self, s) -> int:
        try:
            return self._cell_of(s)
        except (KeyError, IndexError):
            raise PartitionError(f"state {s!r} is in no cell") from None

    def __len__(self):
        return len(self.cells)

    def validate(self, states: Sequence, prior: JointPrior | None = None) -> "Partition":
        """Exact cover of ``states``; every cell has positive mass under ``prior``."""
        covered = sum(len(c) for c in self.cells)
        if covered != len(states):
            raise PartitionError(f"cells cover {covered} states, problem has {len(states)}")
        for s in states:
            i = self.cell_of(s)
            if s not in self.cells[i]:
                raise PartitionError(f"state {s!r} misfiled")
        if prior is not None:
            for name, cell in zip(self.names, self.cells):
                if prior.restrict(cell).total == 0:
                    raise PartitionError(f"cell {name} has zero prior mass")
        return self

    def refines(self, other: "Partition") -> bool:
        """Every cell of ``self`` lies inside one cell of ``other``."""
        for cell in self.cells:
            if len({other.cell_of(s) for s in cell}) != 1:
                return False
        return True


def value_of_information(problem: StandardDecisionProblem, partition: Partition) -> Fraction:
    """Expected best utility after learning the cell, less the best utility now."""
    partition.validate(problem.states, problem.prior)
    informed = Fraction(0)
    for cell in partition.cells:
        restricted = problem.prior.restrict(cell)
        _, v = best_action(problem, restricted.scaled(1 / restricted.total))
        informed += restricted.total * v
    _, now = best_action(problem)
    return informed - now


@dataclass(frozen=True)
class CellChoice:
    cell: str
    mass: Fraction
    machine: str
    value: Fraction  # conditional expected utility in the cell


@dataclass(frozen=True)
class InformedMachineChoice:
    value: Fraction
    informed: Fraction
    uninformed: Fraction
    uninformed_machine: str
    cells: tuple  # of CellChoice


class CellTable:
    """``value(q, i) = sum over cell q of Pr(s,t) u'(M_i)`` (unnormalized).

    Sparse machines are stored as a shared default row plus per-cell
    corrections, so a large family of searchers costs one pass over its
    exceptions rather than a full machines-by-cells matrix.
    """

    def __init__(self, problem: ComputationalDecisionProblem, machines: Sequence[Machine],
                 partition: Partition, utility=None):
        ev = Evaluator(problem, utility)
        u = ev.utility
        check = problem.check_action
        prior = problem.prior
        self.n_cells = len(partition)
        self.n_machines = len(machines)
        restricted = [prior.restrict(cell) for cell in partition.cells]
        self.cell_mass = [sub.total for sub in restricted]
        self.dense: dict[int, list] = {}      # machine -> full column
        self.key_of: dict[int, tuple] = {}    # sparse machine -> default key
        self.defaults: dict[tuple, list] = {}  # default key -> per-cell values
        self.corr: dict[int, dict] = {}       # sparse machine -> {cell: delta}
        for i, m in enumerate(machines):
            sp = m.sparse()
            if sp is None:
                self.dense[i] = [ev.total(m, sub) for sub in restricted]
                continue
            a0, c0, pairs = sp
            key = (a0, c0)
            if key not in self.defaults:
                self.defaults[key] = [ev.default_sum(sub, a0, c0) for sub in restricted]
            self.key_of[i] = key
            # (cell, id of mass) -> summed utility delta; masses are shared
            # block objects, and hashing them as Fractions is slow
            acc: dict = {}
            masses: dict = {}
            for s, t in pairs:
                mass = prior.mass(s, t)
                if mass:
                    a = check(m.out(s, t))
                    masses[id(mass)] = mass
                    k = (partition.cell_of(s), id(mass))
                    acc[k] = acc.get(k, 0) + u(s, t, a, m.complexity(s, t)) - u(s, t, a0, c0)
            c: dict = {}
            for (q, mid), d in acc.items():
                c[q] = c.get(q, 0) + masses[mid] * d
            self.corr[i] = c

    def value(self, q: int, i: int) -> Fraction:
        if i in self.dense:
            return self.dense[i][q]
        return self.defaults[self.key_of[i]][q] + self.corr[i].get(q, 0)

    def column_total(self, i: int) -> Fraction:
        if i in self.dense:
            return sum(self.dense[i], Fraction(0))
        return sum(self.defaults[self.key_of[i]], Fraction(0)) + sum(self.corr[i].values(), Fraction(0))

    def best_in_cell(self, q: int) -> int:
        """First-index maximizer within cell ``q``."""
        cands = set(self.dense)
        first_plain: dict = {}
        for i, key in self.key_of.items():
            if q in self.corr[i]:
                cands.add(i)
            elif key not in first_plain or i < first_plain[key]:
                first_plain[key] = i
        cands.update(first_plain.values())
        return max(cands, key=lambda i: (self.value(q, i), -i))

    def best_overall(self) -> tuple[int, Fraction]:
        totals = [self.column_total(i) for i in range(self.n_machines)]
        k = max(range(self.n_machines), key=lambda i: (totals[i], -i))
        return k, totals[k]


def voci_postchoice(problem: ComputationalDecisionProblem, machines=None,
                    partition: Partition | None = None, *, utility=None,
                    witness: bool = False):
    """Value of computational information when the machine is chosen per cell.

    Sums ``Pr(s,t) * max_M E_{Pr_q(s,t)}[u'_M]`` over all pairs, then
    subtracts ``max_M E_Pr[u'_M]``.  With ``witness=True`` also returns the
    per-cell winners.
    """
    machines = MachineSet(problem.machines if machines is None else machines)
    if not len(machines):
        raise EmptyChoiceError("empty machine set")
    if partition is None:
        raise PartitionError("a partition is required")
    partition.validate(problem.states, problem.prior)
    table = CellTable(problem, machines, partition, utility)
    informed = Fraction(0)
    choices = []
    for q in range(len(partition)):
        k = table.best_in_cell(q)
        v = table.value(q, k)
        informed += v
        mass = table.cell_mass[q]
        choices.append(CellChoice(partition.names[q], mass, machines[k].name, v / mass))
    k0, uninformed = table.best_overall()
    value = informed - uninformed
    if not witness:
        return value
    return InformedMachineChoice(value, informed, uninformed, machines[k0].name, tuple(choices))


# ---------------------------------------------------------------------------
# machines that read the cell


class CellAwareMachine:
    """A machine with the cell index as an extra input.

    ``out(cell, s, t)`` / ``complexity(cell, s, t)``; ``cell`` is ``None``
    when no information is given.
    """

    name = "cell-aware"

    def out(self, cell, s, t):
        raise NotImplementedError

    def complexity(self, cell, s, t) -> int:
        raise NotImplementedError

    def machine_for(self, cell) -> Machine | None:
        """An ordinary machine equivalent to this one given ``cell``, if known.

        Evaluators use it to take the sparse path; None means evaluate
        pair by pair.
        """
        return None


class _Surcharged(Machine):
    def __init__(self, machine: Machine, extra: int):
        self.machine = machine
        self.extra = extra
        self.name = machine.name

    def out(self, s, t):
        return self.machine.out(s, t)

    def complexity(self, s, t) -> int:
        return self.machine.complexity(s, t) + self.extra

    def sparse(self):
        sp = self.machine.sparse()
        if sp is None:
            return None
        return sp[0], sp[1] + self.extra, sp[2]


class CellBlind(CellAwareMachine):
    """An ordinary machine that never reads the cell input."""

    def __init__(self, machine: Machine):
        self.machine = machine
        self.name = machine.name

    def out(self, cell, s, t):
        return self.machine.out(s, t)

    def complexity(self, cell, s, t) -> int:
        return self.machine.complexity(s, t)

    def machine_for(self, cell):
        return self.machine


class CellDispatch(CellAwareMachine):
    """Runs ``per_cell[cell]`` when told the cell, ``uninformed`` otherwise.

    ``read_cost`` is added to the complexity whenever a cell is supplied.
    """

    def __init__(self, name: str, per_cell: Mapping[int, Machine], uninformed: Machine,
                 read_cost: int = 0):
        self.name = name
        self.per_cell = dict(per_cell)
        self.uninformed = uninformed
        self.read_cost = read_cost

    def _pick(self, cell):
        return self.uninformed if cell is None else self.per_cell[cell]

    def out(self, cell, s, t):
        return self._pick(cell).out(s, t)

    def complexity(self, cell, s, t) -> int:
        extra = 0 if cell is None else self.read_cost
        return self._pick(cell).complexity(s, t) + extra

    def machine_for(self, cell):
        m = self._pick(cell)
        if cell is None or not self.read_cost:
            return m
        return _Surcharged(m, self.read_cost)


class CellFunctionMachine(CellAwareMachine):
    def __init__(self, name: str, out: Callable, complexity: Callable | int = 0):
        self.name = name
        self._out = out
        self._complexity = complexity

    def out(self, cell, s, t):
        return self._out(cell, s, t)

    def complexity(self, cell, s, t) -> int:
        c = self._complexity
        return c(cell, s, t) if callable(c) else c


def embed_cell_winners(choice: InformedMachineChoice, machines: Sequence[Machine],
                       name: str = "cell-winners") -> CellDispatch:
    """A pre-commit machine that behaves like each cell's post-choice winner."""
    ms = MachineSet(machines)
    per_cell = {q: ms.get(c.machine) for q, c in enumerate(choice.cells)}
    return CellDispatch(name, per_cell, ms.get(choice.uninformed_machine))


def _precommit_total(problem, machine, partition, informed: bool, utility,
                     ev: Evaluator, restricted: list) -> Fraction:
    if not isinstance(machine, CellAwareMachine):
        raise DecisionError(f"machine not cell-aware: {getattr(machine, 'name', machine)!r}")
    if not informed:
        plain = machine.machine_for(None)
        if plain is not None:
            return ev.total(plain)
    else:
        plains = [machine.machine_for(q) for q in range(len(partition))]
        if all(p is not None for p in plains):
            return sum((ev.total(p, sub) for p, sub in zip(plains, restricted)), Fraction(0))
    u = ev.utility
    check = problem.check_action

    def term(s, t):
        q = partition.cell_of(s) if informed else None
        return u(s, t, check(machine.out(q, s, t)), machine.complexity(q, s, t))

    return problem.prior.expect(term)


def voci_precommit(problem: ComputationalDecisionProblem, machines: Sequence[CellAwareMachine],
                   partition: Partition, *, utility=None, witness: bool = False):
    """Value of computational information when the machine is fixed beforehand.

    ``max_M E_Pr[E_{Pr_q}[u'_M(cell)]] - max_M E_Pr[u'_M(no cell)]`` over the
    same machines.  Not sign-definite: reading the cell may cost more than it
    is worth.
    """
    machines = list(machines)
    if not machines:
        raise EmptyChoiceError("empty machine set")
    partition.validate(problem.states, problem.prior)
    ev = Evaluator(problem, utility)
    restricted = [problem.prior.restrict(cell) for cell in partition.cells]
    informed = [_precommit_total(problem, m, partition, True, utility, ev, restricted) for m in machines]
    blind = [_precommit_total(problem, m, partition, False, utility, ev, restricted) for m in machines]
    i = max(range(len(machines)), key=lambda k: (informed[k], -k))
    j = max(range(len(machines)), key=lambda k: (blind[k], -k))
    value = informed[i] - blind[j]
    if witness:
        return value, machines[i].name, machines[j].name
    return value


def value_of_learning_good_machine(problem: ComputationalDecisionProblem, good_states: Iterable,
                                   machines=None) -> Fraction:
    """Value of learning whether the state is one of ``good_states`` (two-cell partition)."""
    good = set(good_states)
    cells = [tuple(s for s in problem.states if s in good), tuple(s for s in problem.states if s not in good)]
    return voci_postchoice(problem, machines, Partition(cells, ["good", "not-good"]))
