"""Table-backed and function-backed machines."""
from __future__ import annotations

from typing import Callable, Mapping

from .core import Machine, PartialAssignmentError


class BeliefTable(Machine):
    """State-indexed output and complexity tables.

    ``out``/``complexity`` map ``(state, type)`` to an action / a natural.  A
    missing entry is looked up in ``backend`` if one is given, otherwise it
    is a partial assignment.  ``default`` (an ``(action, complexity)`` pair)
    fills every pair not in the tables and makes the machine sparse.
    """

    def __init__(self, name: str, out: Mapping, complexity: Mapping | None = None,
                 backend: Machine | None = None, default: tuple | None = None):
        self.name = name
        self.out_table = dict(out)
        self.complexity_table = dict(complexity) if complexity is not None else {k: 0 for k in self.out_table}
        self.backend = backend
        self.default = default

    def out(self, s, t):
        try:
            return self.out_table[(s, t)]
        except KeyError:
            if self.backend is not None:
                return self.backend.out(s, t)
            if self.default is not None:
                return self.default[0]
            raise PartialAssignmentError(f"partial assignment: no output for {self.name} at {(s, t)!r}") from None

    def complexity(self, s, t) -> int:
        try:
            return self.complexity_table[(s, t)]
        except KeyError:
            if self.backend is not None:
                return self.backend.complexity(s, t)
            if self.default is not None:
                return self.default[1]
            raise PartialAssignmentError(f"partial assignment: no complexity for {self.name} at {(s, t)!r}") from None

    def sparse(self):
        if self.default is None or self.backend is not None:
            return None
        keys = self.out_table.keys() | self.complexity_table.keys()
        return self.default[0], self.default[1], keys

    def disagreements(self) -> list:
        """Entries where the table and its backend differ (should be empty)."""
        if self.backend is None:
            return []
        bad = []
        for key, a in self.out_table.items():
            if self.backend.out(*key) != a:
                bad.append((key, "out", a, self.backend.out(*key)))
        for key, c in self.complexity_table.items():
            if self.backend.complexity(*key) != c:
                bad.append((key, "complexity", c, self.backend.complexity(*key)))
        return bad

    @classmethod
    def tabulate(cls, machine: Machine, pairs, name: str | None = None) -> "BeliefTable":
        """Freeze ``machine`` into explicit tables over ``pairs``."""
        out, comp = {}, {}
        for s, t in pairs:
            out[(s, t)] = machine.out(s, t)
            comp[(s, t)] = machine.complexity(s, t)
        return cls(name or machine.name, out, comp)


class ConstantMachine(Machine):
    """Outputs the same action at fixed complexity everywhere."""

    def __init__(self, name: str, action, complexity: int = 0):
        self.name = name
        self.action = action
        self.cost = complexity

    def out(self, s, t):
        return self.action

    def complexity(self, s, t) -> int:
        return self.cost

    def sparse(self):
        return self.action, self.cost, ()


class FunctionMachine(Machine):
    """Output and complexity computed by plain functions of ``(s, t)``."""

    def __init__(self, name: str, out: Callable, complexity: Callable | int = 0):
        self.name = name
        self._out = out
        self._complexity = complexity

    def out(self, s, t):
        return self._out(s, t)

    def complexity(self, s, t) -> int:
        if callable(self._complexity):
            return self._complexity(s, t)
        return self._complexity


class SparseMachine(Machine):
    """Default behaviour everywhere except on an explicit set of pairs.

    ``exceptions`` is any mapping ``(s, t) -> (action, complexity)``; lazy
    mappings keep large search machines cheap.
    """

    def __init__(self, name: str, default_action, default_complexity: int, exceptions: Mapping):
        self.name = name
        self.default = (default_action, default_complexity)
        self.exceptions = exceptions

    def out(self, s, t):
        return self.exceptions.get((s, t), self.default)[0]

    def complexity(self, s, t) -> int:
        return self.exceptions.get((s, t), self.default)[1]

    def sparse(self):
        return self.default[0], self.default[1], self.exceptions.keys()
