"""Speedup functions and the value of a computational speedup.

A complexity assignment ``C'`` is a ``p``-speedup of ``C`` when
``C' <= C <= p(C')`` everywhere.  Because expected utility is a sum of
independent terms, the best admissible ``C'`` can be chosen term by term:
for complexity ``c`` the admissible range is ``[min{c' : p(c') >= c}, c]``.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable, Mapping, Sequence

from .core import (
    ComputationalDecisionProblem, DecisionError, EmptyChoiceError, SeparableUtility, best_machine,
)
from .protocol import InteractiveMachine


class SpeedupError(DecisionError):
    pass


class SpeedupFunction:
    """A monotone map on naturals with ``p(x) >= x``.

    Build with :meth:`linear`, :meth:`polynomial`, :meth:`table` or
    :meth:`identity`.  Explicit tables are defined only on their keys
    ``0..max``; asking outside raises.
    """

    def __init__(self, fn: Callable[[int], int], label: str, limit: int | None = None):
        self._fn = fn
        self.label = label
        self.limit = limit

    def __call__(self, x: int) -> int:
        if x < 0:
            raise SpeedupError(f"speedup argument {x} is negative")
        if self.limit is not None and x > self.limit:
            raise SpeedupError(f"speedup table {self.label} undefined at {x}")
        return self._fn(x)

    def __repr__(self):
        return f"SpeedupFunction({self.label})"

    @classmethod
    def identity(cls) -> "SpeedupFunction":
        return cls(lambda x: x, "x")

    @classmethod
    def linear(cls, a: int = 1, b: int = 0) -> "SpeedupFunction":
        if a < 1 or b < 0:
            raise SpeedupError(f"linear speedup {a}x+{b} would allow p(x) < x")
        return cls(lambda x: a * x + b, f"{a}x+{b}")

    @classmethod
    def polynomial(cls, coefficients: Sequence[int]) -> "SpeedupFunction":
        """``p(x) = sum coefficients[i] * x**i``; coefficients must be nonnegative."""
        coeffs = [int(c) for c in coefficients]
        if any(c < 0 for c in coeffs):
            raise SpeedupError("polynomial speedup needs nonnegative coefficients")
        p = cls(lambda x: sum(c * x ** i for i, c in enumerate(coeffs)), f"poly{coeffs}")
        p.check(range(0, 64))
        return p

    @classmethod
    def table(cls, values: Mapping[int, int] | Sequence[int]) -> "SpeedupFunction":
        if isinstance(values, Mapping):
            keys = sorted(values)
            if keys != list(range(len(keys))):
                raise SpeedupError("speedup table must cover 0..max")
            seq = [int(values[k]) for k in keys]
        else:
            seq = [int(v) for v in values]
        p = cls(seq.__getitem__, f"table{seq}", limit=len(seq) - 1)
        p.check(range(len(seq)))
        return p

    @classmethod
    def parse(cls, text: str) -> "SpeedupFunction":
        """``id``, ``linear:a,b``, ``poly:c0,c1,...``, ``table:v0,v1,...`` or ``k*x``."""
        text = text.strip()
        if text in ("id", "identity", "x"):
            return cls.identity()
        if text.endswith("*x") and text[:-2].isdigit():
            return cls.linear(int(text[:-2]), 0)
        kind, _, rest = text.partition(":")
        try:
            nums = [int(v) for v in rest.split(",") if v.strip()]
        except ValueError:
            raise SpeedupError(f"cannot parse speedup {text!r}") from None
        if kind == "linear" and len(nums) in (1, 2):
            return cls.linear(*nums)
        if kind == "poly":
            return cls.polynomial(nums)
        if kind == "table":
            return cls.table(nums)
        raise SpeedupError(f"cannot parse speedup {text!r}")

    def check(self, domain: range) -> "SpeedupFunction":
        prev = None
        for x in domain:
            y = self(x)
            if y < x:
                raise SpeedupError(f"{self.label}: p({x}) = {y} < {x}")
            if prev is not None and y < prev:
                raise SpeedupError(f"{self.label} is not monotone at {x}")
            prev = y
        return self

    def min_preimage(self, c: int) -> int:
        """Smallest ``c'`` with ``p(c') >= c``; at most ``c`` since ``p(c) >= c``."""
        lo, hi = 0, c
        while lo < hi:
            mid = (lo + hi) // 2
            if self(mid) >= c:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def dominated_by(self, other: "SpeedupFunction", domain: range) -> bool:
        return all(self(x) <= other(x) for x in domain)


def check_speedup_relation(Cprime: Mapping, C: Mapping, p: SpeedupFunction) -> bool:
    """True iff ``C'(k) <= C(k) <= p(C'(k))`` for every key ``(machine, s, t)``."""
    if set(Cprime) != set(C):
        raise SpeedupError("complexity assignments have different domains")
    return all(Cprime[k] <= C[k] <= p(Cprime[k]) for k in C)


class SpeedupUtility:
    """``u~(s, t, a, c) = max over admissible c' of u'(s, t, a, c')``."""

    def __init__(self, utility, p: SpeedupFunction):
        self.base = utility
        self.p = p
        self.monotone = getattr(utility, "monotone", False)
        self.state_free = getattr(utility, "state_free", False)
        self._pre = lru_cache(maxsize=None)(p.min_preimage)
        if isinstance(utility, SeparableUtility):
            cost = utility.cost
            pre = self._pre

            @lru_cache(maxsize=None)
            def best_cost(c):
                if self.monotone:
                    return cost(pre(c))
                return min(cost(x) for x in range(pre(c), c + 1))

            self.payoff = utility.payoff
            self.cost = best_cost
            self._separable = True
        else:
            self._separable = False

    def __call__(self, s, t, a, c):
        if self._separable:
            pay = self.payoff(s, t, a) if callable(self.payoff) else self.payoff[(s, t, a)]
            return pay - self.cost(c)
        lo = self._pre(c)
        if self.monotone:
            return self.base(s, t, a, lo)
        return max(self.base(s, t, a, x) for x in range(lo, c + 1))


def speedup_utility(utility, p: SpeedupFunction) -> SpeedupUtility:
    return SpeedupUtility(utility, p)


def value_of_p_speedup(problem: ComputationalDecisionProblem, machines=None,
                       p: SpeedupFunction | None = None, *, informant=None, tape_length: int = 0,
                       rounds: int | None = None, witness: bool = False):
    """Best expected utility under the best admissible faster complexity, less the current best.

    Interactive machines are evaluated in conversation with ``informant``
    (default: the silent one).
    """
    from .conversation import DEFAULT_ROUNDS, SILENT, conversation_expected_utility

    machines = list(problem.machines if machines is None else machines)
    if not machines:
        raise EmptyChoiceError("empty machine set")
    if p is None:
        raise SpeedupError("a speedup function is required")
    fast = SpeedupUtility(problem.utility, p)
    if any(isinstance(m, InteractiveMachine) for m in machines):
        inf = SILENT if informant is None else informant
        r = DEFAULT_ROUNDS if rounds is None else rounds
        before = [conversation_expected_utility(problem, inf, m, tape_length, r) for m in machines]
        after = [conversation_expected_utility(problem, inf, m, tape_length, r, utility=fast)
                 for m in machines]
        i = max(range(len(machines)), key=lambda k: (after[k], -k))
        j = max(range(len(machines)), key=lambda k: (before[k], -k))
        value = after[i] - before[j]
        names = machines[i].name, machines[j].name
    else:
        m_after, v_after = best_machine(problem, machines, utility=fast)
        m_before, v_before = best_machine(problem, machines)
        value = v_after - v_before
        names = m_after.name, m_before.name
    if witness:
        return value, names[0], names[1]
    return value
