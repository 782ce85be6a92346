"""Moves, views and the per-move context handed to interactive machines."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class Send:
    message: Any


@dataclass(frozen=True)
class Act:
    action: Any


@dataclass(frozen=True)
class View:
    """What a machine has read: type prefix, messages received, coins used."""

    type_prefix: Any = ""
    history: tuple = ()
    coins: tuple = ()

    def render(self) -> str:
        h = ",".join(map(str, self.history))
        r = "".join(map(str, self.coins))
        return f"{self.type_prefix};<{h}>;{r}"


class InsufficientRandomness(RuntimeError):
    """A machine asked for a random bit past the end of its declared tape."""


class OffTreeHistory(LookupError):
    pass


class Context:
    """Everything a machine may consult when choosing its next move.

    ``input`` is the machine's own input (the type for the decision maker,
    the state for an informant).  ``state`` is the world state, which a
    subjective machine may use to encode beliefs about its own behaviour.
    ``coins`` are the random bits consumed in earlier moves; :meth:`draw`
    consumes fresh ones.
    """

    def __init__(self, input, state, history: tuple, coins: tuple, tape):
        self.input = input
        self.state = state
        self.history = history
        self.coins = coins
        self._tape = tape
        self.read_upto = 0
        self.read_all = False
        self.prefix = None

    def draw(self, k: int = 1) -> tuple:
        return tuple(self._tape.draw() for _ in range(k))

    def coin(self) -> int:
        return self._tape.draw()

    def read_input(self):
        self.read_all = True
        return self.input

    def note_prefix(self, prefix):
        """Record an explicit type prefix (for machines that read an encoding)."""
        self.prefix = prefix

    def read_bit(self, i: int):
        """Bit ``i`` of a bitstring input, or None past its end."""
        self.read_upto = max(self.read_upto, i + 1)
        if i < len(self.input):
            return int(self.input[i])
        return None


class InteractiveMachine:
    """A machine that may exchange messages before acting.

    ``move`` returns :class:`Send` or :class:`Act`.  ``on_silence`` is asked
    for an action when a sent message will never be answered.
    ``complexity`` prices a finished view.
    """

    name = "interactive"
    alphabet: frozenset | None = None

    def move(self, ctx: Context):
        raise NotImplementedError

    def on_silence(self, ctx: Context):
        raise NotImplementedError(f"{self.name} has no action for an unanswered message")

    def complexity(self, state, view: View) -> int:
        return 0

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class FixedTape:
    """Sequential reader over an explicit finite bit tape."""

    def __init__(self, bits=()):
        self.bits = tuple(int(b) for b in bits)
        self.used: list = []

    def draw(self) -> int:
        if len(self.used) >= len(self.bits):
            raise InsufficientRandomness(
                f"insufficient random prefix: tape of length {len(self.bits)} exhausted")
        b = self.bits[len(self.used)]
        self.used.append(b)
        return b
