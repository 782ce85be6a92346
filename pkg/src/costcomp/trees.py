"""Strategy trees: finite interactive machines indexed by reply history."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .protocol import Act, Context, InteractiveMachine, OffTreeHistory, Send, View


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    kind: str  # "send" or "act"
    value: Any
    cost: int = 0
    coins: int = 0


class StrategyTree(InteractiveMachine):
    """History-indexed nodes: ``send(message)`` with one child per reply, or ``act(action)``.

    ``nodes`` maps a tuple of received replies to a :class:`Node`.  Every send
    node must have a child for each symbol of ``alphabet``.  ``fallback`` is
    the action taken when a message goes unanswered (a silent informant).
    The complexity of a view is the sum of node costs along its path.
    """

    def __init__(self, name: str, nodes: Mapping[tuple, Node], alphabet: Iterable,
                 fallback=None):
        self.name = name
        self.nodes = dict(nodes)
        self.alphabet = frozenset(alphabet)
        self.fallback = fallback
        self._validate()

    def _validate(self):
        if () not in self.nodes:
            raise TreeError(f"{self.name}: no root node")
        for h, node in self.nodes.items():
            if node.kind not in ("send", "act"):
                raise TreeError(f"{self.name}: node {h!r} has kind {node.kind!r}")
            if h and h[:-1] not in self.nodes:
                raise TreeError(f"{self.name}: node {h!r} unreachable")
            if h and self.nodes[h[:-1]].kind != "send":
                raise TreeError(f"{self.name}: node {h!r} hangs below an action")
            if node.kind == "send":
                missing = [r for r in self.alphabet if h + (r,) not in self.nodes]
                if missing:
                    raise TreeError(f"{self.name}: send node {h!r} lacks replies {sorted(map(str, missing))}")

    @classmethod
    def from_nested(cls, name: str, spec: Mapping, alphabet: Iterable, fallback=None) -> "StrategyTree":
        """Build from nested dicts ``{"send": m, "replies": {r: {...}}}`` / ``{"act": a}``."""
        nodes = {}

        def walk(h, d):
            cost = int(d.get("cost", 0))
            coins = int(d.get("coins", 0))
            if "act" in d:
                nodes[h] = Node("act", d["act"], cost, coins)
            elif "send" in d:
                nodes[h] = Node("send", d["send"], cost, coins)
                for reply, child in d.get("replies", {}).items():
                    walk(h + (reply,), child)
            else:
                raise TreeError(f"{name}: node {h!r} is neither send nor act")

        walk((), spec)
        return cls(name, nodes, alphabet, fallback)

    def node(self, history: tuple) -> Node:
        try:
            return self.nodes[tuple(history)]
        except KeyError:
            raise OffTreeHistory(f"off-tree history {tuple(history)!r} in {self.name}") from None

    def move(self, ctx: Context):
        node = self.node(ctx.history)
        if node.coins:
            ctx.draw(node.coins)
        return Send(node.value) if node.kind == "send" else Act(node.value)

    def on_silence(self, ctx: Context):
        if self.fallback is None:
            raise TreeError(f"{self.name} has no fallback action for silence")
        return self.fallback

    def complexity(self, state, view: View) -> int:
        h = tuple(view.history)
        return sum(self.node(h[:i]).cost for i in range(len(h) + 1))

    def depth(self) -> int:
        return max(len(h) for h in self.nodes)

    def paths(self):
        """Yield ``(history, action)`` for every leaf."""
        for h, node in self.nodes.items():
            if node.kind == "act":
                yield h, node.value


def strategy_tree_step(tree: StrategyTree, view: View):
    """The node content at the view's history: :class:`Send` or :class:`Act`."""
    node = tree.node(view.history)
    return Send(node.value) if node.kind == "send" else Act(node.value)


def act_now(name: str, action, cost: int = 0) -> StrategyTree:
    """A one-node tree that acts immediately."""
    return StrategyTree(name, {(): Node("act", action, cost)}, alphabet=(), fallback=action)


def binary_search_tree(lo: int, hi: int, rounds: int, *, cost: int = 0, name: str = "binary-search",
                       fallback=None, pad: bool = True) -> StrategyTree:
    """Ask ``x>mid?`` questions over ``[lo, hi]``, replies ``yes``/``no``.

    The split point is ``(lo + hi) // 2``, so over 1..100 the first question
    is ``x>50?`` and a ``yes`` leads to ``x>75?``.  With ``pad`` the tree asks
    exactly ``rounds`` questions on every path, repeating a confirming
    question once the value is pinned down; each question costs ``cost``.
    After ``rounds`` questions the tree guesses the smallest value still
    consistent with the replies.
    """
    nodes = {}

    def walk(h, a, b):
        if a > b:
            # unreachable branch under a truthful informant
            nodes[h] = Node("act", lo)
            return
        if len(h) == rounds or (a == b and not pad):
            nodes[h] = Node("act", a)
            return
        if a == b:
            nodes[h] = Node("send", f"x>{a}?", cost)
            walk(h + ("yes",), a + 1, a)
            walk(h + ("no",), a, a)
            return
        mid = (a + b) // 2
        nodes[h] = Node("send", f"x>{mid}?", cost)
        walk(h + ("yes",), mid + 1, b)
        walk(h + ("no",), a, mid)

    walk((), lo, hi)
    return StrategyTree(name, nodes, ("yes", "no"), fallback=lo if fallback is None else fallback)
