"""A small fuel-metered stack machine.

Integer-only, operand stack bounded at 256 entries, 16 registers, and one
unit of complexity per executed instruction.  Programs are written in a
line-oriented assembly::

    .actions even odd      # index -> action label for `halt`
    push 0
    loop: read             # next type bit, -1 once the input is used up
    add
    jeof done
    jmp loop
    done: push 2
    mod
    halt

Jump targets and operands are checked when the program is loaded, never
mid-run.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Sequence

from .core import Machine
from .protocol import Act, Context, InteractiveMachine, Send, View

STACK_LIMIT = 256
REGISTERS = 16

_NULLARY = {
    "pop", "dup", "swap", "over", "read", "add", "sub", "mul", "mod",
    "eq", "lt", "gt", "send", "recv", "coin", "halt",
}
_JUMPS = {"jmp", "jz", "jnz", "jeof"}
_WITH_INT = {"push", "load", "store"}


class ProgramError(ValueError):
    """Malformed program, reported at load time."""


class VMError(RuntimeError):
    """Runtime fault: stack under/overflow, modulo by zero, bad action index."""


@dataclass(frozen=True)
class Program:
    instructions: tuple  # of (op, arg)
    actions: tuple | None = None
    name: str = "program"

    def __post_init__(self):
        n = len(self.instructions)
        for pc, (op, arg) in enumerate(self.instructions):
            if op in _JUMPS:
                if not isinstance(arg, int) or not 0 <= arg < n:
                    raise ProgramError(f"{self.name}:{pc}: jump target {arg!r} out of range")
            elif op in _WITH_INT:
                if not isinstance(arg, int):
                    raise ProgramError(f"{self.name}:{pc}: {op} needs an integer operand")
                if op != "push" and not 0 <= arg < REGISTERS:
                    raise ProgramError(f"{self.name}:{pc}: register {arg} out of range")
            elif op in _NULLARY:
                if arg is not None:
                    raise ProgramError(f"{self.name}:{pc}: {op} takes no operand")
            else:
                raise ProgramError(f"{self.name}:{pc}: unknown instruction {op!r}")
        if not any(op == "halt" for op, _ in self.instructions):
            raise ProgramError(f"{self.name}: no halt instruction")

    def __len__(self):
        return len(self.instructions)

    def action_for(self, value: int):
        if self.actions is None:
            return value
        if not 0 <= value < len(self.actions):
            raise VMError(f"{self.name}: halt with action index {value} outside {list(self.actions)}")
        return self.actions[value]


def assemble(text: str, name: str = "program") -> Program:
    """Parse assembly text (one mnemonic per line, ``#`` comments, ``label:``)."""
    raw = []
    labels: dict[str, int] = {}
    actions = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith(".actions"):
            actions = tuple(_atom(tok) for tok in line.split()[1:])
            continue
        while ":" in line:
            label, line = line.split(":", 1)
            label = label.strip()
            if not label.isidentifier():
                raise ProgramError(f"{name}: line {lineno}: bad label {label!r}")
            if label in labels:
                raise ProgramError(f"{name}: line {lineno}: duplicate label {label!r}")
            labels[label] = len(raw)
            line = line.strip()
        if not line:
            continue
        parts = line.split()
        op = parts[0].lower()
        if len(parts) > 2:
            raise ProgramError(f"{name}: line {lineno}: too many operands")
        raw.append((op, parts[1] if len(parts) == 2 else None, lineno))
    instructions = []
    for op, arg, lineno in raw:
        if arg is not None:
            if op in _JUMPS and arg in labels:
                arg = labels[arg]
            else:
                try:
                    arg = int(arg)
                except ValueError:
                    raise ProgramError(f"{name}: line {lineno}: bad operand {arg!r}") from None
        elif op in _JUMPS or op in _WITH_INT:
            raise ProgramError(f"{name}: line {lineno}: {op} needs an operand")
        instructions.append((op, arg))
    return Program(tuple(instructions), actions, name)


def _atom(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


@dataclass(frozen=True)
class ExecutionResult:
    outcome: str  # "halted" | "exhausted"
    action: Any
    steps: int
    trace_length: int  # input/output events: bits read, coins, sends, receives
    bits_read: int = 0

    @property
    def halted(self) -> bool:
        return self.outcome == "halted"


@dataclass
class _Stop:
    kind: str  # halt | exhausted | send
    value: Any
    steps: int
    events: int
    bits_read: int
    coins: tuple


def _run(program: Program, bits: Sequence[int], fuel: int, replies: Sequence = (),
         coins: Callable[[], int] | None = None) -> _Stop:
    """Execute until halt, fuel exhaustion, or a send with no recorded reply."""
    code = program.instructions
    stack: list[int] = []
    regs = [0] * REGISTERS
    pending: list = []
    pc = steps = events = cursor = sent = seen = 0
    used_coins: list[int] = []
    nbits = len(bits)
    while True:
        if steps >= fuel:
            return _Stop("exhausted", None, steps, events, max(cursor, seen), tuple(used_coins))
        if pc >= len(code):
            raise VMError(f"{program.name}: ran past the last instruction")
        op, arg = code[pc]
        steps += 1
        pc += 1
        try:
            if op == "push":
                stack.append(arg)
            elif op == "load":
                stack.append(regs[arg])
            elif op == "store":
                regs[arg] = stack.pop()
            elif op == "add":
                b = stack.pop(); stack.append(stack.pop() + b)
            elif op == "sub":
                b = stack.pop(); stack.append(stack.pop() - b)
            elif op == "mul":
                b = stack.pop(); stack.append(stack.pop() * b)
            elif op == "mod":
                b = stack.pop()
                if b == 0:
                    raise VMError(f"{program.name}:{pc - 1}: modulo by zero")
                stack.append(stack.pop() % b)
            elif op == "lt":
                b = stack.pop(); stack.append(int(stack.pop() < b))
            elif op == "gt":
                b = stack.pop(); stack.append(int(stack.pop() > b))
            elif op == "eq":
                b = stack.pop(); stack.append(int(stack.pop() == b))
            elif op == "jz":
                if stack.pop() == 0:
                    pc = arg
            elif op == "jnz":
                if stack.pop() != 0:
                    pc = arg
            elif op == "jmp":
                pc = arg
            elif op == "jeof":
                if cursor >= nbits:
                    pc = arg
                else:
                    # peeking at whether another bit exists reads it
                    seen = max(seen, cursor + 1)
            elif op == "read":
                events += 1
                if cursor < nbits:
                    stack.append(int(bits[cursor]))
                    cursor += 1
                else:
                    stack.append(-1)
            elif op == "dup":
                stack.append(stack[-1])
            elif op == "pop":
                stack.pop()
            elif op == "swap":
                stack[-1], stack[-2] = stack[-2], stack[-1]
            elif op == "over":
                stack.append(stack[-2])
            elif op == "halt":
                return _Stop("halt", stack.pop(), steps, events, max(cursor, seen), tuple(used_coins))
            elif op == "send":
                events += 1
                v = stack.pop()
                if sent < len(replies):
                    pending.append(replies[sent])
                    sent += 1
                else:
                    return _Stop("send", v, steps, events, max(cursor, seen), tuple(used_coins))
            elif op == "recv":
                events += 1
                if not pending:
                    raise VMError(f"{program.name}:{pc - 1}: receive with no pending reply")
                stack.append(pending.pop(0))
            elif op == "coin":
                events += 1
                if coins is None:
                    raise VMError(f"{program.name}:{pc - 1}: coin flip without a random tape")
                b = coins()
                used_coins.append(b)
                stack.append(b)
        except IndexError:
            raise VMError(f"{program.name}:{pc - 1}: stack underflow at {op}") from None
        if len(stack) > STACK_LIMIT:
            raise VMError(f"{program.name}:{pc - 1}: stack overflow")


def _bits(type_input) -> tuple:
    if isinstance(type_input, str):
        if any(ch not in "01" for ch in type_input):
            raise ValueError(f"type input {type_input!r} is not a bitstring")
        return tuple(int(ch) for ch in type_input)
    return tuple(int(b) for b in type_input)


def vm_execute(program: Program, type_input, fuel: int, tape=None) -> ExecutionResult:
    """Run ``program`` on a bitstring input for at most ``fuel`` steps."""
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    coins = tape.draw if tape is not None else None
    stop = _run(program, _bits(type_input), fuel, coins=coins)
    if stop.kind == "send":
        raise VMError(f"{program.name}: send outside a conversation")
    if stop.kind == "exhausted":
        return ExecutionResult("exhausted", None, stop.steps, stop.events, stop.bits_read)
    return ExecutionResult("halted", program.action_for(stop.value), stop.steps, stop.events, stop.bits_read)


def int_encoder(width: int) -> Callable[[int], str]:
    """Fixed-width big-endian binary encoding of natural-number types."""
    def encode(t: int) -> str:
        if not 0 <= t < 2 ** width:
            raise ValueError(f"{t} does not fit in {width} bits")
        return format(t, f"0{width}b")
    return encode


class ProgramMachine(Machine):
    """A program run on the type, judged against a hard deadline.

    Output is the halting action, or ``default_action`` if fuel runs out.
    Complexity is 0 when the run halted within ``deadline`` steps (inclusive)
    and ``penalty`` otherwise.  Objective: the state is ignored.
    """

    def __init__(self, program: Program, deadline: int, default_action, *, fuel: int | None = None,
                 penalty: int = 10, encode: Callable | None = None, name: str | None = None):
        fuel = deadline if fuel is None else fuel
        if deadline > fuel:
            raise ValueError(f"deadline {deadline} exceeds fuel {fuel}")
        self.program = program
        self.deadline = deadline
        self.fuel = fuel
        self.default_action = default_action
        self.penalty = penalty
        self.encode = encode or (lambda t: t)
        self.name = name or program.name
        self._run = lru_cache(maxsize=None)(self._execute)

    def _execute(self, t) -> ExecutionResult:
        return vm_execute(self.program, self.encode(t), self.fuel)

    def result(self, t) -> ExecutionResult:
        return self._run(t)

    def out(self, s, t):
        r = self._run(t)
        return r.action if r.halted else self.default_action

    def complexity(self, s, t) -> int:
        r = self._run(t)
        return 0 if r.halted and r.steps <= self.deadline else self.penalty


def machine_from_program(program: Program, deadline: int, default_action, **kw) -> ProgramMachine:
    return ProgramMachine(program, deadline, default_action, **kw)


class ProgramAgent(InteractiveMachine):
    """A program that converses via ``send``/``recv``.

    Each move replays the program from the start against the recorded
    replies and coins, so the move is a function of the view alone.
    Complexity of a view is the number of steps of that replay.  Running
    out of fuel, or an unanswered message, yields ``default_action``.
    """

    def __init__(self, program: Program, fuel: int, default_action, *, alphabet=None,
                 encode: Callable | None = None, name: str | None = None, reads_type: bool = True):
        self.program = program
        self.fuel = fuel
        self.default_action = default_action
        self.alphabet = frozenset(alphabet) if alphabet is not None else None
        self.encode = encode or (lambda t: t)
        self.reads_type = reads_type
        self.name = name or program.name

    def _replay(self, input, history, coins, fresh):
        prior = list(coins)

        def coin():
            if prior:
                return prior.pop(0)
            return fresh()

        bits = _bits(self.encode(input)) if self.reads_type else ()
        return _run(self.program, bits, self.fuel, replies=tuple(history), coins=coin)

    def move(self, ctx: Context):
        stop = self._replay(ctx.input, ctx.history, ctx.coins, ctx.coin)
        if self.reads_type:
            ctx.note_prefix(self.encode(ctx.input)[:stop.bits_read])
        if stop.kind == "send":
            return Send(stop.value)
        if stop.kind == "exhausted":
            return Act(self.default_action)
        return Act(self.program.action_for(stop.value))

    def on_silence(self, ctx: Context):
        return self.default_action

    def complexity(self, state, view: View) -> int:
        return self._steps(view.type_prefix, tuple(view.history), tuple(view.coins))

    @lru_cache(maxsize=4096)
    def _steps(self, type_prefix, history, coins) -> int:
        def no_fresh():
            raise VMError(f"{self.name}: view has too few coins to replay")
        bits = _bits(type_prefix) if self.reads_type else ()
        prior = list(coins)
        stop = _run(self.program, bits, self.fuel, replies=history,
                    coins=lambda: prior.pop(0) if prior else no_fresh())
        return stop.steps
