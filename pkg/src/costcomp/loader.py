"""Scenario files.

A scenario file is YAML restricted to mappings, lists, integers and
strings; every number that is not an integer is written as a quoted
fraction ``"p/q"``.  Floats are refused with their line number.  A minimal
file::

    name: stock-bond
    states: [s1, s2]
    types: [t0]
    actions: [stock, bond]
    prior:
      s1: "2/3"          # type omitted when there is a single type
      s2: "1/3"
    utility:             # state -> action -> value (any type)
      s1: {stock: 3, bond: 1}
      s2: {stock: -4, bond: 1}
    partition:
      up: [s1]
      down: [s2]

Optional sections: ``complexity_cost`` (u' = u - cost * complexity),
``machines``, ``informant``, ``speedup``, ``tape_length``, ``rounds``,
``analysis`` (default command).  See the README for machine kinds.
"""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import yaml

from .conversation import FunctionInformant, threshold_informant
from .core import (
    ComputationalDecisionProblem, DecisionError, JointPrior, StandardDecisionProblem,
)
from .information import CellBlind, Partition
from .machines import BeliefTable, ConstantMachine
from .numbers import ExactnessError, parse_fraction
from .scenarios import Scenario, ScenarioError
from .speedup import SpeedupError, SpeedupFunction
from .trees import StrategyTree, TreeError
from .vm import ProgramError, ProgramMachine, assemble, int_encoder


class _Map(dict):
    """A mapping that remembers the line of each key."""

    line = 0
    lines: dict


class _Seq(list):
    line = 0


class _Loader(yaml.SafeLoader):
    pass


def _construct_map(loader, node):
    loader.flatten_mapping(node)
    out = _Map()
    out.line = node.start_mark.line + 1
    out.lines = {}
    for knode, vnode in node.value:
        key = loader.construct_object(knode, deep=True)
        if key in out:
            raise ScenarioError(f"line {knode.start_mark.line + 1}: duplicate key {key!r}")
        out[key] = loader.construct_object(vnode, deep=True)
        out.lines[key] = knode.start_mark.line + 1
    return out


def _construct_seq(loader, node):
    out = _Seq(loader.construct_object(v, deep=True) for v in node.value)
    out.line = node.start_mark.line + 1
    return out


def _reject_float(loader, node):
    raise ScenarioError(f"line {node.start_mark.line + 1}: decimal literal {node.value!r} rejected; "
                        f"write it as a quoted fraction \"p/q\"")


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_map)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_seq)
_Loader.add_constructor("tag:yaml.org,2002:float", _reject_float)


def _line(obj, key=None) -> int:
    if key is not None and isinstance(obj, _Map):
        return obj.lines.get(key, obj.line)
    return getattr(obj, "line", 0)


def _err(where, msg, key=None):
    return ScenarioError(f"line {_line(where, key)}: {msg}")


def _frac(where, key, value) -> Fraction:
    try:
        return parse_fraction(value)
    except ExactnessError as exc:
        raise _err(where, str(exc), key) from None


def _need(doc, key, kind=None):
    if key not in doc:
        raise _err(doc, f"missing section {key!r}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise _err(doc, f"section {key!r} has the wrong shape", key)
    return value


def _ident_list(doc, key) -> tuple:
    seq = _need(doc, key, list)
    if not seq:
        raise _err(doc, f"{key} is empty", key)
    if len(set(seq)) != len(seq):
        raise _err(doc, f"duplicate entries in {key}", key)
    return tuple(seq)


def load_text(text: str, base: Path | None = None) -> Scenario:
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ScenarioError(f"{where}cannot parse scenario: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("line 1: a scenario file must be a mapping")
    return _build(doc, base or Path("."))


def load_file(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    return load_text(text, path.parent)


def _build(doc, base: Path) -> Scenario:
    states = _ident_list(doc, "states")
    types = _ident_list(doc, "types")
    actions = _ident_list(doc, "actions")
    prior = _prior(doc, states, types)
    utility = _utility(doc, states, types, actions)
    try:
        std = StandardDecisionProblem(states, types, actions, prior, lambda s, t, a: utility[(s, t, a)])
    except DecisionError as exc:
        raise _err(doc, str(exc), "prior") from None
    cost = _frac(doc, "complexity_cost", doc.get("complexity_cost", 0))

    def u_prime(s, t, a, c):
        return utility[(s, t, a)] - cost * c
    u_prime.monotone = cost >= 0

    machines, conversers = _machines(doc, base, states, types, actions)
    problem = ComputationalDecisionProblem(states, types, actions, prior, u_prime, machines)
    try:
        problem.validate()
    except DecisionError as exc:
        raise _err(doc, str(exc), "machines") from None
    partition = _partition(doc, states, prior)
    informant = _informant(doc, states)
    speedup = None
    if "speedup" in doc:
        try:
            speedup = SpeedupFunction.parse(str(doc["speedup"]))
        except SpeedupError as exc:
            raise _err(doc, str(exc), "speedup") from None
    analysis = doc.get("analysis", "eval")
    if analysis not in ("eval", "best", "voi", "voci", "voc", "speedup"):
        raise _err(doc, f"unknown analysis {analysis!r}", "analysis")
    tape = doc.get("tape_length", 0)
    rounds = doc.get("rounds", 64)
    for key, val in (("tape_length", tape), ("rounds", rounds)):
        if not isinstance(val, int) or val < 0:
            raise _err(doc, f"{key} must be a nonnegative integer", key)
    return Scenario(str(doc.get("name", "scenario")), {}, std, problem, partition,
                    cell_machines=[CellBlind(m) for m in machines], informant=informant,
                    conversers=conversers or None, speedup=speedup, tape_length=tape, rounds=rounds,
                    default_command=analysis)


def _prior(doc, states, types) -> JointPrior:
    spec = _need(doc, "prior")
    if spec == "uniform":
        return JointPrior.uniform(states, types)
    if not isinstance(spec, dict):
        raise _err(doc, "prior must be 'uniform' or a mapping", "prior")
    table = {}
    for s, entry in spec.items():
        if s not in states:
            raise _err(spec, f"prior mentions undeclared state {s!r}", s)
        if isinstance(entry, dict):
            for t, m in entry.items():
                if t not in types:
                    raise _err(entry, f"prior mentions undeclared type {t!r}", t)
                table[(s, t)] = _frac(entry, t, m)
        else:
            if len(types) != 1:
                raise _err(spec, f"state {s!r} needs per-type masses", s)
            table[(s, types[0])] = _frac(spec, s, entry)
    for (s, t), m in table.items():
        if m < 0:
            raise _err(spec, f"negative prior mass at ({s}, {t})", s)
    total = sum(table.values(), Fraction(0))
    if total != 1:
        raise _err(doc, f"prior mass {total} ≠ 1", "prior")
    return JointPrior.from_table(table)


def _utility(doc, states, types, actions) -> dict:
    spec = _need(doc, "utility", dict)
    out = {}
    for s in states:
        if s not in spec:
            raise _err(spec, f"utility missing state {s!r}")
        row = spec[s]
        if not isinstance(row, dict):
            raise _err(spec, f"utility for {s!r} must be a mapping", s)
        per_type = all(k in types for k in row) and not any(k in actions for k in row)
        for t in types:
            cells = row[t] if per_type else row
            if not isinstance(cells, dict):
                raise _err(row, f"utility for ({s}, {t}) must be a mapping")
            for a in actions:
                if a not in cells:
                    raise _err(cells, f"utility undefined at ({s}, {t}, {a})")
                out[(s, t, a)] = _frac(cells, a, cells[a])
    return out


def _pair_table(where, spec, states, types, what):
    """``state -> value`` (single type) or ``state -> type -> value``."""
    out = {}
    for s in states:
        if s not in spec:
            raise _err(where, f"partial assignment: {what} missing state {s!r}")
        entry = spec[s]
        for t in types:
            if isinstance(entry, dict):
                if t not in entry:
                    raise _err(entry, f"partial assignment: {what} missing ({s}, {t})")
                out[(s, t)] = entry[t]
            else:
                out[(s, t)] = entry
    return out


def _machines(doc, base, states, types, actions):
    specs = doc.get("machines")
    if specs is None:
        return [ConstantMachine(str(a), a) for a in actions], []
    if not isinstance(specs, list) or not specs:
        raise _err(doc, "machines must be a nonempty list", "machines")
    plain, conversers = [], []
    for spec in specs:
        if not isinstance(spec, dict) or "name" not in spec or "kind" not in spec:
            raise _err(specs, "each machine needs a name and a kind")
        name, kind = str(spec["name"]), spec["kind"]
        try:
            if kind == "constant":
                m = ConstantMachine(name, spec["action"], int(spec.get("complexity", 0)))
            elif kind == "table":
                out = _pair_table(spec, _need(spec, "out", dict), states, types, "out")
                comp_spec = spec.get("complexity", 0)
                comp = (_pair_table(spec, comp_spec, states, types, "complexity")
                        if isinstance(comp_spec, dict) else {k: comp_spec for k in out})
                m = BeliefTable(name, out, comp)
            elif kind == "program":
                m = _program(spec, base, name)
            elif kind == "tree":
                tree = StrategyTree.from_nested(name, _need(spec, "tree", dict),
                                                spec.get("alphabet", ()), spec.get("fallback"))
                conversers.append(tree)
                continue
            else:
                raise _err(spec, f"unknown machine kind {kind!r}", "kind")
        except (KeyError, TypeError, ValueError, ProgramError, TreeError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise _err(spec, f"machine {name}: {exc}") from None
        plain.append(m)
        conversers.append(m)
    if not plain:
        plain = [ConstantMachine(str(a), a) for a in actions]
    has_tree = any(isinstance(c, StrategyTree) for c in conversers)
    return plain, conversers if has_tree else []


def _program(spec, base, name):
    if "source" in spec:
        text = spec["source"]
    elif "file" in spec:
        path = base / spec["file"]
        try:
            text = path.read_text()
        except OSError as exc:
            raise _err(spec, f"cannot read program {path}: {exc.strerror}", "file") from None
    else:
        raise _err(spec, f"program machine {name} needs 'source' or 'file'")
    width = spec.get("width")
    return ProgramMachine(assemble(text, name), int(spec["deadline"]), spec["default"],
                          fuel=spec.get("fuel"), penalty=int(spec.get("penalty", 10)),
                          encode=int_encoder(int(width)) if width else None, name=name)


def _partition(doc, states, prior):
    spec = doc.get("partition")
    if spec is None:
        return None
    if not isinstance(spec, dict):
        raise _err(doc, "partition must map cell names to state lists", "partition")
    cells, names = [], []
    for name, members in spec.items():
        if not isinstance(members, list):
            raise _err(spec, f"cell {name!r} must be a list", name)
        for s in members:
            if s not in states:
                raise _err(spec, f"cell {name!r} mentions undeclared state {s!r}", name)
        cells.append(tuple(members))
        names.append(str(name))
    try:
        return Partition(cells, names).validate(states, prior)
    except DecisionError as exc:
        raise _err(doc, str(exc), "partition") from None


def _informant(doc, states):
    spec = doc.get("informant")
    if spec is None:
        return None
    if spec == "silent":
        from .conversation import SILENT
        return SILENT
    if spec == "threshold":
        return threshold_informant()
    if isinstance(spec, dict) and "replies" in spec:
        replies = spec["replies"]
        missing = [s for s in states if s not in replies]
        if missing:
            raise _err(spec, f"informant has no reply for states {missing}", "replies")
        alphabet = spec.get("alphabet") or sorted({str(v) for v in replies.values()})
        table = dict(replies)
        return FunctionInformant(str(spec.get("name", "informant")), lambda s, h: table[s], alphabet)
    raise _err(doc, "informant must be 'silent', 'threshold' or {replies: ...}", "informant")
