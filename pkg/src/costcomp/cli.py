"""``costcomp <command> [scenario] [flags]``.

Exit codes: 0 success, 1 validation error, 2 failed check.
``COSTCOMP_WORKERS`` sets the number of worker processes used by sweeps.
"""
from __future__ import annotations

import argparse
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from .conversation import (
    SILENT, ConversationError, conversation_expected_utility, enumerate_outcomes, sample_outcomes,
)
from .core import DecisionError, best_action, best_machine, expected_utility_action, expected_utility_machine
from .information import value_of_information, voci_postchoice, voci_precommit
from .numbers import ExactnessError, fmt_fraction
from .protocol import InsufficientRandomness, OffTreeHistory
from .report import Report
from .scenarios import BUILTINS, Scenario, ScenarioError, builtin
from .speedup import SpeedupFunction, value_of_p_speedup
from .trees import TreeError
from .vm import ProgramError

COMMANDS = ("list", "eval", "best", "voi", "voci", "voc", "speedup", "bias", "zk-check")
EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2

_INT = re.compile(r"^[+-]?\d+$")
_FRAC = re.compile(r"^[+-]?\d+/\d+$")


class UsageError(DecisionError):
    pass


def parse_param(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise UsageError(f"--param expects key=value, got {text!r}")
    raw = raw.strip()
    if _INT.match(raw):
        return key, int(raw)
    if _FRAC.match(raw):
        num, den = raw.split("/")
        if int(den) == 0:
            raise ExactnessError(f"{raw!r} has a zero denominator")
        return key, Fraction(int(num), int(den))
    try:
        float(raw)
    except ValueError:
        return key, raw
    raise ExactnessError(f"decimal literal {raw!r} rejected; write it as a fraction 'p/q'")


def workers() -> int:
    raw = os.environ.get("COSTCOMP_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"COSTCOMP_WORKERS must be an integer, got {raw!r}") from None


def parallel_map(fn, items):
    """``map`` over a process pool when ``COSTCOMP_WORKERS`` > 1; results keep input order."""
    items = list(items)
    n = workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def load_scenario(ref: str, params: dict | None = None) -> Scenario:
    """A builtin name or a path to a scenario file."""
    params = params or {}
    if ref in BUILTINS:
        return builtin(ref, **params)
    path = Path(ref)
    if path.suffix in (".yaml", ".yml") or path.exists():
        if params:
            raise UsageError("--param applies to builtin scenarios only")
        from .loader import load_file
        return load_file(path)
    raise ScenarioError(f"unknown builtin {ref!r}; builtins: {', '.join(BUILTINS)}")


# ---------------------------------------------------------------------------
# commands


def _need(sc: Scenario, attr: str, command: str):
    value = getattr(sc, attr)
    if value is None:
        raise UsageError(f"{command} is not defined for scenario {sc.name} (no {attr})")
    return value


def _space_line(n: int) -> str:
    return f"machine space: finite declared set of {n} machines; maxima are over this set"


def _interactive(sc: Scenario) -> bool:
    return bool(sc.conversers) and not len(sc.problem.machines) if sc.problem is not None else False


def cmd_eval(sc: Scenario, args, rep: Report):
    if sc.standard is not None:
        for a in sc.standard.actions:
            rep.value(f"EU({a})", expected_utility_action(sc.standard, a))
        return
    problem = _need(sc, "problem", "eval")
    if _interactive(sc):
        inf = sc.informant if sc.informant is not None else SILENT
        for m in sc.conversers:
            rep.value(f"EU({m.name})", conversation_expected_utility(problem, inf, m, sc.tape_length, sc.rounds))
        return
    names = sc.eval_subset or [m.name for m in problem.machines]
    for name in names:
        rep.value(f"EU({name})", expected_utility_machine(problem, name))


def cmd_best(sc: Scenario, args, rep: Report):
    if sc.standard is not None:
        a, v = best_action(sc.standard)
        rep.value("best expected utility", v)
        rep.witnesses.append(f"best action: {a}")
        return
    problem = _need(sc, "problem", "best")
    if _interactive(sc):
        inf = sc.informant if sc.informant is not None else SILENT
        vals = [conversation_expected_utility(problem, inf, m, sc.tape_length, sc.rounds) for m in sc.conversers]
        i = max(range(len(vals)), key=lambda k: (vals[k], -k))
        rep.inputs.append(_space_line(len(vals)))
        rep.value("best expected utility", vals[i])
        rep.witnesses.append(f"best machine: {sc.conversers[i].name}")
        return
    rep.inputs.append(_space_line(len(problem.machines)))
    m, v = best_machine(problem)
    rep.value("best expected utility", v)
    rep.witnesses.append(f"best machine: {m.name}")


def cmd_voi(sc: Scenario, args, rep: Report):
    std = _need(sc, "standard", "voi")
    part = _need(sc, "partition", "voi")
    rep.inputs.append("partition: " + " | ".join(f"{n}={list(c)}" for n, c in zip(part.names, part.cells)))
    rep.value("value of information", value_of_information(std, part))


def cmd_voci(sc: Scenario, args, rep: Report):
    problem = _need(sc, "problem", "voci")
    part = _need(sc, "partition", "voci")
    rep.inputs.append(f"mode: {args.mode}")
    rep.inputs.append("partition cells: " + ", ".join(part.names))
    if args.mode == "post":
        rep.inputs.append(_space_line(len(problem.machines)))
        w = voci_postchoice(problem, None, part, witness=True)
        rep.value("value of computational information", w.value)
        rep.value("informed", w.informed)
        rep.value("uninformed", w.uninformed)
        rep.witnesses.append(f"uninformed best: {w.uninformed_machine}")
        for c in w.cells:
            rep.witnesses.append(f"cell {c.cell}: mass {fmt_fraction(c.mass)}, winner {c.machine}, "
                                 f"conditional value {fmt_fraction(c.value)}")
    else:
        machines = _need(sc, "cell_machines", "voci --mode pre")
        rep.inputs.append(_space_line(len(machines)))
        value, informed, blind = voci_precommit(problem, machines, part, witness=True)
        rep.value("value of computational information", value)
        rep.witnesses.append(f"best with the cell: {informed}")
        rep.witnesses.append(f"best without the cell: {blind}")


def _trace(sc: Scenario, machine, informant, state, args) -> list[str]:
    t = sc.problem.types[0]
    if args.samples:
        outs = sample_outcomes(informant, machine, state, t, sc.tape_length, args.samples, args.seed, sc.rounds)
    else:
        outs = enumerate_outcomes(informant, machine, state, t, sc.tape_length, sc.rounds)
    weight, oc = outs[0]
    lines = [f"transcript for state {state} (weight {fmt_fraction(weight)}):"]
    return lines + ["  " + ln for ln in oc.transcript_lines()]


def _state_arg(sc: Scenario, raw):
    for s in sc.problem.states[:4096] if hasattr(sc.problem.states, "__getitem__") else sc.problem.states:
        if str(s) == raw:
            return s
    raise UsageError(f"--trace {raw!r} is not a state of {sc.name}")


def cmd_voc(sc: Scenario, args, rep: Report):
    from .conversation import value_of_conversation

    problem = _need(sc, "problem", "voc")
    informant = _need(sc, "informant", "voc")
    machines = sc.conversers or list(problem.machines)
    rep.inputs.append(f"informant: {informant.name}")
    rep.inputs.append(f"tape length: {sc.tape_length}, round bound: {sc.rounds}")
    rep.inputs.append(_space_line(len(machines)))
    w = value_of_conversation(problem, informant, machines, sc.tape_length, sc.rounds, witness=True)
    rep.value("value of conversation", w.value)
    rep.value("best with informant", w.with_informant)
    rep.value("best with silence", w.silent)
    rep.witnesses.append(f"best with informant: {w.best_with}")
    rep.witnesses.append(f"best with silence: {w.best_silent}")
    if args.trace is not None:
        best = next(m for m in machines if m.name == w.best_with)
        rep.witnesses.extend(_trace(sc, best, informant, _state_arg(sc, args.trace), args))


def cmd_speedup(sc: Scenario, args, rep: Report):
    problem = _need(sc, "problem", "speedup")
    if args.p is not None:
        p = SpeedupFunction.parse(args.p)
    elif sc.speedup is not None:
        p = sc.speedup
    else:
        p = SpeedupFunction.identity()
    machines = list(problem.machines) or list(_need(sc, "conversers", "speedup"))
    rep.inputs.append(f"speedup: {p.label}")
    rep.inputs.append(_space_line(len(machines)))
    value, fast, slow = value_of_p_speedup(problem, machines, p, informant=sc.informant,
                                           tape_length=sc.tape_length, rounds=sc.rounds, witness=True)
    rep.value("value of speedup", value)
    rep.witnesses.append(f"best with speedup: {fast}")
    rep.witnesses.append(f"best without speedup: {slow}")


def _fi_point(job):
    from .bias import SignalModel, first_impressions_analysis
    rho, n, c = job
    return c, first_impressions_analysis(SignalModel(rho, n, c)).m_star


def cmd_bias(sc: Scenario, args, rep: Report):
    from .bias import (
        first_impressions_analysis, polarization_run, status_quo_analysis, status_quo_sweep,
    )

    spec = _need(sc, "bias", "bias")
    kind = spec["kind"]
    rep.inputs.append(f"bias: {kind}")
    if kind == "first-impressions":
        model = spec["model"]
        fi = first_impressions_analysis(model)
        for m, v in fi.eu_curve.items():
            rep.value(f"eu({m})", v)
        rep.value("m_star", fi.m_star)
        grid = spec["grid"]
        cs = [Fraction(i, 2 * grid) for i in range(grid)]
        stars = parallel_map(_fi_point, [(model.rho, model.n, c) for c in cs])
        for c, m in stars:
            rep.witnesses.append(f"c={fmt_fraction(c)}: m_star={m}")
        ms = [m for _, m in stars]
        rep.check("m_star nonincreasing in c", all(a >= b for a, b in zip(ms, ms[1:])))
    elif kind == "polarization":
        a, b = spec["agents"]
        res = polarization_run(a, b, spec["evidence"], spec["ratios"])
        rep.inputs.append("evidence: " + "".join(spec["evidence"]))
        for agent, run in ((a, res.a), (b, res.b)):
            rep.value(f"{agent.name} prior", agent.prior)
            rep.value(f"{agent.name} final posterior", run.trail[-1])
            rep.witnesses.append(f"{agent.name}: concludes {run.conclusion} at round {run.stop_round}; "
                                 "posteriors " + " ".join(fmt_fraction(x) for x in run.trail))
        rep.check("opposite conclusions", res.opposite)
    elif kind == "status-quo":
        inst = spec["instance"]
        r = status_quo_analysis(inst)
        for j, v in r.by_count.items():
            rep.value(f"analyse {j}", v)
        rep.value("analyse count", r.analyze_count)
        rep.value("keeps status quo", r.keeps_status_quo)
        sweep = status_quo_sweep(inst.g0, spec["values"], inst.a, spec["setup"])
        keeps = []
        for k, res in sweep:
            keeps.append(res.keeps_status_quo)
            rep.witnesses.append(f"k={k}: analyse {res.analyze_count}, keeps status quo "
                                 f"{fmt_fraction(res.keeps_status_quo)}")
        rep.check("keeps status quo nondecreasing in k", all(x <= y for x, y in zip(keeps, keeps[1:])))
    else:
        raise UsageError(f"unknown bias kind {kind!r}")


def _zk_seed(seed: int):
    from .zk import PreconditionError, random_toy, run_toy
    try:
        r = run_toy(random_toy(seed))
    except PreconditionError as exc:
        return seed, None, None, False, str(exc)
    return seed, r.voc, r.speedup_value, r.inequality_holds, ""


def cmd_zk(sc: Scenario, args, rep: Report):
    from .zk import PreconditionError, run_toy

    inst = _need(sc, "zk", "zk-check")
    sweep = int(sc.params.get("sweep", 0))
    if sweep:
        rows = parallel_map(_zk_seed, range(sweep))
        held = 0
        for seed, voc, sp, ok, err in rows:
            if err:
                rep.witnesses.append(f"seed {seed}: precondition failed: {err}")
            else:
                rep.witnesses.append(f"seed {seed}: voc {fmt_fraction(voc)} <= speedup {fmt_fraction(sp)}: {ok}")
            held += ok
        rep.value("families checked", sweep)
        rep.value("inequality holds", held)
        rep.check("all generated families satisfy the inequality", held == sweep)
        return
    try:
        r = run_toy(inst)
    except PreconditionError as exc:
        rep.witnesses.append(str(exc).splitlines()[0])
        for srep in exc.report if isinstance(exc.report, list) else [exc.report]:
            rep.witnesses.extend(srep.failures())
        rep.check("simulator conditions", False)
        return
    for srep in r.simulator_reports:
        rep.witnesses.extend(srep.lines())
    rep.value("value of conversation", r.voc)
    rep.value("value of speedup", r.speedup_value)
    rep.check("simulator conditions", all(s.passed for s in r.simulator_reports))
    rep.check("conversation value at most speedup value", r.inequality_holds)


HANDLERS = {
    "eval": cmd_eval, "best": cmd_best, "voi": cmd_voi, "voci": cmd_voci, "voc": cmd_voc,
    "speedup": cmd_speedup, "bias": cmd_bias, "zk-check": cmd_zk,
}


def run(command: str, sc: Scenario, args) -> Report:
    rep = Report(command, sc.name, dict(sc.params))
    HANDLERS[command](sc, args, rep)
    return rep


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="costcomp", description="Exact decision analysis with costly computation.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("scenario", nargs="?", help="builtin name or scenario file")
    ap.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                    help="builtin parameter (integers or p/q fractions)")
    ap.add_argument("--mode", choices=("post", "pre"), default="post", help="voci variant")
    ap.add_argument("--p", help="speedup function: id, k*x, linear:a,b, poly:c0,c1,..., table:v0,v1,...")
    ap.add_argument("--csv", help="write label,fraction,decimal rows to this path")
    ap.add_argument("--trace", help="voc: print the best machine's transcript at this state")
    ap.add_argument("--samples", type=int, default=0, help="sample this many tapes instead of enumerating")
    ap.add_argument("--seed", type=int, default=0, help="seed for --samples")
    ap.add_argument("--timing", action="store_true", help="print elapsed seconds to stderr")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, factory in BUILTINS.items():
            doc = (factory.__doc__ or "").strip().splitlines()
            print(f"{name}: {doc[0] if doc else ''}".rstrip(": "))
        return EXIT_OK
    t0 = time.perf_counter()
    try:
        if args.scenario is None:
            raise UsageError(f"{args.command} needs a scenario (builtin name or file)")
        params = dict(parse_param(p) for p in args.param)
        sc = load_scenario(args.scenario, params)
        command = args.command
        rep = run(command, sc, args)
    except (DecisionError, ExactnessError, ProgramError, TreeError, ConversationError,
            InsufficientRandomness, OffTreeHistory) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(rep.render())
    if args.csv:
        rep.write_csv(args.csv)
    if args.timing:
        print(f"elapsed: {time.perf_counter() - t0:.3f}s", file=sys.stderr)
    return EXIT_FAILED if rep.failed else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
