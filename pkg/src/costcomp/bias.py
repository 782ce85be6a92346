"""Three behavioural biases as optimal behaviour under positive processing costs.

* first impressions: read ``m`` of ``n`` noisy signals about a bit, then
  answer by majority (fair coin on ties);
* polarization: two agents stop reading evidence once their posterior
  crosses a threshold, so different priors can stop on opposite sides;
* status quo: analysing alternatives costs something per alternative plus
  a set-up cost, so the status quo is often kept unanalysed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import comb
from typing import Callable, Mapping, Sequence

from .core import (
    ComputationalDecisionProblem, DecisionError, JointPrior, SeparableUtility, best_machine,
)
from .machines import FunctionMachine


class BiasError(DecisionError):
    pass


# ---------------------------------------------------------------------------
# first impressions


@dataclass(frozen=True)
class SignalModel:
    rho: Fraction
    n: int
    c: Fraction = Fraction(0)
    payoff: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "rho", Fraction(self.rho))
        object.__setattr__(self, "c", Fraction(self.c))
        object.__setattr__(self, "payoff", Fraction(self.payoff))
        if not Fraction(1, 2) < self.rho <= 1:
            raise BiasError(f"signal accuracy {self.rho} must lie in (1/2, 1]")
        if self.n < 1:
            raise BiasError("need at least one signal")
        if self.c < 0:
            raise BiasError("reading cost must be nonnegative")


def p_correct(rho: Fraction, m: int) -> Fraction:
    """Probability that the majority of ``m`` signals (coin on ties) names the bit."""
    rho = Fraction(rho)
    total = Fraction(0)
    for k in range(m + 1):
        w = comb(m, k) * rho ** k * (1 - rho) ** (m - k)
        if 2 * k > m:
            total += w
        elif 2 * k == m:
            total += w / 2
    return total


@dataclass(frozen=True)
class FirstImpressions:
    eu_curve: dict
    m_star: int
    eu_star: Fraction


def first_impressions_analysis(model: SignalModel) -> FirstImpressions:
    """``eu(m) = payoff * P_correct(m) - m * c`` for ``m = 0..n``; smallest maximizer wins."""
    curve = {m: model.payoff * p_correct(model.rho, m) - m * model.c for m in range(model.n + 1)}
    m_star = max(curve, key=lambda m: (curve[m], -m))
    return FirstImpressions(curve, m_star, curve[m_star])


def first_impressions_problem(model: SignalModel) -> ComputationalDecisionProblem:
    """The same question as a computational problem over read-count machines.

    The state is ``(b, signals, coin)``, where ``coin`` settles ties.  The
    machine reading ``m`` signals has complexity ``m``.
    """
    rho = model.rho
    states, mass = [], {}
    for b in (0, 1):
        for sig in product((0, 1), repeat=model.n):
            agree = sum(1 for x in sig if x == b)
            w = Fraction(1, 2) * rho ** agree * (1 - rho) ** (model.n - agree)
            for coin in (0, 1):
                s = (b, sig, coin)
                states.append(s)
                mass[s] = w / 2
    prior = JointPrior.product(mass, types=("t0",))

    def majority(m):
        def out(s, t):
            _, sig, coin = s
            ones = sum(sig[:m])
            if 2 * ones > m:
                return 1
            if 2 * ones < m:
                return 0
            return coin
        return out

    machines = [FunctionMachine(f"read-{m}", majority(m), m) for m in range(model.n + 1)]
    util = SeparableUtility(lambda s, t, a: model.payoff if a == s[0] else 0,
                            lambda c: c * model.c, monotone=True)
    return ComputationalDecisionProblem(states, ("t0",), (0, 1), prior, util, machines)


# ---------------------------------------------------------------------------
# polarization


@dataclass(frozen=True)
class PolarizationAgent:
    name: str
    prior: Fraction
    lower: Fraction
    upper: Fraction
    cost: Fraction = Fraction(0)

    def __post_init__(self):
        for f in ("prior", "lower", "upper", "cost"):
            object.__setattr__(self, f, Fraction(getattr(self, f)))
        if not 0 < self.lower < self.prior < self.upper < 1:
            raise BiasError(f"{self.name}: need 0 < lower < prior < upper < 1")


@dataclass
class AgentRun:
    conclusion: object  # 1, 0 or ("undecided", posterior)
    stop_round: int | None
    trail: list = field(default_factory=list)
    reading_cost: Fraction = Fraction(0)


def odds_update(posterior: Fraction, likelihood_ratio: Fraction) -> Fraction:
    """Posterior on ``X=1`` after evidence with ``P(e|X=1) / P(e|X=0) = likelihood_ratio``."""
    odds = posterior / (1 - posterior) * likelihood_ratio
    return odds / (1 + odds)


def run_agent(agent: PolarizationAgent, evidence: Sequence, ratios: Mapping) -> AgentRun:
    post = agent.prior
    trail = [post]
    for i, sym in enumerate(evidence, start=1):
        try:
            post = odds_update(post, Fraction(ratios[sym]))
        except KeyError:
            raise BiasError(f"no likelihood ratio for evidence symbol {sym!r}") from None
        trail.append(post)
        if post > agent.upper:
            return AgentRun(1, i, trail, i * agent.cost)
        if post < agent.lower:
            return AgentRun(0, i, trail, i * agent.cost)
    return AgentRun(("undecided", post), None, trail, len(evidence) * agent.cost)


@dataclass
class PolarizationResult:
    a: AgentRun
    b: AgentRun

    @property
    def opposite(self) -> bool:
        return {self.a.conclusion, self.b.conclusion} == {0, 1}


def polarization_run(agent_a: PolarizationAgent, agent_b: PolarizationAgent, evidence: Sequence,
                     ratios: Mapping) -> PolarizationResult:
    """Each agent updates on the shared stream and stops at its first threshold crossing."""
    return PolarizationResult(run_agent(agent_a, evidence, ratios), run_agent(agent_b, evidence, ratios))


POLARIZATION_RATIOS = {"l": Fraction(3, 5), "h": Fraction(3)}
POLARIZATION_EVIDENCE = ("l",) * 3 + ("h",) * 6


def polarization_builtin():
    a = PolarizationAgent("A", Fraction(3, 10), Fraction(1, 10), Fraction(9, 10))
    b = PolarizationAgent("B", Fraction(7, 10), Fraction(1, 10), Fraction(9, 10))
    return a, b, POLARIZATION_EVIDENCE, POLARIZATION_RATIOS


# ---------------------------------------------------------------------------
# status quo


@dataclass(frozen=True)
class StatusQuoInstance:
    """``k`` exchangeable alternatives with i.i.d. values from ``values``.

    ``values`` maps value to probability.  Analysing ``j > 0`` alternatives
    costs ``j * a + setup(k)``.  Unanalysed alternatives cannot be chosen.
    """

    g0: Fraction
    k: int
    values: Mapping
    a: Fraction
    setup: Callable[[int], Fraction] = lambda k: Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "g0", Fraction(self.g0))
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "values", {Fraction(v): Fraction(p) for v, p in self.values.items()})
        if sum(self.values.values()) != 1:
            raise BiasError("alternative value distribution must sum to 1")
        if self.k < 1:
            raise BiasError("need at least one alternative")


@dataclass(frozen=True)
class StatusQuoResult:
    analyze_count: int
    expected_value: Fraction
    keeps_status_quo: Fraction
    by_count: dict


def _analyze_prefix(inst: StatusQuoInstance, j: int) -> tuple[Fraction, Fraction]:
    """Expected net value of analysing ``j`` alternatives and the chance of keeping the status quo."""
    gross = Fraction(0)
    keep = Fraction(0)
    for draw in product(inst.values.items(), repeat=j):
        p = Fraction(1)
        best = inst.g0
        for v, q in draw:
            p *= q
            best = max(best, v)
        gross += p * best
        if best == inst.g0:
            keep += p
    cost = j * inst.a + (inst.setup(inst.k) if j else 0)
    return gross - cost, keep


def status_quo_analysis(inst: StatusQuoInstance) -> StatusQuoResult:
    """Best number of alternatives to analyse; ties go to fewer (keeping the status quo wins ties)."""
    table = {j: _analyze_prefix(inst, j) for j in range(inst.k + 1)}
    j = max(table, key=lambda i: (table[i][0], -i))
    return StatusQuoResult(j, table[j][0], table[j][1], {i: v for i, (v, _) in table.items()})


def status_quo_bruteforce(inst: StatusQuoInstance) -> Fraction:
    """Best expected value over every analysed subset and every choice rule.

    A choice rule maps each profile of analysed values to one of the
    analysed alternatives or the status quo.  The objective is a sum over
    profiles, so the best rule is assembled profile by profile, trying
    every option in each.
    """
    vals = list(inst.values.items())
    best = None
    for j in range(inst.k + 1):
        for subset in combinations(range(inst.k), j):
            cost = j * inst.a + (inst.setup(inst.k) if j else 0)
            total = Fraction(0)
            for prof in product(vals, repeat=len(subset)):
                p = Fraction(1)
                for _, q in prof:
                    p *= q
                options = [inst.g0] + [v for v, _ in prof]
                total += p * max(options)
            v = total - cost
            if best is None or v > best:
                best = v
    return best


def status_quo_sweep(g0, values, a, setup, ks=range(2, 7)) -> list[tuple[int, StatusQuoResult]]:
    return [(k, status_quo_analysis(StatusQuoInstance(g0, k, values, a, setup))) for k in ks]


def status_quo_builtin_sweep():
    return status_quo_sweep(Fraction(6), {0: Fraction(1, 2), 10: Fraction(1, 2)}, Fraction(1),
                            lambda k: Fraction(k - 1, 4))


def first_impressions_best_machine(model: SignalModel) -> tuple[int, Fraction]:
    """Oracle: optimize over read-count machines in the computational problem."""
    problem = first_impressions_problem(model)
    m, v = best_machine(problem)
    return int(m.name.split("-")[1]), v
