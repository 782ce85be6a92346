from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from costcomp.bias import (
    BiasError, PolarizationAgent, SignalModel, StatusQuoInstance, first_impressions_analysis,
    first_impressions_best_machine, odds_update, p_correct, polarization_builtin, polarization_run,
    status_quo_analysis, status_quo_bruteforce, status_quo_builtin_sweep,
)


def binomial_majority(rho, m):
    """Independent oracle: sum over the number of agreeing signals."""
    rho = Fraction(rho)
    win = sum((comb(m, k) * rho ** k * (1 - rho) ** (m - k) for k in range(m + 1) if 2 * k > m), Fraction(0))
    tie = sum((comb(m, k) * rho ** k * (1 - rho) ** (m - k) for k in range(m + 1) if 2 * k == m), Fraction(0))
    return win + tie / 2


def test_eu_five_signals():
    fi = first_impressions_analysis(SignalModel(Fraction(3, 4), 5))
    expect = sum(comb(5, k) * Fraction(3, 4) ** k * Fraction(1, 4) ** (5 - k) for k in range(3, 6))
    assert fi.eu_curve[5] == expect == Fraction(459, 512)
    assert fi.eu_curve[3] == Fraction(27, 32) < fi.eu_curve[5]
    assert fi.m_star == 5 and fi.eu_star == Fraction(459, 512)


@pytest.mark.parametrize("rho", [Fraction(3, 5), Fraction(3, 4), Fraction(1)])
@pytest.mark.parametrize("c", [Fraction(1), Fraction(2)])
def test_expensive_reading_reads_nothing(rho, c):
    fi = first_impressions_analysis(SignalModel(rho, 5, c))
    assert fi.m_star == 0 and fi.eu_star == Fraction(1, 2)


def test_one_perfect_signal():
    fi = first_impressions_analysis(SignalModel(1, 5, Fraction(3, 10)))
    assert (fi.m_star, fi.eu_star) == (1, Fraction(7, 10))


@given(st.fractions(Fraction(51, 100), 1), st.integers(0, 8))
def test_p_correct_matches_binomial(rho, m):
    assert p_correct(rho, m) == binomial_majority(rho, m)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([Fraction(3, 5), Fraction(2, 3), Fraction(3, 4), Fraction(9, 10), Fraction(1)]),
       st.fractions(0, Fraction(1, 2)), st.integers(1, 4))
def test_analysis_agrees_with_machine_problem(rho, c, n):
    model = SignalModel(rho, n, c)
    fi = first_impressions_analysis(model)
    assert first_impressions_best_machine(model) == (fi.m_star, fi.eu_star)


@pytest.mark.parametrize("rho", [Fraction(3, 5), Fraction(3, 4), Fraction(9, 10)])
def test_m_star_nonincreasing_in_cost(rho):
    stars = [first_impressions_analysis(SignalModel(rho, 5, Fraction(i, 40))).m_star for i in range(20)]
    assert all(a >= b for a, b in zip(stars, stars[1:]))


def test_signal_model_validation():
    with pytest.raises(BiasError):
        SignalModel(Fraction(1, 2), 3)
    with pytest.raises(BiasError):
        SignalModel(Fraction(3, 4), 0)
    with pytest.raises(BiasError):
        SignalModel(Fraction(3, 4), 3, -1)


# -- polarization -----------------------------------------------------------------

RATIOS = {"l": Fraction(3, 5), "h": Fraction(3)}


def test_identical_agents_agree():
    a = PolarizationAgent("A", Fraction(1, 2), Fraction(1, 10), Fraction(9, 10))
    b = PolarizationAgent("B", Fraction(1, 2), Fraction(1, 10), Fraction(9, 10))
    res = polarization_run(a, b, "hhhh", RATIOS)
    assert res.a.conclusion == res.b.conclusion and res.a.stop_round == res.b.stop_round


def test_builtin_polarizes():
    a, b, ev, ratios = polarization_builtin()
    res = polarization_run(a, b, ev, ratios)
    assert res.a.conclusion == 0 and res.a.stop_round == 3
    assert res.b.conclusion == 1
    assert res.opposite
    # hand check of A's trail in odds form: 3/7 * (3/5)^3 = 81/875
    assert res.a.trail[3] == Fraction(81, 81 + 875)
    assert res.a.trail[3] < Fraction(1, 10)


def test_weak_evidence_leaves_both_undecided():
    a, b, _, _ = polarization_builtin()
    res = polarization_run(a, b, "lh", {"l": Fraction(9, 10), "h": Fraction(11, 10)})
    assert res.a.conclusion[0] == "undecided" and res.b.conclusion[0] == "undecided"
    assert len(res.a.trail) == 3 and res.a.stop_round is None


def test_odds_update_inverse():
    p = Fraction(2, 7)
    assert odds_update(odds_update(p, Fraction(4)), Fraction(1, 4)) == p


def test_unknown_evidence_symbol():
    a, b, _, _ = polarization_builtin()
    with pytest.raises(BiasError, match="likelihood ratio"):
        polarization_run(a, b, "z", RATIOS)


# -- status quo --------------------------------------------------------------------

THREE = {0: Fraction(1, 3), 5: Fraction(1, 3), 10: Fraction(1, 3)}


def test_high_status_quo_never_analysed():
    r = status_quo_analysis(StatusQuoInstance(10, 3, THREE, Fraction(1, 10)))
    assert r.analyze_count == 0 and r.keeps_status_quo == 1


def test_new_faculty_analyse_more():
    mean = sum(v * p for v, p in THREE.items())
    new = status_quo_analysis(StatusQuoInstance(mean - 3, 3, THREE, 1))
    old = status_quo_analysis(StatusQuoInstance(8, 3, THREE, 1))
    assert new.analyze_count > old.analyze_count


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10), st.integers(1, 3), st.fractions(0, 3), st.fractions(0, 2))
def test_prefix_rule_matches_bruteforce(g0, k, a, slope):
    inst = StatusQuoInstance(g0, k, THREE, a, lambda kk: slope * (kk - 1))
    assert status_quo_analysis(inst).expected_value == status_quo_bruteforce(inst)


def test_builtin_sweep_monotone():
    keeps = [r.keeps_status_quo for _, r in status_quo_builtin_sweep()]
    assert keeps == [Fraction(1, 2)] * 3 + [1, 1]
    assert all(x <= y for x, y in zip(keeps, keeps[1:]))


def test_status_quo_validation():
    with pytest.raises(BiasError):
        StatusQuoInstance(1, 2, {0: Fraction(1, 2)}, 1)
