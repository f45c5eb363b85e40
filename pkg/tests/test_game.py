import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quota_robust import (
    FiniteModel,
    MyopicRule,
    Quota,
    QuotaRule,
    RuleTable,
    SenderUtility,
    SignalStructure,
    first_best_quota,
    full_revelation,
    no_info,
    play,
    simulate,
)
from quota_robust.adversary import EmptyMenu, RuleGap, random_structure
from quota_robust.game import first_best_structure, signal_given_state


def test_play_first_best_quota_symmetric(symmetric_model):
    menu = [no_info(symmetric_model), full_revelation(symmetric_model)]
    q = first_best_quota(symmetric_model, menu)
    np.testing.assert_allclose(q.probs, [0.5, 0.5])
    out = play(symmetric_model, QuotaRule(q), SenderUtility([0, 1]), menu)
    assert out.regret_plain == pytest.approx(0.0, abs=1e-15)
    assert out.first_best_structure == 1
    assert out.efficiency_loss + out.agency_loss == pytest.approx(out.regret_plain)


def test_decomposition_and_gamma_regret(symmetric_model):
    menu = [full_revelation(symmetric_model), no_info(symmetric_model)]
    out = play(symmetric_model, QuotaRule(Quota([0.3, 0.7])), SenderUtility([0, 1]), menu, gamma=0.25)
    assert out.first_best_value == 0.5
    assert out.receiver_value == pytest.approx(0.3)
    assert out.efficiency_loss == pytest.approx(0.2)
    assert out.agency_loss == pytest.approx(0.0)
    assert out.gamma_regret == pytest.approx(0.25 * 0.5 - 0.75 * 0.3)
    assert set(out.to_dict()) >= {"regret_plain", "efficiency_loss", "agency_loss"}


def test_agency_loss_under_myopic(symmetric_model):
    menu = [full_revelation(symmetric_model), no_info(symmetric_model)]
    out = play(symmetric_model, MyopicRule(), SenderUtility([1, 0]), menu)
    assert out.efficiency_loss == 0.0
    assert out.agency_loss == pytest.approx(0.5)


def test_first_best_structure_ties_lowest_index(symmetric_model):
    full = full_revelation(symmetric_model)
    assert first_best_structure(symmetric_model, [no_info(symmetric_model), full, full]) == 1
    with pytest.raises(EmptyMenu):
        first_best_structure(symmetric_model, [])


def test_rule_gap_raised(symmetric_model):
    menu = [full_revelation(symmetric_model), no_info(symmetric_model)]
    with pytest.raises(RuleGap):
        play(symmetric_model, RuleTable({0: Quota([0.5, 0.5])}), SenderUtility([0, 1]), menu)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_first_best_quota_has_zero_regret(seed):
    rng = np.random.default_rng(seed)
    m, k = int(rng.integers(2, 5)), int(rng.integers(2, 4))
    model = FiniteModel([f"s{i}" for i in range(m)], [f"a{j}" for j in range(k)],
                        rng.uniform(-1, 1, (m, k)), rng.dirichlet(np.ones(m)))
    menu = [random_structure(model, int(rng.integers(1, 4)), rng) for _ in range(int(rng.integers(1, 6)))]
    rule = QuotaRule(first_best_quota(model, menu))
    v = SenderUtility(rng.uniform(-1, 1, k))
    assert play(model, rule, v, menu).regret_plain <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_signal_given_state_rows_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    prior = rng.dirichlet(np.ones(4))
    prior[0] = 0.0
    prior /= prior.sum()
    model = FiniteModel(list("abcd"), ["x", "y"], np.zeros((4, 2)), prior)
    pi = random_structure(model, 3, rng)
    rows = signal_given_state(model, pi)
    np.testing.assert_allclose(rows[1:].sum(axis=1), 1.0, atol=1e-10)
    assert rows[0].sum() == 0.0


def test_simulation_reproducible_and_distinct(symmetric_model):
    menu = [full_revelation(symmetric_model)]
    rule = QuotaRule(Quota([0.5, 0.5]))
    a = simulate(symmetric_model, rule, SenderUtility([0, 0]), menu, rounds=1, seed=3)
    b = simulate(symmetric_model, rule, SenderUtility([0, 0]), menu, rounds=1, seed=3)
    assert a.to_dict() == b.to_dict()
    c = simulate(symmetric_model, rule, SenderUtility([0, 0]), menu, rounds=1000, seed=3)
    d = simulate(symmetric_model, rule, SenderUtility([0, 0]), menu, rounds=1000, seed=4)
    assert c.receiver_mean != d.receiver_mean


def test_deterministic_plan_gives_deterministic_actions(symmetric_model):
    """Full revelation under the first-best quota: payoff is +1 or 0 with certainty per state."""
    menu = [full_revelation(symmetric_model)]
    res = simulate(symmetric_model, QuotaRule(Quota([0.5, 0.5])), SenderUtility([0, 1]), menu,
                   rounds=20000, seed=5)
    # the high state always gets a1 (payoff 1), the low state a0 (payoff 0)
    assert res.sender_mean == pytest.approx(res.receiver_mean, abs=1e-15)


def test_standard_error_shrinks_with_rounds(symmetric_model):
    menu = [SignalStructure([[0.8, 0.2], [0.2, 0.8]], [0.5, 0.5])]
    rule = QuotaRule(Quota([0.4, 0.6]))
    small = simulate(symmetric_model, rule, SenderUtility([0, 1]), menu, rounds=30000, seed=1)
    large = simulate(symmetric_model, rule, SenderUtility([0, 1]), menu, rounds=90000, seed=2)
    assert 1.5 <= small.receiver_se / large.receiver_se <= 2.1


def test_zero_rounds_rejected(symmetric_model):
    with pytest.raises(ValueError):
        simulate(symmetric_model, QuotaRule(Quota([0.5, 0.5])), SenderUtility([0, 1]),
                 [full_revelation(symmetric_model)], rounds=0, seed=1)


def test_simulation_dict_layout(symmetric_model):
    res = simulate(symmetric_model, QuotaRule(Quota([0.5, 0.5])), SenderUtility([0, 1]),
                   [full_revelation(symmetric_model)], rounds=100, seed=1)
    d = res.to_dict()
    assert set(d) == {"analytic", "empirical", "rounds", "seed"}
    assert d["empirical"]["regret_plain"] == pytest.approx(0.5 - res.receiver_mean)
