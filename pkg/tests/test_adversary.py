import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quota_robust import (
    BinaryPrior,
    FiniteModel,
    GridParams,
    MyopicRule,
    Quota,
    QuotaRule,
    RuleTable,
    SenderUtility,
    adversarial_pair,
    full_revelation,
    generate_grid,
    myopic_worst_case,
    no_info,
    optimal_quota,
    play,
    sender_best_response,
    verify_quota_optimality,
    worst_case_regret_quota,
)
from quota_robust.adversary import (
    EmptyMenu,
    EqualQuotas,
    InvalidParams,
    RuleGap,
    choose_structure,
    dominating_subset,
    make_rng,
    monotone_partition,
    parallel_map,
    random_structure,
    thread_count,
)
from quota_robust.model import NotBinaryAction, structure_key


def test_rng_is_reproducible():
    assert make_rng(5).uniform(size=3).tolist() == make_rng(5).uniform(size=3).tolist()
    assert make_rng(5).uniform() != make_rng(6).uniform()


def test_thread_count_and_parallel_map(monkeypatch):
    monkeypatch.setenv("QUOTA_ROBUST_THREADS", "3")
    assert thread_count() == 3
    assert parallel_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]
    monkeypatch.setenv("QUOTA_ROBUST_THREADS", "1")
    assert parallel_map(str, [1, 2]) == ["1", "2"]


def test_choose_structure_tie_breaks():
    # sender indifferent between 0 and 2 -> receiver prefers 2
    assert choose_structure(np.array([1.0, 0.5, 1.0]), np.array([0.1, 0.9, 0.3])) == 2
    # full tie -> lowest index
    assert choose_structure(np.array([1.0, 1.0]), np.array([0.2, 0.2])) == 0


def test_sender_best_response(symmetric_model):
    menu = [full_revelation(symmetric_model), no_info(symmetric_model)]
    rule = RuleTable({0: Quota([0.5, 0.5]), 1: Quota([0.2, 0.8])})
    assert sender_best_response(symmetric_model, rule, SenderUtility([0, 1]), menu) == 1
    assert sender_best_response(symmetric_model, rule, SenderUtility([1, 0]), menu) == 0
    with pytest.raises(EmptyMenu):
        sender_best_response(symmetric_model, rule, SenderUtility([1, 0]), [])


def test_rule_table_gap():
    with pytest.raises(RuleGap):
        RuleTable({0: Quota([1, 0])}).quota_for(3)
    assert RuleTable({0: Quota([1, 0]), 1: Quota([1, 0])}).is_constant()


def test_grid_params_validation(symmetric_model):
    for bad in (GridParams(signals=0), GridParams(resolution=0), GridParams(count=-1), GridParams(seed=-2)):
        with pytest.raises(InvalidParams):
            generate_grid(symmetric_model, bad)


def test_generate_grid_shape_and_determinism(symmetric_model):
    grid = generate_grid(symmetric_model, GridParams(resolution=10, count=15, seed=4))
    again = generate_grid(symmetric_model, GridParams(resolution=10, count=15, seed=4))
    assert structure_key(grid[0]) == structure_key(no_info(symmetric_model))
    assert [structure_key(p) for p in grid.structures] == [structure_key(p) for p in again.structures]
    keys = {structure_key(p) for p in grid.structures}
    assert len(keys) == len(grid)  # de-duplicated
    for pi in grid.structures:
        np.testing.assert_allclose(pi.barycenter(), symmetric_model.prior, atol=1e-12)


def test_monotone_partition_splits_merged_states():
    model = FiniteModel(["a", "b", "c"], ["x", "y"], [[0, -1], [0, 1], [0, 1]], [0.5, 0.2, 0.3])
    pi = monotone_partition(model, 0.6)
    np.testing.assert_allclose(pi.weights, [0.6, 0.4])
    # the merged high atom is split in proportion 2:3
    np.testing.assert_allclose(pi.posteriors[0] * 0.6, [0.5, 0.04, 0.06])
    np.testing.assert_allclose(pi.barycenter(), model.prior)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_random_structure_is_bayes_plausible(signals, seed):
    rng = np.random.default_rng(seed)
    model = FiniteModel(["a", "b", "c"], ["x", "y"], np.zeros((3, 2)), rng.dirichlet(np.ones(3)))
    pi = random_structure(model, signals, rng)
    np.testing.assert_allclose(pi.barycenter(), model.prior, atol=1e-12)


def test_worst_case_over_grid_matches_closed_form(symmetric_model):
    grid = generate_grid(symmetric_model, GridParams(resolution=1000))
    value, idx = worst_case_regret_quota(symmetric_model, Quota([0.5, 0.5]), grid, 0.5)
    _, exact = optimal_quota(BinaryPrior([-1, 1], [0.5, 0.5]), 0.5)
    assert exact - 1e-6 <= value <= exact + 1e-12


def test_dominating_subset_keeps_finer_structures(symmetric_model):
    grid = generate_grid(symmetric_model, GridParams(resolution=4, count=5, seed=1))
    sub = dominating_subset(symmetric_model, grid, no_info(symmetric_model))
    assert len(sub) == len(grid)  # everything is weakly more informative than no information
    sub = dominating_subset(symmetric_model, grid, full_revelation(symmetric_model))
    assert [structure_key(p) for p in sub.structures] == [structure_key(full_revelation(symmetric_model))]


def test_adversarial_pair_makes_no_information_strict(symmetric_model):
    rule = RuleTable({0: Quota([0.5, 0.5]), 1: Quota([0.3, 0.7])})
    pi_prime = full_revelation(symmetric_model)
    v, menu = adversarial_pair(symmetric_model, rule, pi_prime)
    assert v.values.min() == 0.0
    assert sender_best_response(symmetric_model, rule, v, menu) == 1
    with pytest.raises(EqualQuotas):
        adversarial_pair(symmetric_model, RuleTable({0: Quota([1, 0]), 1: Quota([1, 0])}), pi_prime)


def test_myopic_worst_case(symmetric_model):
    value, v0, menu = myopic_worst_case(symmetric_model)
    assert value == 0.5
    outcome = play(symmetric_model, MyopicRule(), v0, menu)
    assert outcome.chosen_structure == 1
    assert outcome.regret_plain == pytest.approx(value)


def test_verify_quota_optimality_symmetric(symmetric_model):
    rep = verify_quota_optimality(symmetric_model, 0.5, trials=30, seed=7)
    assert rep.passed
    assert rep.q_star == pytest.approx(0.5, abs=1e-9)
    assert len(rep.trials) == 30
    assert rep.to_dict()["passed"] is True


def test_verify_zero_trials_is_vacuous(symmetric_model):
    rep = verify_quota_optimality(symmetric_model, 0.5, trials=0, seed=1)
    assert rep.trials == [] and rep.passed and rep.to_dict()["min_margin"] is None


def test_verify_catches_a_better_rule_if_one_existed(symmetric_model):
    """Negative control: the check fails when the floor is artificially raised."""
    rep = verify_quota_optimality(symmetric_model, 0.5, trials=5, seed=3)
    for t in rep.trials:
        t["margin"] = t["regret"] - (rep.grid_regret_star + 0.5)
    assert not rep.passed


def test_verify_needs_two_actions():
    model = FiniteModel(["a", "b"], ["x", "y", "z"], [[0, 1, 2], [2, 1, 0]], [0.5, 0.5])
    with pytest.raises(NotBinaryAction):
        verify_quota_optimality(model, 0.5, trials=1)


@pytest.mark.parametrize("gamma", [0.25, 0.75])
def test_verify_other_gammas_and_priors(gamma):
    model = BinaryPrior([-0.8, -0.1, 0.5, 1.0], [0.2, 0.3, 0.3, 0.2]).to_model()
    rep = verify_quota_optimality(model, gamma, trials=20, seed=11)
    assert rep.passed, rep.to_dict()


def test_quota_rule_is_constant(symmetric_model):
    rule = QuotaRule(Quota([0.5, 0.5]))
    plan = rule.plan(symmetric_model, full_revelation(symmetric_model), 0)
    np.testing.assert_allclose(plan.flow.sum(axis=0), [0.5, 0.5])
