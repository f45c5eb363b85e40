"""Exact solvers and brute-force checks for quota rules in persuasion games
where the receiver commits to a decision rule."""

from .model import (
    FiniteModel,
    Posterior,
    Quota,
    SenderUtility,
    SignalStructure,
    full_info_value,
    full_revelation,
    load_model,
    myopic_action,
    no_info,
    posterior_payoff,
    reduce_binary,
    validate_model,
)
from .transport import (
    RegretReport,
    TransportPlan,
    decision_rule,
    first_best,
    regret_gamma,
    solve_U,
    wasserstein,
)
from .binary import (
    BinaryPrior,
    left_error,
    optimal_quota,
    partition_from_p0,
    right_error,
    thresholds,
    worst_partition,
)
from .adversary import (
    GridParams,
    MyopicRule,
    QuotaRule,
    RuleTable,
    adversarial_pair,
    generate_grid,
    myopic_worst_case,
    sender_best_response,
    verify_quota_optimality,
    worst_case_regret_quota,
)
from .game import first_best_quota, play, simulate

__version__ = "0.1.0"
