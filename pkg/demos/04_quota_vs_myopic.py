"""Why commit to a quota rather than best-respond?

A receiver who best-responds to every posterior can be steered: a sender who
likes the prior-optimal action simply withholds information.  A quota rule
fixes the action frequencies, so withholding information cannot shift them.
We compare worst-case regrets and then run the optimality check against
randomly drawn structure-dependent quota rules.
"""
from quota_robust import (GridParams, generate_grid, myopic_worst_case, optimal_quota, reduce_binary,
                          validate_model, verify_quota_optimality)

model = validate_model({
    "states": ["low", "high"], "actions": ["reject", "accept"],
    "utility": [[0.0, -1.0], [0.0, 1.0]], "prior": [0.5, 0.5],
})

myopic, v0, menu = myopic_worst_case(model)
red = reduce_binary(model)
q_star, r_half = optimal_quota(red.prior, 0.5)
print(f"myopic rule, adversarial sender: plain regret {myopic:.4f}")
print(f"optimal quota q*={q_star:.4f}:      plain regret {2 * r_half:.4f} (gamma-regret {r_half:.4f})")

grid = generate_grid(model, GridParams(resolution=100, seed=1))
report = verify_quota_optimality(model, 0.5, grid, trials=30, seed=1)
regrets = sorted(t["regret"] for t in report.trials)
print(f"\n{len(report.trials)} random generalized rules; lowest regret {regrets[0]:.5f} "
      f">= q* regret {report.grid_regret_star:.5f}: {report.passed}")
