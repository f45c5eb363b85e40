"""The optimal quota for a symmetric binary problem.

The state is equally likely to favour either action.  We find the
min-max-regret quota, look at the two worst-case partitions that pin it
down, and confirm that a constrained transport solve on those partitions
reproduces the closed-form regret.
"""
import numpy as np

from quota_robust import BinaryPrior, Quota, optimal_quota, partition_from_p0, regret_gamma
from quota_robust.binary import left_error, regret_curve, right_error

prior = BinaryPrior([-1.0, 1.0], [0.5, 0.5])
gamma = 0.5

q_star, r_star = optimal_quota(prior, gamma)
print(f"optimal quota Pr(a=1) = {q_star:.6f}, worst-case regret = {r_star:.6f}")
print(f"(3/4 - sqrt(2)/2      = {0.75 - np.sqrt(2) / 2:.6f})")

# %% the two binding partitions
left, right = left_error(prior, q_star, gamma), right_error(prior, q_star, gamma)
model = prior.to_model()
for err in (left, right):
    pi = partition_from_p0(prior, err.argmax_p0)
    lp = regret_gamma(model, pi, Quota.binary(q_star), gamma).regret
    print(f"{err.side.value:>5}-biased worst case at p0={err.argmax_p0:.4f}: "
          f"closed form {err.value:.6f}, transport {lp:.6f}")

# %% the regret curve: left error falls, right error rises, they cross at q*
print("\n   q      left     right")
for q, l, r, _ in regret_curve(prior, gamma, np.linspace(0, 1, 11)):
    print(f"{q:4.1f}  {l:8.5f}  {r:8.5f}")
