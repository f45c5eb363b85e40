"""Quota-constrained values as transport problems.

With three actions the receiver's best use of a signal structure under a
fixed action marginal is a small transportation problem.  This walks through
one instance, prints the optimal decision rule, and shows concavity of the
value in the quota along a segment.
"""
import numpy as np

from quota_robust import FiniteModel, Quota, SignalStructure, decision_rule, first_best, solve_U, wasserstein
from quota_robust import full_revelation, no_info

model = FiniteModel(
    states=["bust", "ok", "boom"],
    actions=["hold", "buy", "hedge"],
    utility=[[0.0, -1.0, 0.2], [0.0, 0.3, 0.1], [0.0, 1.0, 0.4]],
    prior=[0.3, 0.4, 0.3],
)
pi = SignalStructure([[0.6, 0.4, 0.0], [0.0, 0.4, 0.6]], [0.5, 0.5])
print("barycenter:", pi.barycenter(), " first-best value:", round(first_best(model, pi), 6))

q = Quota([0.2, 0.5, 0.3])
value, plan = solve_U(model, pi, q)
print(f"\nvalue under quota {q.probs}: {value:.6f}")
print("decision rule (rows = signals, columns = actions):")
print(np.round(decision_rule(plan), 4))

# %% concavity along a segment of quotas
q0, q1 = np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.5, 0.5])
ts = np.linspace(0, 1, 6)
values = [solve_U(model, pi, Quota((1 - t) * q0 + t * q1))[0] for t in ts]
print("\nU along the segment:", np.round(values, 4))
print("second differences (all <= 0):", np.round(np.diff(values, 2), 6))

# %% distances between structures
print("\nW(full, none) =", wasserstein(full_revelation(model), no_info(model)))
print("W(pi, none)   =", round(wasserstein(pi, no_info(model)), 6))
