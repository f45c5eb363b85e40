"""How the optimal quota moves with the prior.

Shifting mass towards states that favour action 1 raises the quota; spreading
an atom among the states that favour action 1 lowers it; spreading among the
states that favour action 0 raises it.
"""
import numpy as np

from quota_robust.cli import run_sweep

sweeps = {
    "mass moves upward (gamma = 1/2)": {
        "family": "fosd_shift", "gamma": 0.5,
        "base": {"theta": [-1, 1], "prob": [0.75, 0.25]},
        "target": {"theta": [-1, 1], "prob": [0.1, 0.9]},
        "grid": list(np.linspace(0, 1, 6)),
    },
    "spread the positive atom at 0.6": {
        "family": "mps_spread_theta1", "gamma": 0.5, "atom": 0.6,
        "base": {"theta": [-1, 0.6], "prob": [0.5, 0.5]},
        "grid": list(np.linspace(0, 0.4, 6)),
    },
    "spread the negative atom at -0.5": {
        "family": "mps_spread_theta0", "gamma": 0.5, "atom": -0.5,
        "base": {"theta": [-0.5, 1.0], "prob": [0.6, 0.4]},
        "grid": list(np.linspace(0, 0.45, 6)),
    },
    "regret weight gamma": {
        "family": "gamma_sweep",
        "base": {"theta": [-1, 0.6], "prob": [0.5, 0.5]},
        "grid": [0.1, 0.3, 0.5, 0.7, 0.9],
    },
}

for title, spec in sweeps.items():
    rows = run_sweep(spec)
    print(title)
    for parameter, q_star in rows:
        print(f"   {parameter:6.3f} -> q* = {q_star:.5f}")
