"""Quota-constrained receiver value as a finite transportation problem.

``U(q, pi)`` is the best receiver payoff over joint measures on
(signal, action) whose row marginal is the signal distribution and whose
column marginal is the quota. Two actions are solved by a sort-and-fill
greedy rule; three or more by a transportation simplex (basis-tree pivots,
Bland's smallest-index rule against cycling). The same kernel, with the sign
flipped, gives the L1-ground-cost Wasserstein distance between two signal
structures.
"""
from __future__ import annotations

from dataclasses import dataclass
from collections import deque

import numpy as np

from .model import (
    DimensionMismatch,
    FiniteModel,
    ModelError,
    Quota,
    SignalStructure,
)

MARGINAL_TOL = 1e-9


class GammaOutOfRange(ModelError):
    pass


def check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (0.0 <= gamma < 1.0):
        raise GammaOutOfRange(f"gamma must lie in [0, 1), got {gamma!r}")
    return gamma


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Joint measure over (signal, action) with fixed marginals."""

    flow: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def __post_init__(self):
        flow = np.where(np.asarray(self.flow, dtype=float) < 0, 0.0, self.flow)
        flow.setflags(write=False)
        object.__setattr__(self, "flow", flow)

    def to_dict(self) -> dict:
        return {"flow": self.flow.tolist()}


@dataclass(frozen=True)
class RegretReport:
    first_best: float
    constrained_value: float
    gamma: float
    regret: float


# -- kernel -----------------------------------------------------------------

def _northwest_corner(supply: np.ndarray, demand: np.ndarray):
    n, k = supply.size, demand.size
    flow = np.zeros((n, k))
    basic = np.zeros((n, k), dtype=bool)
    s, d = supply.copy(), demand.copy()
    i = j = 0
    while True:
        x = min(s[i], d[j])
        flow[i, j] = x
        basic[i, j] = True
        s[i] -= x
        d[j] -= x
        if i == n - 1 and j == k - 1:
            break
        if i == n - 1:
            j += 1
        elif j == k - 1 or s[i] <= d[j]:
            i += 1
        else:
            j += 1
    return flow, basic


def _potentials(reward: np.ndarray, basic: np.ndarray):
    n, k = reward.shape
    u = np.full(n, np.nan)
    v = np.full(k, np.nan)
    u[0] = 0.0
    queue = deque([(0, True)])
    while queue:
        idx, is_row = queue.popleft()
        if is_row:
            for j in np.flatnonzero(basic[idx]):
                if np.isnan(v[j]):
                    v[j] = reward[idx, j] - u[idx]
                    queue.append((j, False))
        else:
            for i in np.flatnonzero(basic[:, idx]):
                if np.isnan(u[i]):
                    u[i] = reward[i, idx] - v[idx]
                    queue.append((i, True))
    return u, v


def _tree_path(basic: np.ndarray, start_col: int, end_row: int) -> list[tuple[int, int]]:
    """Cells on the basis-tree path from column ``start_col`` to row ``end_row``."""
    n, k = basic.shape
    # nodes: rows 0..n-1, columns n..n+k-1
    parent = {n + start_col: None}
    queue = deque([n + start_col])
    target = end_row
    while queue:
        node = queue.popleft()
        if node == target:
            break
        if node >= n:
            nbrs = np.flatnonzero(basic[:, node - n])
        else:
            nbrs = n + np.flatnonzero(basic[node])
        for nb in nbrs:
            nb = int(nb)
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    cells = []
    node = target
    while parent[node] is not None:
        prev = parent[node]
        cell = (node, prev - n) if node < n else (prev, node - n)
        cells.append(cell)
        node = prev
    cells.reverse()
    return cells


def transport_simplex(supply, demand, reward, max_iter: int = 100_000):
    """Maximise ``sum(flow * reward)`` over plans with the given marginals.

    ``supply`` and ``demand`` must be strictly positive with equal totals.
    Returns ``(value, flow)``.
    """
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    reward = np.asarray(reward, dtype=float)
    n, k = reward.shape
    flow, basic = _northwest_corner(supply, demand)
    tol = 1e-12 * max(1.0, float(np.abs(reward).max()))
    for _ in range(max_iter):
        u, v = _potentials(reward, basic)
        reduced = reward - u[:, None] - v[None, :]
        reduced[basic] = 0.0
        improving = np.flatnonzero((reduced > tol).ravel())
        if improving.size == 0:
            return float((flow * reward).sum()), flow
        ie, je = divmod(int(improving[0]), k)
        path = _tree_path(basic, je, ie)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[c] for c in minus)
        leaving = min((c for c in minus if flow[c] <= theta), key=lambda c: c[0] * k + c[1])
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[ie, je] += theta
        flow[leaving] = 0.0
        basic[leaving] = False
        basic[ie, je] = True
    raise RuntimeError("transportation simplex did not converge")


def _solve_balanced(supply, demand, reward, method: str = "simplex"):
    """Drop zero marginals, solve, and re-embed the plan at full size."""
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    rows = np.flatnonzero(supply > 0)
    cols = np.flatnonzero(demand > 0)
    s = supply[rows]
    d = demand[cols] * (s.sum() / demand[cols].sum())
    sub = reward[np.ix_(rows, cols)]
    if cols.size == 1 or rows.size == 1:
        f = np.outer(s, d) / s.sum()
    elif method == "greedy" and cols.size == 2:
        f = _greedy_two_column(s, d, sub)
    else:
        _, f = transport_simplex(s, d, sub)
    flow = np.zeros(reward.shape)
    flow[np.ix_(rows, cols)] = f
    return float((flow * reward).sum()), flow


def _greedy_two_column(supply, demand, reward):
    # signals with the largest advantage for column 1 take its mass first
    advantage = reward[:, 1] - reward[:, 0]
    order = np.argsort(-advantage, kind="stable")
    flow = np.zeros_like(reward)
    remaining = demand[1]
    for j in order:
        take = min(supply[j], remaining)
        flow[j, 1] = take
        flow[j, 0] = supply[j] - take
        remaining -= take
    return flow


# -- receiver values ----------------------------------------------------------

def _check_dims(model: FiniteModel, pi: SignalStructure, q: Quota | None = None) -> None:
    if pi.n_states != model.n_states:
        raise DimensionMismatch(f"structure has {pi.n_states} states, model has {model.n_states}")
    if q is not None and q.probs.size != model.n_actions:
        raise DimensionMismatch(f"quota has {q.probs.size} entries, model has {model.n_actions} actions")


def signal_payoffs(model: FiniteModel, pi: SignalStructure) -> np.ndarray:
    """``n x k`` matrix of ``u(mu_j, a)``."""
    return pi.posteriors @ model.utility


def solve_U(model: FiniteModel, pi: SignalStructure, q: Quota, method: str = "auto"):
    """Exact quota-constrained receiver value and an optimal plan.

    Parameters
    ----------
    method : {"auto", "greedy", "simplex"}
        ``"auto"`` uses the greedy fill for two actions and the simplex
        otherwise. Forcing ``"simplex"`` is useful for cross-checks.

    Returns
    -------
    value : float
    plan : TransportPlan
    """
    _check_dims(model, pi, q)
    if method not in ("auto", "greedy", "simplex"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "greedy" if model.n_actions == 2 else "simplex"
    reward = signal_payoffs(model, pi)
    value, flow = _solve_balanced(pi.weights, q.probs, reward, method)
    return value, TransportPlan(flow, pi.weights, q.probs)


def first_best(model: FiniteModel, pi: SignalStructure) -> float:
    _check_dims(model, pi)
    return float(pi.weights @ signal_payoffs(model, pi).max(axis=1))


def regret_gamma(model: FiniteModel, pi: SignalStructure, q: Quota, gamma: float,
                 method: str = "auto") -> RegretReport:
    gamma = check_gamma(gamma)
    u_star = first_best(model, pi)
    value, _ = solve_U(model, pi, q, method)
    return RegretReport(u_star, value, gamma, gamma * u_star - (1.0 - gamma) * value)


def decision_rule(plan: TransportPlan) -> np.ndarray:
    """Per-signal action distributions ``flow[j] / p_j``."""
    return plan.flow / plan.row_marginal[:, None]


def plan_marginal(plan: TransportPlan) -> np.ndarray:
    return plan.flow.sum(axis=0)


def wasserstein(pi1: SignalStructure, pi2: SignalStructure) -> float:
    """Optimal-transport distance between two structures, L1 ground cost."""
    if pi1.n_states != pi2.n_states:
        raise DimensionMismatch("structures live on different state spaces")
    cost = np.abs(pi1.posteriors[:, None, :] - pi2.posteriors[None, :, :]).sum(axis=2)
    value, _ = _solve_balanced(pi1.weights, pi2.weights, -cost)
    return max(0.0, -value)


__all__ = [
    "TransportPlan", "RegretReport", "GammaOutOfRange", "check_gamma",
    "transport_simplex", "solve_U", "first_best", "regret_gamma",
    "decision_rule", "plan_marginal", "signal_payoffs", "wasserstein",
]
