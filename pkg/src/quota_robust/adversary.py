"""Brute-force adversaries over finite families of signal structures.

The sup over all Bayes-plausible structures is replaced by a finite grid
(no information, full revelation, binary monotone partitions on a p0-grid,
and seeded random Dirichlet splits of the prior). On that grid this module
computes worst-case regrets of quotas, sender best responses to arbitrary
decision rules, the two-structure menu that defeats any rule whose quota
depends on the chosen structure, and the myopic-rule baseline.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .binary import left_error, optimal_quota, partition_from_p0, right_error
from .model import (
    FiniteModel,
    ModelError,
    NotBinaryAction,
    Quota,
    SenderUtility,
    SignalStructure,
    UninformativePrior,
    full_info_value,
    full_revelation,
    myopic_action,
    no_info,
    posterior_payoff,
    reduce_binary,
    structure_key,
)
from .transport import (
    TransportPlan,
    check_gamma,
    regret_gamma,
    signal_payoffs,
    solve_U,
)

WORST_SET_TOL = 1e-6
CHOICE_TOL = 1e-12


class InvalidParams(ModelError):
    pass


class EmptyMenu(ModelError):
    pass


class EqualQuotas(ModelError):
    pass


class RuleGap(ModelError):
    """A decision rule is asked about a structure it does not cover."""


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based 64-bit generator used everywhere randomness appears."""
    return np.random.Generator(np.random.Philox(int(seed)))


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("QUOTA_ROBUST_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Map preserving input order; threads capped by ``QUOTA_ROBUST_THREADS``."""
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- decision rules -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuotaRule:
    """The same quota for every structure."""

    quota: Quota

    def quota_for(self, index: int) -> Quota:
        return self.quota

    def plan(self, model: FiniteModel, pi: SignalStructure, index: int) -> TransportPlan:
        return solve_U(model, pi, self.quota)[1]


@dataclass(frozen=True, eq=False)
class RuleTable:
    """Generalized quota rule: one quota per structure index."""

    quotas: dict

    def __post_init__(self):
        quotas = {int(i): q if isinstance(q, Quota) else Quota(q) for i, q in dict(self.quotas).items()}
        object.__setattr__(self, "quotas", quotas)

    def quota_for(self, index: int) -> Quota:
        try:
            return self.quotas[index]
        except KeyError:
            raise RuleGap(f"rule has no quota for structure {index}") from None

    def plan(self, model: FiniteModel, pi: SignalStructure, index: int) -> TransportPlan:
        return solve_U(model, pi, self.quota_for(index))[1]

    def is_constant(self, tol: float = 1e-12) -> bool:
        probs = [q.probs for q in self.quotas.values()]
        return all(np.abs(p - probs[0]).max() <= tol for p in probs)


@dataclass(frozen=True)
class MyopicRule:
    """Best action for each posterior, ignoring the sender's choice."""

    def plan(self, model: FiniteModel, pi: SignalStructure, index: int) -> TransportPlan:
        actions = signal_payoffs(model, pi).argmax(axis=1)
        flow = np.zeros((pi.n_signals, model.n_actions))
        flow[np.arange(pi.n_signals), actions] = pi.weights
        return TransportPlan(flow, pi.weights, flow.sum(axis=0))


def rule_values(model, rule, v: SenderUtility, menu: Sequence[SignalStructure]):
    """Sender and receiver payoffs, and plans, of ``rule`` on each menu item."""
    if len(menu) == 0:
        raise EmptyMenu("menu is empty")
    plans = [rule.plan(model, pi, j) for j, pi in enumerate(menu)]
    sender = np.array([v.values @ p.flow.sum(axis=0) for p in plans])
    receiver = np.array([(p.flow * signal_payoffs(model, pi)).sum() for p, pi in zip(plans, menu)])
    return sender, receiver, plans


def sender_best_response(model: FiniteModel, rule, v: SenderUtility,
                         menu: Sequence[SignalStructure]) -> int:
    """Sender's choice from ``menu``; ties favour the receiver, then the lowest index."""
    sender, receiver, _ = rule_values(model, rule, v, menu)
    return choose_structure(sender, receiver)


def choose_structure(sender: np.ndarray, receiver: np.ndarray) -> int:
    tied = np.flatnonzero(sender >= sender.max() - CHOICE_TOL)
    top = receiver[tied].max()
    return int(tied[np.flatnonzero(receiver[tied] >= top - CHOICE_TOL)[0]])


# -- structure grids ----------------------------------------------------------

@dataclass(frozen=True)
class GridParams:
    signals: int = 2
    resolution: int = 10
    count: int = 0
    seed: int = 0
    partitions: bool = True

    def validate(self) -> None:
        if not (1 <= self.signals <= 4):
            raise InvalidParams("signal count must be in 1..4")
        if self.resolution < 1:
            raise InvalidParams("grid resolution must be positive")
        if self.count < 0:
            raise InvalidParams("random structure count must be nonnegative")
        if self.seed < 0:
            raise InvalidParams("seed must be nonnegative")


@dataclass(frozen=True, eq=False)
class StructureGrid:
    structures: list
    descriptor: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.structures)

    def __getitem__(self, i: int) -> SignalStructure:
        return self.structures[i]

    def extended(self, extra: Sequence[SignalStructure]) -> "StructureGrid":
        seen = {structure_key(pi) for pi in self.structures}
        items = list(self.structures)
        for pi in extra:
            key = structure_key(pi)
            if key not in seen:
                seen.add(key)
                items.append(pi)
        return StructureGrid(items, dict(self.descriptor, extra=len(items) - len(self.structures)))


def monotone_partition(model: FiniteModel, p0: float) -> SignalStructure:
    """Binary monotone partition of a two-action model's states by payoff difference.

    States merged into one atom by the binary reduction are split
    proportionally to their prior weight.
    """
    red = reduce_binary(model)
    part = partition_from_p0(red.prior, p0)
    live = red.atom_of_state >= 0
    atom_mass = red.prior.prob[red.atom_of_state[live]]
    posteriors = np.zeros((part.n_signals, model.n_states))
    posteriors[:, live] = part.posteriors[:, red.atom_of_state[live]] * (model.prior[live] / atom_mass)
    posteriors /= posteriors.sum(axis=1, keepdims=True)
    return SignalStructure(posteriors, part.weights)


def random_structure(model: FiniteModel, signals: int, rng: np.random.Generator) -> SignalStructure:
    """Split each state's prior mass across signals with Dirichlet(1) fractions."""
    fractions = rng.dirichlet(np.ones(signals), size=model.n_states)
    joint = model.prior[:, None] * fractions
    mass = joint.sum(axis=0)
    keep = mass > 1e-12
    joint, mass = joint[:, keep], mass[keep]
    return SignalStructure((joint / mass).T, mass / mass.sum())


def generate_grid(model: FiniteModel, params: GridParams) -> StructureGrid:
    """Deterministic finite stand-in for the set of all signal structures.

    Index 0 is always the no-information structure.
    """
    params.validate()
    items = [no_info(model), full_revelation(model)]
    if params.partitions and model.n_actions == 2:
        try:
            items += [monotone_partition(model, p0)
                      for p0 in np.linspace(0.0, 1.0, params.resolution + 1)]
        except UninformativePrior:
            pass
    rng = make_rng(params.seed)
    items += [random_structure(model, params.signals, rng) for _ in range(params.count)]
    return StructureGrid(StructureGrid([]).extended(items).structures, asdict(params))


def dominating_subset(model: FiniteModel, grid: StructureGrid, pi0: SignalStructure,
                      q_points: int = 21, seed: int = 0, tol: float = 1e-9) -> StructureGrid:
    """Structures that weakly beat ``pi0`` in quota-constrained value on a quota grid.

    A desk-scale certificate of Blackwell dominance over ``pi0``: sufficient
    evidence at the sampled quotas, not a proof.
    """
    if model.n_actions == 2:
        quotas = [Quota.binary(t) for t in np.linspace(0, 1, q_points)]
    else:
        rng = make_rng(seed)
        quotas = [Quota(p) for p in rng.dirichlet(np.ones(model.n_actions), size=q_points)]
        quotas += [Quota(np.eye(model.n_actions)[a]) for a in range(model.n_actions)]
    base = np.array([solve_U(model, pi0, q)[0] for q in quotas])
    kept = [pi for pi in grid.structures
            if all(solve_U(model, pi, q)[0] >= b - tol for q, b in zip(quotas, base))]
    return StructureGrid(kept, dict(grid.descriptor, minimal_element=pi0.to_dict()))


def grid_regrets(model: FiniteModel, q: Quota, grid: StructureGrid, gamma: float) -> np.ndarray:
    gamma = check_gamma(gamma)
    return np.array(parallel_map(lambda pi: regret_gamma(model, pi, q, gamma).regret,
                                 grid.structures))


def worst_case_regret_quota(model: FiniteModel, q: Quota, grid: StructureGrid,
                            gamma: float) -> tuple[float, int]:
    values = grid_regrets(model, q, grid, gamma)
    best = int(np.argmax(values))
    return float(values[best]), best


# -- adversarial constructions ------------------------------------------------

def adversarial_pair(model: FiniteModel, rule: RuleTable, pi_prime: SignalStructure,
                     pi_none: SignalStructure | None = None):
    """Sender utility under which no information is the strict best response.

    ``rule`` assigns index 0 to ``pi_prime`` and index 1 to the
    no-information structure. The utility is ``qbar(none) - qbar(pi')``
    shifted to be nonnegative, so the sender's gain from choosing no
    information is ``|qbar(none) - qbar(pi')|^2 > 0``. Returns
    ``(v, [pi_prime, pi_none])``.
    """
    if pi_none is None:
        pi_none = no_info(model)
    q_prime, q_none = rule.quota_for(0), rule.quota_for(1)
    diff = q_none.probs - q_prime.probs
    if np.abs(diff).max() <= 1e-12:
        raise EqualQuotas("quotas coincide; the rule acts as a quota rule on this menu")
    return SenderUtility(diff - diff.min()), [pi_prime, pi_none]


def myopic_worst_case(model: FiniteModel):
    """Regret of the myopic rule against full revelation vs. no information.

    Returns ``(value, v0, menu)`` with ``v0`` the indicator of the
    prior-optimal action ``a0`` and ``menu = [full_revelation, no_info]``.
    """
    a0 = myopic_action(model, model.prior)
    value = full_info_value(model) - posterior_payoff(model, model.prior, a0)
    v0 = SenderUtility(np.eye(model.n_actions)[a0])
    return value, v0, [full_revelation(model), no_info(model)]


@dataclass
class OptimalityReport:
    gamma: float
    seed: int
    q_star: float
    regret_star: float
    grid_regret_star: float
    grid_size: int
    worst_set: list
    local_optimality_margin: float
    trials: list = field(default_factory=list)
    tolerance: float = 1e-6

    @property
    def min_margin(self) -> float:
        margins = [t["margin"] for t in self.trials]
        return min(margins) if margins else float("inf")

    @property
    def passed(self) -> bool:
        return self.min_margin >= -self.tolerance and self.local_optimality_margin >= -1e-8

    def to_dict(self) -> dict:
        out = asdict(self)
        out["min_margin"] = None if not self.trials else self.min_margin
        out["passed"] = self.passed
        return out


def _random_rule(kind: str, size: int, q_star: float, rng) -> RuleTable:
    if kind == "constant":
        q = float(rng.uniform())
        return RuleTable({i: Quota.binary(q) for i in range(size)})
    if kind == "perturbed":
        qs = np.clip(q_star + rng.normal(0.0, 0.05, size), 0.0, 1.0)
    else:
        qs = rng.uniform(size=size)
    return RuleTable({i: Quota.binary(float(q)) for i, q in enumerate(qs)})


def verify_quota_optimality(model: FiniteModel, gamma: float, grid: StructureGrid | None = None,
                            trials: int = 50, seed: int = 0, q_samples: int = 201,
                            rule_factory: Callable | None = None) -> OptimalityReport:
    """Desk-scale check that no generalized quota rule beats ``q*``.

    Each random rule ``qbar`` either is constant (then its worst case over
    the grid is recorded) or differs between some worst case ``pi'`` of
    ``q*`` and no information; the sender is then offered
    ``{pi', no information}`` with a utility preferring ``qbar(no info)`` and
    the resulting generalized regret is recorded. Every recorded regret must
    reach ``regret(q*)`` up to the report tolerance. The exact worst-case
    partitions of ``q*`` are added to the grid so its worst-case set is not
    an artefact of the grid resolution.
    """
    from .game import play

    gamma = check_gamma(gamma)
    if model.n_actions != 2:
        raise NotBinaryAction("quota optimality check needs a two-action model")
    red = reduce_binary(model)
    q1, r_binary = optimal_quota(red.prior, gamma)
    q_star = Quota.binary(q1)
    if grid is None:
        grid = generate_grid(model, GridParams(resolution=100, seed=seed))
    exact = [monotone_partition(model, err.argmax_p0)
             for err in (left_error(red.prior, q1, gamma), right_error(red.prior, q1, gamma))
             if err.feasible]
    grid = grid.extended(exact)
    n0 = 0  # generate_grid puts no information first
    if structure_key(grid[n0]) != structure_key(no_info(model)):
        grid = StructureGrid([no_info(model)] + list(grid.structures), grid.descriptor)

    values = grid_regrets(model, q_star, grid, gamma)
    r_grid = float(values.max())
    worst = [int(i) for i in np.flatnonzero(values >= r_grid - WORST_SET_TOL)]

    local_margin = float("inf")
    for t in np.linspace(0.0, 1.0, q_samples):
        qp = Quota.binary(t)
        best = max(regret_gamma(model, grid[i], qp, gamma).regret for i in worst)
        local_margin = min(local_margin, best - r_grid)

    report = OptimalityReport(gamma, int(seed), q1, red.model_regret(r_binary, gamma), r_grid,
                              len(grid), worst, local_margin)
    rng = make_rng(seed)
    kinds = ("constant", "perturbed", "uniform")
    for t in range(trials):
        kind = kinds[int(rng.integers(len(kinds)))]
        rule = (rule_factory(t, len(grid), rng) if rule_factory
                else _random_rule(kind, len(grid), q1, rng))
        if rule_factory:
            kind = "constant" if rule.is_constant() else "custom"
        q_none = rule.quota_for(n0)
        if rule.is_constant():
            value, idx = worst_case_regret_quota(model, q_none, grid, gamma)
            entry = {"kind": kind, "regret": value, "structure": idx}
        else:
            scores = [regret_gamma(model, grid[i], q_none, gamma).regret for i in worst]
            order = np.argsort(scores, kind="stable")[::-1]
            differing = [worst[i] for i in order
                         if np.abs(rule.quota_for(worst[i]).probs - q_none.probs).max() > 1e-12]
            if differing:
                i_prime = differing[0]
                q_prime = rule.quota_for(i_prime)
                sub_rule = RuleTable({0: q_prime, 1: q_none})
                v, menu = adversarial_pair(model, sub_rule, grid[i_prime], grid[n0])
                outcome = play(model, sub_rule, v, menu, gamma)
                entry = {"kind": kind, "regret": outcome.gamma_regret, "structure": i_prime,
                         "chosen": outcome.chosen_structure,
                         "sender_margin": float(v.values @ (q_none.probs - q_prime.probs))}
            else:
                i_prime = worst[int(order[0])]
                value = regret_gamma(model, grid[i_prime], rule.quota_for(i_prime), gamma).regret
                entry = {"kind": kind, "regret": value, "structure": i_prime}
        entry["margin"] = entry["regret"] - r_grid
        report.trials.append(entry)
    return report


__all__ = [
    "InvalidParams", "EmptyMenu", "EqualQuotas", "RuleGap", "make_rng", "parallel_map",
    "QuotaRule", "RuleTable", "MyopicRule", "rule_values", "sender_best_response",
    "choose_structure",
    "GridParams", "StructureGrid", "monotone_partition", "random_structure",
    "generate_grid", "dominating_subset", "grid_regrets", "worst_case_regret_quota",
    "adversarial_pair", "myopic_worst_case", "OptimalityReport", "verify_quota_optimality",
]
