"""One play of the commitment game, analytically and by Monte Carlo.

The receiver commits to a rule, the sender picks a structure from the menu,
the state and signal are drawn, and the rule's plan picks the action.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .adversary import EmptyMenu, RuleGap, choose_structure, make_rng, rule_values
from .model import FiniteModel, ModelError, Quota, SenderUtility, SignalStructure
from .transport import check_gamma, first_best, signal_payoffs

__all__ = ["GameOutcome", "SimulationResult", "ZeroPriorState", "RuleGap", "EmptyMenu",
           "first_best_quota", "first_best_structure", "play", "simulate", "signal_given_state"]


class ZeroPriorState(ModelError):
    pass


@dataclass(frozen=True)
class GameOutcome:
    """Result of one play.

    ``regret_plain = efficiency_loss + agency_loss`` where efficiency loss
    is the rule's shortfall on the receiver's favourite structure and agency
    loss is the further shortfall caused by the sender's choice. Under a
    quota rule the sender may pick a structure the rule serves better than
    the receiver's favourite, so agency loss can be negative.
    """

    chosen_structure: int
    receiver_value: float
    sender_value: float
    first_best_structure: int
    first_best_value: float
    regret_plain: float
    efficiency_loss: float
    agency_loss: float
    gamma: float
    gamma_regret: float

    def to_dict(self) -> dict:
        return asdict(self)


def first_best_structure(model: FiniteModel, menu: Sequence[SignalStructure]) -> int:
    if len(menu) == 0:
        raise EmptyMenu("menu is empty")
    values = np.array([first_best(model, pi) for pi in menu])
    return int(np.flatnonzero(values >= values.max() - 1e-12)[0])


def first_best_quota(model: FiniteModel, menu: Sequence[SignalStructure]) -> Quota:
    """Action marginal of myopic play on the receiver's favourite structure."""
    pi = menu[first_best_structure(model, menu)]
    actions = signal_payoffs(model, pi).argmax(axis=1)
    return Quota(np.bincount(actions, weights=pi.weights, minlength=model.n_actions))


def play(model: FiniteModel, rule, v: SenderUtility, menu: Sequence[SignalStructure],
         gamma: float = 0.5) -> GameOutcome:
    gamma = check_gamma(gamma)
    sender, receiver, _ = rule_values(model, rule, v, menu)
    chosen = choose_structure(sender, receiver)
    i_f = first_best_structure(model, menu)
    u_f = first_best(model, menu[i_f])
    value = float(receiver[chosen])
    efficiency = u_f - float(receiver[i_f])
    agency = float(receiver[i_f]) - value
    return GameOutcome(
        chosen_structure=chosen,
        receiver_value=value,
        sender_value=float(sender[chosen]),
        first_best_structure=i_f,
        first_best_value=u_f,
        regret_plain=u_f - value,
        efficiency_loss=efficiency,
        agency_loss=agency,
        gamma=gamma,
        gamma_regret=gamma * u_f - (1.0 - gamma) * value,
    )


@dataclass(frozen=True)
class SimulationResult:
    analytic: GameOutcome
    rounds: int
    seed: int
    receiver_mean: float
    receiver_se: float
    sender_mean: float
    sender_se: float

    @property
    def regret_plain(self) -> float:
        return self.analytic.first_best_value - self.receiver_mean

    def to_dict(self) -> dict:
        return {
            "analytic": self.analytic.to_dict(),
            "empirical": {
                "receiver_value": self.receiver_mean,
                "receiver_se": self.receiver_se,
                "sender_value": self.sender_mean,
                "sender_se": self.sender_se,
                "regret_plain": self.regret_plain,
            },
            "rounds": self.rounds,
            "seed": self.seed,
        }


def signal_given_state(model: FiniteModel, pi: SignalStructure) -> np.ndarray:
    """``Pr(signal j | state) = p_j mu_j(state) / prior(state)``, rows over states.

    Rows for zero-prior states are left at zero.
    """
    joint = (pi.weights[:, None] * pi.posteriors).T
    out = np.zeros_like(joint)
    live = model.prior > 0
    out[live] = joint[live] / model.prior[live, None]
    return out


def _draw(cum_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum_rows = cum_rows.copy()
    cum_rows[:, -1] = np.inf
    idx = (u[:, None] >= cum_rows).sum(axis=1)
    return np.minimum(idx, cum_rows.shape[1] - 1)


def simulate(model: FiniteModel, rule, v: SenderUtility, menu: Sequence[SignalStructure],
             rounds: int, seed: int, gamma: float = 0.5) -> SimulationResult:
    """Play the timeline ``rounds`` times on the sender's chosen structure."""
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    outcome = play(model, rule, v, menu, gamma)
    j = outcome.chosen_structure
    pi = menu[j]
    plan = rule.plan(model, pi, j)
    action_rows = plan.flow / plan.flow.sum(axis=1, keepdims=True)

    rng = make_rng(seed)
    states = _draw(np.cumsum(model.prior)[None, :], rng.uniform(size=rounds))
    if np.any(model.prior[states] <= 0):
        raise ZeroPriorState("drew a state with zero prior probability")
    signals = _draw(np.cumsum(signal_given_state(model, pi), axis=1)[states], rng.uniform(size=rounds))
    actions = _draw(np.cumsum(action_rows, axis=1)[signals], rng.uniform(size=rounds))

    receiver = model.utility[states, actions]
    sender = v.values[actions]
    scale = np.sqrt(rounds)
    return SimulationResult(
        analytic=outcome,
        rounds=int(rounds),
        seed=int(seed),
        receiver_mean=float(receiver.mean()),
        receiver_se=float(receiver.std(ddof=1) / scale) if rounds > 1 else 0.0,
        sender_mean=float(sender.mean()),
        sender_se=float(sender.std(ddof=1) / scale) if rounds > 1 else 0.0,
    )
