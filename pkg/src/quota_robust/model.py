"""Finite receiver-commitment persuasion models.

Holds the immutable domain types (model, posterior, signal structure, quota,
sender utility), their validation, the canonical signal structures, the
reduction of a two-action model to payoff-difference atoms on [-1, 1], and
JSON ingestion for model and signal-structure files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

SIMPLEX_TOL = 1e-12
BAYES_TOL = 1e-10


class ModelError(ValueError):
    """Base class for invalid model input."""


class NonSimplexPrior(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class NonFiniteEntry(ModelError):
    pass


class NotBinaryAction(ModelError):
    pass


class NotBayesPlausible(ModelError):
    pass


class UninformativePrior(ModelError):
    """All payoff differences share one sign, so information has no value."""


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _check_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntry(f"{name} contains a non-finite entry")


def _check_simplex(arr: np.ndarray, name: str, tol: float = SIMPLEX_TOL) -> None:
    _check_finite(arr, name)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatch(f"{name} must be a nonempty vector")
    if np.any(arr < 0) or abs(arr.sum() - 1.0) > tol:
        raise NonSimplexPrior(f"{name} is not a probability vector (sum={arr.sum()!r})")


@dataclass(frozen=True, eq=False)
class FiniteModel:
    """States, actions, receiver utility ``u[state, action]`` and prior."""

    states: tuple[str, ...]
    actions: tuple[str, ...]
    utility: np.ndarray
    prior: np.ndarray

    def __post_init__(self):
        utility = _frozen(self.utility)
        prior = _frozen(self.prior)
        object.__setattr__(self, "utility", utility)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        object.__setattr__(self, "actions", tuple(str(a) for a in self.actions))
        m, k = len(self.states), len(self.actions)
        if m < 2 or k < 2:
            raise DimensionMismatch("need at least two states and two actions")
        if utility.shape != (m, k):
            raise DimensionMismatch(f"utility has shape {utility.shape}, expected {(m, k)}")
        if prior.shape != (m,):
            raise DimensionMismatch(f"prior has length {prior.size}, expected {m}")
        _check_finite(utility, "utility")
        _check_simplex(prior, "prior")

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def utility_range(self) -> float:
        """Width max(u) - min(u); scales every Lipschitz-type tolerance."""
        return float(self.utility.max() - self.utility.min())

    def payoffs(self, beliefs: np.ndarray) -> np.ndarray:
        """Expected payoff of each action under each belief row."""
        return np.asarray(beliefs, dtype=float) @ self.utility


@dataclass(frozen=True, eq=False)
class Posterior:
    belief: np.ndarray

    def __post_init__(self):
        belief = _frozen(self.belief)
        _check_simplex(belief, "posterior")
        object.__setattr__(self, "belief", belief)


@dataclass(frozen=True, eq=False)
class SignalStructure:
    """Finite distribution over posterior beliefs.

    ``posteriors`` is an ``n x m`` array (one belief per row) and ``weights``
    the probability of each signal. Bayes plausibility against a particular
    prior is checked by :func:`check_bayes_plausible`, not here, because the
    same object is reused across models that share a state space.
    """

    posteriors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        post = _frozen(np.atleast_2d(np.asarray(self.posteriors, dtype=float)))
        weights = _frozen(self.weights)
        if post.ndim != 2 or weights.ndim != 1 or post.shape[0] != weights.size:
            raise DimensionMismatch(
                f"{post.shape[0]} posteriors but {weights.size} weights")
        _check_simplex(weights, "weights")
        if np.any(weights <= 0):
            raise NonSimplexPrior("signal weights must be strictly positive")
        for row in post:
            _check_simplex(row, "posterior")
        object.__setattr__(self, "posteriors", post)
        object.__setattr__(self, "weights", weights)

    @property
    def n_signals(self) -> int:
        return self.weights.size

    @property
    def n_states(self) -> int:
        return self.posteriors.shape[1]

    def barycenter(self) -> np.ndarray:
        return self.weights @ self.posteriors

    def to_dict(self) -> dict:
        return {"posteriors": self.posteriors.tolist(), "weights": self.weights.tolist()}


@dataclass(frozen=True, eq=False)
class Quota:
    """Marginal distribution over actions."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        _check_simplex(probs, "quota")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def binary(cls, q1: float) -> "Quota":
        """Two-action quota with ``Pr(a=1) = q1``."""
        q1 = float(min(max(q1, 0.0), 1.0))
        return cls([1.0 - q1, q1])


@dataclass(frozen=True, eq=False)
class SenderUtility:
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        _check_finite(values, "sender utility")
        if values.ndim != 1:
            raise DimensionMismatch("sender utility must be a vector")
        object.__setattr__(self, "values", values)


def validate_model(raw: Any) -> FiniteModel:
    """Build a :class:`FiniteModel` from a mapping of plain values.

    Raises the matching :class:`ModelError` subclass, with a message naming the
    offending key, on malformed input.
    """
    if not isinstance(raw, dict):
        raise DimensionMismatch("model must be a JSON object")
    for key in ("states", "actions", "utility", "prior"):
        if key not in raw:
            raise DimensionMismatch(f"missing key {key!r}")
    try:
        utility = np.array(raw["utility"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"'utility' is not a rectangular numeric array: {exc}") from None
    try:
        prior = np.array(raw["prior"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"'prior' is not a numeric array: {exc}") from None
    if utility.ndim != 2:
        raise DimensionMismatch("'utility' must be a 2-d array (rows = states)")
    return FiniteModel(tuple(raw["states"]), tuple(raw["actions"]), utility, prior)


def check_bayes_plausible(model: FiniteModel, pi: SignalStructure, tol: float = BAYES_TOL) -> None:
    if pi.n_states != model.n_states:
        raise DimensionMismatch(
            f"structure has {pi.n_states} states, model has {model.n_states}")
    gap = np.abs(pi.barycenter() - model.prior).max()
    if gap > tol:
        raise NotBayesPlausible(f"barycenter differs from prior by {gap:.3g}")


def posterior_payoff(model: FiniteModel, mu, a: int) -> float:
    belief = mu.belief if isinstance(mu, Posterior) else np.asarray(mu, dtype=float)
    return float(belief @ model.utility[:, a])


def myopic_action(model: FiniteModel, mu) -> int:
    """Receiver-optimal action at belief ``mu``; ties go to the lowest index."""
    belief = mu.belief if isinstance(mu, Posterior) else np.asarray(mu, dtype=float)
    return int(np.argmax(belief @ model.utility))


def full_info_value(model: FiniteModel) -> float:
    return float(model.prior @ model.utility.max(axis=1))


def no_info(model: FiniteModel) -> SignalStructure:
    return SignalStructure(model.prior[None, :], [1.0])


def full_revelation(model: FiniteModel) -> SignalStructure:
    support = np.flatnonzero(model.prior > 0)
    return SignalStructure(np.eye(model.n_states)[support], model.prior[support])


class BinaryReduction(NamedTuple):
    """Result of :func:`reduce_binary`.

    Receiver payoffs map back as ``u(theta, a) = scale * a * atom + baseline``
    where ``baseline`` has prior mean ``offset``. A gamma-regret computed on
    the atoms therefore maps back as ``scale * r + (2 * gamma - 1) * offset``.
    """

    prior: "BinaryPrior"
    scale: float
    offset: float
    atom_of_state: np.ndarray

    def model_regret(self, regret: float, gamma: float) -> float:
        return self.scale * regret + (2.0 * gamma - 1.0) * self.offset


def reduce_binary(model: FiniteModel, merge_tol: float = 1e-12) -> BinaryReduction:
    """Map a two-action model to sorted payoff-difference atoms on [-1, 1].

    States with zero prior weight are dropped (``atom_of_state`` is -1 for
    them); states whose scaled differences agree within ``merge_tol`` share
    one atom.
    """
    from .binary import BinaryPrior

    if model.n_actions != 2:
        raise NotBinaryAction(f"model has {model.n_actions} actions")
    delta = model.utility[:, 1] - model.utility[:, 0]
    live = model.prior > 0
    scale = float(np.abs(delta[live]).max()) if live.any() else 0.0
    if scale == 0.0:
        raise UninformativePrior("actions are payoff-equivalent on the prior support")
    scaled = delta / scale
    offset = float(model.prior @ model.utility[:, 0])

    order = np.argsort(scaled, kind="stable")
    thetas: list[float] = []
    probs: list[float] = []
    atom_of_state = np.full(model.n_states, -1, dtype=int)
    for s in order:
        if not live[s]:
            continue
        if thetas and abs(scaled[s] - thetas[-1]) <= merge_tol:
            probs[-1] += model.prior[s]
        else:
            thetas.append(float(scaled[s]))
            probs.append(float(model.prior[s]))
        atom_of_state[s] = len(thetas) - 1
    atom_of_state.setflags(write=False)
    return BinaryReduction(BinaryPrior(thetas, probs), scale, offset, atom_of_state)


# -- file ingestion ---------------------------------------------------------

def _reject_constant(token: str):
    raise NonFiniteEntry(f"non-finite literal {token} is not accepted")


def loads_strict(text: str) -> Any:
    """``json.loads`` that refuses NaN/Infinity literals."""
    return json.loads(text, parse_constant=_reject_constant)


def load_json(path: str | Path) -> Any:
    return loads_strict(Path(path).read_text(encoding="utf-8"))


def load_model(path: str | Path) -> FiniteModel:
    return validate_model(load_json(path))


def structure_from_dict(raw: Any) -> SignalStructure:
    if not isinstance(raw, dict) or "posteriors" not in raw or "weights" not in raw:
        raise DimensionMismatch("signal structure needs keys 'posteriors' and 'weights'")
    try:
        return SignalStructure(np.array(raw["posteriors"], dtype=float),
                               np.array(raw["weights"], dtype=float))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise DimensionMismatch(f"malformed signal structure: {exc}") from None


def load_structure(path: str | Path) -> SignalStructure:
    return structure_from_dict(load_json(path))


def model_to_dict(model: FiniteModel) -> dict:
    return {
        "states": list(model.states),
        "actions": list(model.actions),
        "utility": model.utility.tolist(),
        "prior": model.prior.tolist(),
    }


def structure_key(pi: SignalStructure, digits: int = 12) -> tuple:
    """Order-free hashable summary used to de-duplicate structures."""
    rows = [tuple(np.round(p, digits) + 0.0) + (round(float(w), digits) + 0.0,)
            for p, w in zip(pi.posteriors, pi.weights)]
    return tuple(sorted(rows))


__all__ = [
    "FiniteModel", "Posterior", "SignalStructure", "Quota", "SenderUtility",
    "BinaryReduction", "ModelError", "NonSimplexPrior", "DimensionMismatch",
    "NonFiniteEntry", "NotBinaryAction", "NotBayesPlausible", "UninformativePrior",
    "validate_model", "check_bayes_plausible", "posterior_payoff", "myopic_action",
    "full_info_value", "no_info", "full_revelation", "reduce_binary",
    "load_model", "load_structure", "load_json", "loads_strict",
    "structure_from_dict", "model_to_dict", "structure_key",
]
