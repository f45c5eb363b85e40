"""Closed forms for the two-action model.

With ``u(theta, 1) = theta`` and ``u(theta, 0) = 0`` on atoms in [-1, 1], a
binary monotone partition is determined by the low-signal mass ``p0``. Its
payoffs are integrals of the quantile function,

    G(p0) = int_{p0}^1 F^{-1}(p) dp   (high signal),
    H(p0) = int_0^{p0} F^{-1}(p) dp   (low signal),

both piecewise linear with kinks at the cumulative probabilities. On
``[z0, z1]`` the high signal recommends action 1 and the low signal action 0,
so the first-best value is ``G(p0)``, and a quota ``q = Pr(a=1)`` either
under-supplies action 1 (left bias, ``q <= 1 - p0``) or over-supplies it
(right bias, ``q >= 1 - p0``):

    left:  [gamma - (1-gamma) q / (1-p0)] * G(p0)
    right: (2 gamma - 1) G(p0) - (1-gamma) (p0 - 1 + q) / p0 * H(p0)

Each piece of each objective has at most one stationary point, found in
closed form, so the worst-case errors are exact maxima over finitely many
candidates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import (
    FiniteModel,
    ModelError,
    NonFiniteEntry,
    NonSimplexPrior,
    SignalStructure,
    UninformativePrior,
)
from .transport import check_gamma

NEG_INF = float("-inf")
BISECT_WIDTH = 1e-10
# |L - R| below this is treated as an exact tie when locating the optimum
TIE_TOL = 1e-13


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class BinaryPrior:
    """Sorted payoff-difference atoms with their quantile integrals.

    Parameters
    ----------
    theta : sequence of float
        Atom locations in [-1, 1]. Equal locations are merged.
    prob : sequence of float
        Positive probabilities summing to one.
    """

    def __init__(self, theta, prob):
        theta = np.asarray(theta, dtype=float).ravel()
        prob = np.asarray(prob, dtype=float).ravel()
        if theta.size != prob.size or theta.size == 0:
            raise ModelError("theta and prob must be nonempty and equally long")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(prob))):
            raise NonFiniteEntry("binary prior has non-finite entries")
        if np.any(np.abs(theta) > 1 + 1e-12):
            raise ModelError("atoms must lie in [-1, 1]")
        if np.any(prob <= 0) or abs(prob.sum() - 1.0) > 1e-12:
            raise NonSimplexPrior("atom probabilities must be positive and sum to one")
        order = np.argsort(theta, kind="stable")
        theta, prob = theta[order], prob[order]
        keep = np.concatenate([[True], np.diff(theta) > 0])
        groups = np.cumsum(keep) - 1
        prob = np.bincount(groups, weights=prob)
        theta = theta[keep]
        if not (theta[0] < 0 < theta[-1]):
            raise UninformativePrior("prior needs atoms on both sides of zero")
        self.theta = theta
        self.prob = prob
        self.cumulative = np.concatenate([[0.0], np.cumsum(prob)])
        self.cumulative[-1] = 1.0
        self.mean = float(theta @ prob)
        # H and G at the breakpoints, from partial sums
        self._h = np.concatenate([[0.0], np.cumsum(theta * prob)])
        self._g = np.concatenate([np.cumsum((theta * prob)[::-1])[::-1], [0.0]])
        for arr in (self.theta, self.prob, self.cumulative, self._h, self._g):
            arr.setflags(write=False)

    def __repr__(self) -> str:
        return f"BinaryPrior(theta={self.theta.tolist()}, prob={self.prob.tolist()})"

    @property
    def n_atoms(self) -> int:
        return self.theta.size

    @classmethod
    def from_dict(cls, raw: dict) -> "BinaryPrior":
        return cls(raw["theta"], raw["prob"])

    def to_dict(self) -> dict:
        return {"theta": self.theta.tolist(), "prob": self.prob.tolist()}

    def to_model(self) -> FiniteModel:
        """Equivalent finite model: one state per atom, ``u = [0, theta]``."""
        utility = np.column_stack([np.zeros(self.n_atoms), self.theta])
        states = [f"theta={t:g}" for t in self.theta]
        return FiniteModel(states, ("a0", "a1"), utility, self.prob)

    def cdf(self, x: float) -> float:
        return float(self.prob[self.theta <= x].sum())

    def quantile(self, p):
        """``F^{-1}(p) = inf{theta : F(theta) >= p}``."""
        idx = np.searchsorted(self.cumulative[1:], np.asarray(p, dtype=float), side="left")
        return self.theta[np.minimum(idx, self.n_atoms - 1)]

    def H(self, z):
        """``int_0^z F^{-1}``."""
        return np.interp(z, self.cumulative, self._h)

    def G(self, z):
        """``int_z^1 F^{-1}``; equals ``mean - H(z)``."""
        return np.interp(z, self.cumulative, self._g)

    def piece(self, p: float) -> int:
        """Index of the atom whose quantile interval contains ``p``."""
        i = int(np.searchsorted(self.cumulative, p, side="right")) - 1
        return min(max(i, 0), self.n_atoms - 1)


@dataclass(frozen=True)
class BiasedError:
    value: float
    argmax_p0: float
    side: Side
    feasible: bool


def thresholds(prior: BinaryPrior) -> tuple[float, float]:
    """``(z0, z1)`` with ``z0 = inf{z: G(z) >= 0}`` and ``z1 = sup{z: H(z) <= 0}``."""
    c, h, g = prior.cumulative, prior._h, prior._g
    if prior.mean <= 0:
        z1 = 1.0
    else:
        # H is convex with H(0) = 0 < H(1): the root sits on the first piece ending above 0
        i = int(np.flatnonzero(h > 0)[0])
        z1 = float(c[i - 1] - h[i - 1] / prior.theta[i - 1])
    if prior.mean >= 0:
        z0 = 0.0
    else:
        # G is concave with G(0) < 0 = G(1): root on the last piece starting below 0
        i = int(np.flatnonzero(g[:-1] < 0)[-1])
        z0 = float(c[i] + g[i] / prior.theta[i])
    return z0, z1


def left_value(prior: BinaryPrior, q: float, gamma: float, p0) -> np.ndarray:
    """Left-biased regret of the partition with low mass ``p0``."""
    p0 = np.asarray(p0, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p0 < 1.0, q / (1.0 - p0), 0.0)
    return (gamma - (1.0 - gamma) * ratio) * prior.G(p0)


def right_value(prior: BinaryPrior, q: float, gamma: float, p0) -> np.ndarray:
    """Right-biased regret of the partition with low mass ``p0``."""
    p0 = np.asarray(p0, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p0 > 0.0, (p0 - 1.0 + q) / p0, 1.0)
    return (2.0 * gamma - 1.0) * prior.G(p0) - (1.0 - gamma) * ratio * prior.H(p0)


def _candidates(prior: BinaryPrior, lo: float, hi: float, stationary) -> np.ndarray:
    """Interval endpoints, interior kinks, and per-piece stationary points."""
    c = prior.cumulative
    kinks = c[(c > lo) & (c < hi)]
    edges = np.concatenate([[lo], kinks, [hi]])
    points = [edges]
    for a, b in zip(edges[:-1], edges[1:]):
        i = prior.piece(0.5 * (a + b))
        p = stationary(i)
        if p is not None and a < p < b:
            points.append([p])
    return np.concatenate(points)


def _maximise(prior, q, gamma, side: Side, lo, hi, value_fn, stationary) -> BiasedError:
    if lo > hi:
        return BiasedError(NEG_INF, math.nan, side, False)
    cand = _candidates(prior, lo, hi, stationary)
    vals = value_fn(prior, q, gamma, cand)
    best = int(np.argmax(vals))
    return BiasedError(float(vals[best]), float(cand[best]), side, True)


def left_error(prior: BinaryPrior, q: float, gamma: float) -> BiasedError:
    """Worst left-biased regret of quota ``q`` over partitions in ``[z0, min(z1, 1-q)]``."""
    gamma = check_gamma(gamma)
    z0, z1 = thresholds(prior)
    lo, hi = z0, min(z1, 1.0 - q)

    def stationary(i):
        # on piece i, G = b + theta x with x = 1 - p0; f'(x) = gamma theta + (1-gamma) q b / x^2
        theta = prior.theta[i]
        c_prev = prior.cumulative[i]
        b = prior._g[i] - theta * (1.0 - c_prev)
        if gamma * theta == 0.0:
            return None
        x2 = -(1.0 - gamma) * q * b / (gamma * theta)
        return 1.0 - math.sqrt(x2) if x2 > 0 else None

    return _maximise(prior, q, gamma, Side.LEFT, lo, hi, left_value, stationary)


def right_error(prior: BinaryPrior, q: float, gamma: float) -> BiasedError:
    """Worst right-biased regret of quota ``q`` over partitions in ``[max(z0, 1-q), z1]``."""
    gamma = check_gamma(gamma)
    z0, z1 = thresholds(prior)
    lo, hi = max(z0, 1.0 - q), z1

    def stationary(i):
        # on piece i, H = e + theta p0; f'(p0) = -gamma theta - (1-gamma)(1-q) e / p0^2
        theta = prior.theta[i]
        e = prior._h[i] - theta * prior.cumulative[i]
        if gamma * theta == 0.0:
            return None
        p2 = -(1.0 - gamma) * (1.0 - q) * e / (gamma * theta)
        return math.sqrt(p2) if p2 > 0 else None

    return _maximise(prior, q, gamma, Side.RIGHT, lo, hi, right_value, stationary)


def worst_case_regret(prior: BinaryPrior, q: float, gamma: float) -> float:
    """``max(L(q), R(q))``: the quota's worst case over all signal structures."""
    return max(left_error(prior, q, gamma).value, right_error(prior, q, gamma).value)


def _gap(prior, q, gamma) -> float:
    return left_error(prior, q, gamma).value - right_error(prior, q, gamma).value


def _boundary(prior, gamma, above) -> float:
    """Bisect for the edge of ``{q : gap(q) > TIE_TOL}`` (or ``>= -TIE_TOL``)."""
    lo, hi = 0.0, 1.0
    while hi - lo > BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        d = _gap(prior, mid, gamma)
        if (d > TIE_TOL) if above else (d >= -TIE_TOL):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def optimal_quota(prior: BinaryPrior, gamma: float) -> tuple[float, float]:
    """Min-max-regret quota ``q* = Pr(a=1)`` and its worst-case regret.

    For ``gamma = 0`` the receiver simply follows the prior-optimal action
    (action 0 on a tie). Otherwise the left error falls and the right error
    rises in ``q``, and ``q*`` equalises them; when they coincide on an
    interval (prior mean exactly zero) the interval midpoint is returned.
    """
    gamma = check_gamma(gamma)
    if gamma == 0.0:
        q_star = 1.0 if prior.mean > 0 else 0.0
    else:
        q_lo = _boundary(prior, gamma, above=True)
        q_hi = _boundary(prior, gamma, above=False)
        q_star = 0.5 * (q_lo + q_hi)
    return q_star, worst_case_regret(prior, q_star, gamma)


def partition_from_p0(prior: BinaryPrior, p0: float) -> SignalStructure:
    """Binary monotone partition sending the low signal on the lowest ``p0`` quantile mass.

    The atom straddling ``p0`` is split proportionally. Posteriors are over
    the prior's atoms; ``p0`` in ``{0, 1}`` gives the single-signal structure.
    """
    p0 = float(min(max(p0, 0.0), 1.0))
    c = prior.cumulative
    low = np.clip(np.minimum(c[1:], p0) - c[:-1], 0.0, None)
    high = prior.prob - low
    high[high < 0] = 0.0
    rows, weights = [], []
    for part in (low, high):
        w = part.sum()
        if w > 1e-15:
            rows.append(part / w)
            weights.append(w)
    weights = np.asarray(weights)
    return SignalStructure(np.array(rows), weights / weights.sum())


def worst_partition(prior: BinaryPrior, q: float, gamma: float):
    """Worst-case binary monotone partition for quota ``q``.

    Returns ``(structure, side, regret)``; on a tie the left side is reported.
    """
    left = left_error(prior, q, gamma)
    right = right_error(prior, q, gamma)
    best = left if left.value >= right.value else right
    return partition_from_p0(prior, best.argmax_p0), best.side, best.value


def classify(prior: BinaryPrior, q: float, p0: float) -> Side:
    """Bias side of partition ``p0`` under quota ``q`` (left when ``q <= 1 - p0``)."""
    return Side.LEFT if q <= 1.0 - p0 else Side.RIGHT


def partition_regret(prior: BinaryPrior, q: float, gamma: float, p0: float) -> float:
    """Closed-form regret of a single partition with ``p0`` in ``[z0, z1]``."""
    if classify(prior, q, p0) is Side.LEFT:
        return float(left_value(prior, q, gamma, p0))
    return float(right_value(prior, q, gamma, p0))


def regret_curve(prior: BinaryPrior, gamma: float, qs) -> np.ndarray:
    """Rows ``(q, L, R, max(L, R))`` for each quota in ``qs``."""
    rows = []
    for q in qs:
        left = left_error(prior, q, gamma).value
        right = right_error(prior, q, gamma).value
        rows.append((q, left, right, max(left, right)))
    return np.array(rows)


__all__ = [
    "BinaryPrior", "BiasedError", "Side", "thresholds", "left_value", "right_value",
    "left_error", "right_error", "worst_case_regret", "optimal_quota",
    "partition_from_p0", "worst_partition", "classify", "partition_regret", "regret_curve",
]
