"""Shared definitions for repeated market entry games.

Each round, N agents independently choose to enter a market of capacity c
or stay out.  Entrants receive h*(c - m) on top of the outside payoff,
where m is the realized number of entrants; outsiders receive the outside
payoff alone (fixed to zero).  Every agent carries a real-valued propensity
q, mapped to an entry probability by a probability model, and adjusts q
between rounds according to a learning rule.

Aggregate behavior is summarized by two observables over the propensity
distribution: the mean entry fraction a = E[p] and the sorting coefficient
b = E[p(1-p)], which vanishes once every agent is committed to entering or
staying out.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = [
    "DomainError",
    "ErevRothRatio",
    "GameParams",
    "LearningRule",
    "Logistic",
    "ProbabilityModel",
    "TimeScales",
    "payoff",
    "predicted_time_scales",
    "update_propensity",
]


class DomainError(ValueError):
    """A propensity left the domain of the active probability model."""


class LearningRule(enum.Enum):
    """How propensities respond to a round's payoffs.

    BASIC_REINFORCEMENT adds the realized payoff to the propensity, so
    only entrants move.  FICTITIOUS_STOCHASTIC adds the payoff entering
    would have produced, so every agent moves every round (stay-outs are
    charged for the extra entrant they would have been).
    """

    BASIC_REINFORCEMENT = "basic_reinforcement"
    FICTITIOUS_STOCHASTIC = "fictitious_stochastic"


@dataclass(frozen=True)
class GameParams:
    """Static parameters of one repeated market entry game.

    n_agents        N, number of players
    capacity        c, market capacity (integer, 0 < c <= N)
    payoff_scale    h, payoff and learning step per unit of unfilled capacity
    rounds_per_unit M, rounds per unit of model time
    rule            learning rule applied between rounds
    outside_payoff  v, payoff for staying out; fixed to zero
    """

    n_agents: int
    capacity: int
    payoff_scale: float
    rounds_per_unit: int
    rule: LearningRule
    outside_payoff: float = 0.0

    def __post_init__(self) -> None:
        if self.n_agents < 1:
            raise ValueError(f"n_agents must be positive, got {self.n_agents}")
        if not 0 < self.capacity <= self.n_agents:
            raise ValueError(
                f"capacity must satisfy 0 < c <= N, got c={self.capacity} N={self.n_agents}"
            )
        if not self.payoff_scale > 0:
            raise ValueError(f"payoff_scale must be positive, got {self.payoff_scale}")
        if self.rounds_per_unit < 1:
            raise ValueError(
                f"rounds_per_unit must be positive, got {self.rounds_per_unit}"
            )
        if self.outside_payoff != 0.0:
            raise ValueError("outside_payoff is fixed to zero in this model")
        if not isinstance(self.rule, LearningRule):
            raise TypeError(f"rule must be a LearningRule, got {self.rule!r}")

    @property
    def tau(self) -> float:
        """Duration of one round in model time units."""
        return 1.0 / self.rounds_per_unit

    @property
    def kappa(self) -> float:
        """Capacity fraction c/N, the equilibrium entry fraction."""
        return self.capacity / self.n_agents

    @property
    def r(self) -> float:
        """Learning rate constant N*h*M governing aggregate relaxation."""
        return self.n_agents * self.payoff_scale * self.rounds_per_unit


@dataclass(frozen=True)
class Logistic:
    """Sigmoid propensity-to-probability map, defined on the whole line.

    p(q) = 1 / (1 + exp(-(q - center)/scale)); its derivative
    p'(q) = p(1-p)/scale is exposed because the mean-field solver needs it.
    """

    scale: float = 1.0
    center: float = 0.0

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def prob(self, q):
        return expit((np.asarray(q, dtype=float) - self.center) / self.scale)

    def dprob(self, q):
        p = self.prob(q)
        return p * (1.0 - p) / self.scale


@dataclass(frozen=True)
class ErevRothRatio:
    """Ratio map p(q) = q / (q + baseline), defined for q >= 0 only.

    Negative propensities are a hard domain error; callers must not clamp.
    """

    baseline: float

    def __post_init__(self) -> None:
        if not self.baseline > 0:
            raise ValueError(f"baseline must be positive, got {self.baseline}")

    def prob(self, q):
        arr = np.asarray(q, dtype=float)
        if np.any(arr < 0):
            raise DomainError(
                "ratio probability model requires nonnegative propensities, "
                f"got minimum {arr.min():g}"
            )
        return arr / (arr + self.baseline)

    def dprob(self, q):
        arr = np.asarray(q, dtype=float)
        if np.any(arr < 0):
            raise DomainError(
                "ratio probability model requires nonnegative propensities, "
                f"got minimum {arr.min():g}"
            )
        return self.baseline / (arr + self.baseline) ** 2


ProbabilityModel = Logistic | ErevRothRatio


def _check_entrant_count(entered: bool, m: int, params: GameParams) -> None:
    if not 0 <= m <= params.n_agents:
        raise ValueError(f"entrant count m={m} outside 0..{params.n_agents}")
    if entered and m < 1:
        raise ValueError("entered agent implies at least one entrant, got m=0")


def payoff(entered: bool, m: int, params: GameParams) -> float:
    """Payoff to one agent given its entry decision and the round's entrant count."""
    _check_entrant_count(entered, m, params)
    if not entered:
        return params.outside_payoff
    return params.outside_payoff + params.payoff_scale * (params.capacity - m)


def update_propensity(q: float, entered: bool, m: int, params: GameParams) -> float:
    """Propensity after one round under the configured learning rule.

    Both rules move q by an integer multiple of h, so a population started
    on a lattice {q_off + k*h} stays on it.
    """
    _check_entrant_count(entered, m, params)
    h = params.payoff_scale
    gain = h * (params.capacity - m)
    if params.rule is LearningRule.BASIC_REINFORCEMENT:
        return q + gain if entered else q
    return q + gain - (0.0 if entered else h)


@dataclass(frozen=True)
class TimeScales:
    """Predicted e-folding times of the two relaxation stages.

    aggregate_learning  1/r: decay of the entry-fraction gap |a - kappa|
    sorting             2/(r*h): decay of the sorting coefficient b
    """

    aggregate_learning: float
    sorting: float


def predicted_time_scales(params: GameParams) -> TimeScales:
    r = params.r
    return TimeScales(
        aggregate_learning=1.0 / r,
        sorting=2.0 / (r * params.payoff_scale),
    )
