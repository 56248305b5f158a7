"""Stage game: actions, joint outcomes and the normalized Prisoner's Dilemma payoffs."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple


class Action(IntEnum):
    """H is the collusive (high price) action, L the competitive one."""

    H = 0
    L = 1

    @property
    def other(self) -> "Action":
        return Action.L if self is Action.H else Action.H


class Outcome(NamedTuple):
    a0: Action
    a1: Action

    def __str__(self) -> str:
        return f"({self.a0.name},{self.a1.name})"

    @classmethod
    def parse(cls, text: str) -> "Outcome":
        """Accept "HL", "(H,L)" or "H,L"."""
        letters = [c for c in text.upper() if c in "HL"]
        if len(letters) != 2:
            raise ValueError(f"cannot parse outcome {text!r}")
        return cls(Action[letters[0]], Action[letters[1]])


OUTCOMES: tuple[Outcome, ...] = (
    Outcome(Action.H, Action.H),
    Outcome(Action.H, Action.L),
    Outcome(Action.L, Action.H),
    Outcome(Action.L, Action.L),
)


@dataclass(frozen=True)
class PayoffParams:
    """Normalized payoffs: (H,H) pays beta each, (L,L) pays gamma each,
    the lone defector gets 1 and the lone cooperator 0."""

    beta: float
    gamma: float

    def __post_init__(self):
        beta, gamma = float(self.beta), float(self.gamma)
        if not (1.0 > beta > gamma > 0.0):
            raise ValueError(
                f"invalid payoffs: requires 1 > beta > gamma > 0 (got beta={beta}, gamma={gamma})"
            )
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)

    def reward_table(self) -> tuple[tuple[float, float], ...]:
        """Reward pairs indexed by outcome index."""
        return ((self.beta, self.beta), (0.0, 1.0), (1.0, 0.0), (self.gamma, self.gamma))


def outcome_index(outcome: Outcome) -> int:
    """(H,H)->0, (H,L)->1, (L,H)->2, (L,L)->3."""
    return 2 * int(outcome[0]) + int(outcome[1])


def outcome_from_index(k: int) -> Outcome:
    if not 0 <= k < 4:
        raise ValueError(f"outcome index must be in 0..3, got {k}")
    return OUTCOMES[k]


def reward(params: PayoffParams, outcome: Outcome) -> tuple[float, float]:
    return params.reward_table()[outcome_index(outcome)]
