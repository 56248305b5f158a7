"""Agent-side bookkeeping: histories, empirical value estimates and the target policy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .game import Action

# Value estimates (or UCB scores) closer than this are treated as tied.
TIE_TOL = 1e-12


class TieBreak(str, Enum):
    FIRST = "first"
    LAST = "last"
    RANDOM = "random"

    @property
    def code(self) -> int:
        return {"first": 0, "last": 1, "random": 2}[self.value]


@dataclass
class ValueTable:
    """Running per-action reward sums and play counts."""

    sums: list = field(default_factory=lambda: [0.0, 0.0])
    counts: list = field(default_factory=lambda: [0, 0])

    def update(self, action: Action, reward: float) -> None:
        self.sums[action] += reward
        self.counts[action] += 1

    def value(self, action: Action) -> float:
        n = self.counts[action]
        return self.sums[action] / n if n else 0.0

    def values(self) -> tuple[float, float]:
        return self.value(Action.H), self.value(Action.L)

    @property
    def t(self) -> int:
        return self.counts[0] + self.counts[1]


class History:
    """Everything one agent has seen: which action it played each round and what it earned."""

    def __init__(self, actions=(), rewards=()):
        self._actions: list[int] = []
        self._rewards: list[float] = []
        self.table = ValueTable()
        if len(actions) != len(rewards):
            raise ValueError("actions and rewards must have equal length")
        for a, r in zip(actions, rewards):
            self.record(Action(a), r)

    @classmethod
    def from_pairs(cls, pairs) -> "History":
        pairs = list(pairs)
        return cls([Action(a) for a, _ in pairs], [r for _, r in pairs])

    def record(self, action: Action, reward: float) -> "History":
        if not 0.0 <= reward <= 1.0:
            raise ValueError(f"reward must lie in [0, 1], got {reward}")
        self._actions.append(int(action))
        self._rewards.append(float(reward))
        self.table.update(action, reward)
        return self

    def __len__(self) -> int:
        return len(self._actions)

    @property
    def rewards(self) -> np.ndarray:
        return np.array(self._rewards, dtype=float)

    @property
    def actions(self) -> np.ndarray:
        return np.array(self._actions, dtype=np.int8)

    def action_play(self, action: Action) -> np.ndarray:
        """Binary vector, 1 in rounds where `action` was played."""
        return (self.actions == int(action)).astype(float)

    def count(self, action: Action) -> int:
        return self.table.counts[action]

    def reward_sum(self, action: Action) -> float:
        """Exactly rounded sum of rewards earned with `action` (order independent)."""
        return math.fsum(r for a, r in zip(self._actions, self._rewards) if a == action)

    def copy(self) -> "History":
        return History(self._actions, self._rewards)

    def __iter__(self):
        return iter(zip((Action(a) for a in self._actions), self._rewards))

    def __repr__(self) -> str:
        body = ", ".join(f"({Action(a).name},{r:g})" for a, r in zip(self._actions, self._rewards))
        return f"History([{body}])"


def record(history: History, action: Action, reward: float) -> History:
    return history.record(action, reward)


def value_estimate(history: History, action: Action) -> float:
    """Mean reward over rounds where `action` was played; 0 if it never was.

    Uses an exactly rounded sum, so any reordering of the rounds gives the
    same float.
    """
    n = history.count(action)
    if n == 0:
        return 0.0
    return history.reward_sum(action) / n


def resolve_tie(v_h: float, v_l: float, tie_break: TieBreak, coin: float) -> Action:
    """argmax over (H, L); `coin` in [0, 1) decides random tie-breaks."""
    if v_h == v_l or abs(v_h - v_l) <= TIE_TOL:
        if tie_break is TieBreak.FIRST:
            return Action.H
        if tie_break is TieBreak.LAST:
            return Action.L
        return Action.H if coin < 0.5 else Action.L
    return Action.H if v_h > v_l else Action.L


def target_policy(history: History, tie_break: TieBreak = TieBreak.FIRST, rng=None) -> Action:
    """Greedy action under the current value estimates."""
    v_h, v_l = history.table.values()
    coin = 0.0
    if tie_break is TieBreak.RANDOM:
        if rng is None:
            raise ValueError("random tie-breaking needs an rng")
        coin = rng.random()
    return resolve_tie(v_h, v_l, tie_break, coin)


def path_equivalent(h0: History, h1: History, tol: float = TIE_TOL) -> bool:
    """Same per-action play counts and reward sums."""
    for a in Action:
        if h0.count(a) != h1.count(a):
            return False
        if abs(h0.reward_sum(a) - h1.reward_sum(a)) > tol:
            return False
    return True
