"""Behavior policies (epsilon-greedy, epsilon-decay, UCB and a few test agents) and
the UCB exploration bounds that guarantee collusion between symmetric UCB agents."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .bandit import TIE_TOL, History, TieBreak, ValueTable, resolve_tie
from .game import Action, PayoffParams


def _tie(value) -> TieBreak:
    return value if isinstance(value, TieBreak) else TieBreak(value)


@dataclass(frozen=True)
class BehaviorPolicy:
    """Distribution over {H, L}, stored as the probability of H."""

    p_h: float

    def __post_init__(self):
        if not (-TIE_TOL <= self.p_h <= 1.0 + TIE_TOL):
            raise ValueError(f"probability out of range: {self.p_h}")

    def probability(self, action: Action) -> float:
        return self.p_h if action is Action.H else 1.0 - self.p_h

    @property
    def degenerate(self) -> bool:
        return self.p_h == 1.0 or self.p_h == 0.0


@dataclass(frozen=True)
class EpsilonGreedyConfig:
    epsilon: float
    tie_break: TieBreak = TieBreak.RANDOM
    name = "epsilon_greedy"

    def __post_init__(self):
        object.__setattr__(self, "tie_break", _tie(self.tie_break))
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")


@dataclass(frozen=True)
class EpsilonDecayConfig:
    eta: float
    tie_break: TieBreak = TieBreak.RANDOM
    name = "epsilon_decay"

    def __post_init__(self):
        object.__setattr__(self, "tie_break", _tie(self.tie_break))
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")


@dataclass(frozen=True)
class UcbConfig:
    delta: float
    tie_break: TieBreak = TieBreak.RANDOM
    name = "ucb"

    def __post_init__(self):
        object.__setattr__(self, "tie_break", _tie(self.tie_break))
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")


@dataclass(frozen=True)
class ConstantConfig:
    """Always plays one action. Only useful as a test fixture."""

    action: Action = Action.H
    tie_break: TieBreak = TieBreak.FIRST
    name = "constant"

    def __post_init__(self):
        object.__setattr__(self, "tie_break", _tie(self.tie_break))
        a = self.action
        object.__setattr__(self, "action", Action[a] if isinstance(a, str) else Action(a))


@dataclass(frozen=True)
class ExploreFirstConfig:
    """Plays each unsampled action once (H first), then the greedy action."""

    tie_break: TieBreak = TieBreak.FIRST
    name = "explore_first"

    def __post_init__(self):
        object.__setattr__(self, "tie_break", _tie(self.tie_break))


@dataclass(frozen=True)
class WinStayLoseShiftConfig:
    """Repeats the last action if its reward reached `aspiration`, else switches.

    Depends on the order of past rewards, so it is *not* path-invariant.
    """

    aspiration: float = 0.5
    tie_break: TieBreak = TieBreak.FIRST
    name = "win_stay_lose_shift"

    def __post_init__(self):
        object.__setattr__(self, "tie_break", _tie(self.tie_break))


PolicyConfig = Union[
    EpsilonGreedyConfig,
    EpsilonDecayConfig,
    UcbConfig,
    ConstantConfig,
    ExploreFirstConfig,
    WinStayLoseShiftConfig,
]

CONFIG_TYPES = {
    cls.name: cls
    for cls in (
        EpsilonGreedyConfig,
        EpsilonDecayConfig,
        UcbConfig,
        ConstantConfig,
        ExploreFirstConfig,
        WinStayLoseShiftConfig,
    )
}


def is_path_invariant(config: PolicyConfig) -> bool:
    return not isinstance(config, WinStayLoseShiftConfig)


def is_deterministic(config: PolicyConfig) -> bool:
    """True when the behavior policy is degenerate for every history."""
    if isinstance(config, (EpsilonGreedyConfig, EpsilonDecayConfig)):
        return False
    return config.tie_break is not TieBreak.RANDOM or isinstance(config, ConstantConfig)


# --- epsilon-greedy -------------------------------------------------------


def _greedy_mix(greedy: Action, epsilon: float) -> float:
    """P(H) when the greedy action gets 1 - eps + eps/2 and the other eps/2."""
    explore = epsilon / 2.0
    return 1.0 - explore if greedy is Action.H else explore


def eg_distribution(history: History, config: EpsilonGreedyConfig) -> BehaviorPolicy:
    return behavior_distribution(config, history)


# --- epsilon-decay ---------------------------------------------------------

_SCHEDULES: dict[float, list[float]] = {}


def epsilon_schedule(eta: float, n: int) -> list[float]:
    """[eps(0), ..., eps(n-1)] built by repeated multiplication, so that
    eps(t+1) == eta * eps(t) holds exactly."""
    sched = _SCHEDULES.setdefault(float(eta), [1.0])
    while len(sched) < n:
        sched.append(sched[-1] * eta)
    return sched[:n]


def epsilon_at(config: EpsilonDecayConfig, t: int) -> float:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return epsilon_schedule(config.eta, t + 1)[t]


def ed_distribution(history: History, config: EpsilonDecayConfig, t: int | None = None) -> BehaviorPolicy:
    return behavior_distribution(config, history, t=t)


# --- UCB -------------------------------------------------------------------


def ucb_bonus(delta: float, count: int) -> float:
    return math.sqrt(2.0 * math.log(1.0 / delta) / count)


def _ucb_scores(table: ValueTable, delta: float) -> tuple[float, float]:
    out = []
    for a in Action:
        n = table.counts[a]
        out.append(table.sums[a] / n + ucb_bonus(delta, n) if n else math.inf)
    return out[0], out[1]


def ucb_score(history: History, action: Action, config: UcbConfig) -> float:
    return _ucb_scores(history.table, config.delta)[action]


def ucb_select(history: History, config: UcbConfig, rng=None) -> Action:
    s_h, s_l = _ucb_scores(history.table, config.delta)
    coin = 0.0
    if config.tie_break is TieBreak.RANDOM:
        if rng is None:
            raise ValueError("random tie-breaking needs an rng")
        coin = rng.random()
    return resolve_tie(s_h, s_l, config.tie_break, coin)


def ucb_collusion_delta_bound(gamma: float) -> float:
    """Largest delta (exclusive) for which symmetric UCB agents always learn to collude."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    return math.exp(-gamma * gamma / 2.0)


def ucb_delta_bound_detailed(params: PayoffParams, s0: int) -> float:
    """Bound on delta that keeps H's UCB above gamma after `s0` (H,H) rounds
    following the (0,1,1,0) opening; 1 once the plain mean already beats gamma."""
    beta, gamma = params.beta, params.gamma
    if s0 < 0:
        raise ValueError("s0 must be nonnegative")
    if s0 > gamma / (beta - gamma):
        return 1.0
    gap = gamma - s0 * beta / (s0 + 1)
    return math.exp(-(gap**2) * (s0 + 1) / 2.0)


# --- generic dispatch -------------------------------------------------------


def conditional_p_h(config: PolicyConfig, history: History, coin: float, t: int | None = None) -> float:
    """P(H) once the tie coin has been tossed.

    The same coin resolves ties in the greedy action and in UCB scores.
    """
    table = history.table
    if t is None:
        t = table.t
    if isinstance(config, WinStayLoseShiftConfig):
        if len(history) == 0:
            first = resolve_tie(0.0, 0.0, config.tie_break, coin)
            return 1.0 if first is Action.H else 0.0
        last_a = Action(history._actions[-1])
        stay = history._rewards[-1] >= config.aspiration
        nxt = last_a if stay else last_a.other
        return 1.0 if nxt is Action.H else 0.0
    return _table_p_h(config, table, coin, t)


def _table_p_h(config: PolicyConfig, table: ValueTable, coin: float, t: int) -> float:
    if isinstance(config, ConstantConfig):
        return 1.0 if config.action is Action.H else 0.0
    if isinstance(config, UcbConfig):
        s_h, s_l = _ucb_scores(table, config.delta)
        return 1.0 if resolve_tie(s_h, s_l, config.tie_break, coin) is Action.H else 0.0
    v_h, v_l = table.values()
    if isinstance(config, ExploreFirstConfig):
        if table.counts[0] == 0:
            return 1.0
        if table.counts[1] == 0:
            return 0.0
        return 1.0 if resolve_tie(v_h, v_l, config.tie_break, coin) is Action.H else 0.0
    greedy = resolve_tie(v_h, v_l, config.tie_break, coin)
    if isinstance(config, EpsilonGreedyConfig):
        return _greedy_mix(greedy, config.epsilon)
    if isinstance(config, EpsilonDecayConfig):
        return _greedy_mix(greedy, epsilon_schedule(config.eta, t + 1)[t])
    raise TypeError(f"unsupported policy config {config!r}")


def _marginal(cond, tie_break: TieBreak) -> BehaviorPolicy:
    # coin < 0.5 picks H on a random tie, coin >= 0.5 picks L
    if tie_break is TieBreak.RANDOM:
        return BehaviorPolicy(0.5 * (cond(0.0) + cond(0.5)))
    return BehaviorPolicy(cond(0.0))


def behavior_distribution(config: PolicyConfig, history: History, t: int | None = None) -> BehaviorPolicy:
    """Marginal action distribution, averaging over a random tie-break."""
    return _marginal(lambda c: conditional_p_h(config, history, c, t), config.tie_break)


def table_distribution(config: PolicyConfig, table: ValueTable, t: int | None = None) -> BehaviorPolicy:
    """Same as behavior_distribution, from sufficient statistics alone (path-invariant agents)."""
    if not is_path_invariant(config):
        raise TypeError(f"{config.name} is not path-invariant")
    t = table.t if t is None else t
    return _marginal(lambda c: _table_p_h(config, table, c, t), config.tie_break)
