"""Outcome-count state vector, state-based value estimates and the exact
transition kernel of the two-agent learning chain."""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass

from .bandit import TIE_TOL, History, ValueTable, value_estimate
from .game import OUTCOMES, Action, Outcome, PayoffParams, outcome_index, reward
from .policies import BehaviorPolicy, behavior_distribution, is_path_invariant, table_distribution

MAX_EXACT_HORIZON = 30


class UndefinedValueError(ZeroDivisionError):
    """State-based value requested for an action the player never sampled."""


class UnsupportedAlgorithmError(TypeError):
    pass


@dataclass(frozen=True, order=True)
class StateVector:
    """Counts of (H,H), (H,L), (L,H), (L,L) outcomes so far."""

    counts: tuple = (0, 0, 0, 0)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != 4 or min(counts) < 0:
            raise ValueError(f"state needs 4 nonnegative counts, got {self.counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def round(self) -> int:
        return sum(self.counts)

    def __getitem__(self, k: int) -> int:
        return self.counts[k]

    def __iter__(self):
        return iter(self.counts)

    @classmethod
    def from_outcomes(cls, outcomes) -> "StateVector":
        s = cls()
        for o in outcomes:
            s = state_update(s, o)
        return s


def state_update(state: StateVector, outcome: Outcome) -> StateVector:
    c = list(state.counts)
    c[outcome_index(outcome)] += 1
    return StateVector(tuple(c))


def _player_counts(state: StateVector, player: int) -> tuple[int, int, int, int]:
    """(own H with opponent H, own H with opponent L, own L with opponent H, own L with opponent L)."""
    s0, s1, s2, s3 = state.counts
    if player == 0:
        return s0, s1, s2, s3
    if player == 1:
        return s0, s2, s1, s3
    raise ValueError(f"player must be 0 or 1, got {player}")


def state_value(player: int, action: Action, state: StateVector, params: PayoffParams) -> float:
    hh, hl, lh, ll = _player_counts(state, player)
    if action is Action.H:
        if hh + hl == 0:
            raise UndefinedValueError(f"player {player} never played H in state {state.counts}")
        return params.beta * hh / (hh + hl)
    if lh + ll == 0:
        raise UndefinedValueError(f"player {player} never played L in state {state.counts}")
    return (lh + params.gamma * ll) / (lh + ll)


def table_from_state(state: StateVector, player: int, params: PayoffParams) -> ValueTable:
    """Sufficient statistics a player would hold after reaching `state`."""
    hh, hl, lh, ll = _player_counts(state, player)
    return ValueTable(sums=[params.beta * hh, lh + params.gamma * ll], counts=[hh + hl, lh + ll])


def state_history_consistency(history: History, state: StateVector, player: int, params: PayoffParams,
                              tol: float = 1e-10) -> bool:
    for a in Action:
        if history.count(a) == 0:
            continue
        try:
            v_state = state_value(player, a, state, params)
        except UndefinedValueError:
            return False
        if abs(v_state - value_estimate(history, a)) > tol:
            return False
    return True


@dataclass(frozen=True)
class TransitionDistribution:
    source: StateVector
    probs: tuple  # probability of incrementing count k, k = 0..3

    def successors(self):
        for k, p in enumerate(self.probs):
            if p > 0.0:
                yield state_update(self.source, OUTCOMES[k]), p


def transition_distribution(state: StateVector, policy0: BehaviorPolicy, policy1: BehaviorPolicy) -> TransitionDistribution:
    p0, p1 = policy0.p_h, policy1.p_h
    probs = (p0 * p1, p0 * (1.0 - p1), (1.0 - p0) * p1, (1.0 - p0) * (1.0 - p1))
    return TransitionDistribution(state, probs)


def _config(spec):
    return getattr(spec, "config", spec)


def collusive_state(state: StateVector, params: PayoffParams) -> bool:
    """Both players value H strictly above L (unsampled actions count as 0)."""
    for player in (0, 1):
        v_h, v_l = table_from_state(state, player, params).values()
        if not v_h - v_l > TIE_TOL:
            return False
    return True


def exact_terminal_distribution(params: PayoffParams, agent_specs, horizon: int) -> dict:
    """Exact distribution of the state vector after `horizon` rounds."""
    if not 0 <= horizon <= MAX_EXACT_HORIZON:
        raise ValueError(f"exact propagation supports horizons 0..{MAX_EXACT_HORIZON}, got {horizon}")
    configs = [_config(s) for s in agent_specs]
    for cfg in configs:
        if not is_path_invariant(cfg):
            raise UnsupportedAlgorithmError(f"{cfg.name} is not path-invariant; state is not Markov")
    dist = {StateVector(): 1.0}
    for t in range(horizon):
        nxt: dict = defaultdict(float)
        for state, p in dist.items():
            pol = [table_distribution(cfg, table_from_state(state, i, params), t) for i, cfg in enumerate(configs)]
            for succ, q in transition_distribution(state, pol[0], pol[1]).successors():
                nxt[succ] += p * q
        dist = dict(nxt)
    return dist


def exact_collusion_split(params: PayoffParams, agent_specs, horizon: int) -> tuple[float, float]:
    """(P(collusive ending), P(non-collusive ending))."""
    yes = no = 0.0
    for state, p in exact_terminal_distribution(params, agent_specs, horizon).items():
        if collusive_state(state, params):
            yes += p
        else:
            no += p
    return yes, no


def exact_collusion_probability(params: PayoffParams, agent_specs, horizon: int) -> float:
    return exact_collusion_split(params, agent_specs, horizon)[0]


def markov_property_violations(params: PayoffParams, agent_specs, depth: int, tol: float = 1e-12) -> list:
    """Enumerate every outcome path up to `depth` rounds and report pairs of paths
    that reach the same state but give some player different behavior policies."""
    configs = [_config(s) for s in agent_specs]
    seen: dict = {}
    violations = []
    for n in range(depth + 1):
        for path in itertools.product(OUTCOMES, repeat=n):
            hists = [History(), History()]
            for o in path:
                r = reward(params, o)
                hists[0].record(o.a0, r[0])
                hists[1].record(o.a1, r[1])
            pols = tuple(behavior_distribution(cfg, h).p_h for cfg, h in zip(configs, hists))
            state = StateVector.from_outcomes(path)
            if state not in seen:
                seen[state] = (path, pols)
                continue
            ref_path, ref = seen[state]
            if any(abs(a - b) > tol for a, b in zip(pols, ref)):
                violations.append((state, ref_path, path))
    return violations
