"""Finite-horizon iterated games between two bandit agents.

Two backends play identical games:

* ``reference`` -- one :class:`Agent` object per player, each holding only its
  own :class:`History`; the loop hands an agent nothing but its own reward.
* ``fast`` -- the compiled loop in ``_kernel``. Default whenever the agent
  types are supported there.

Each agent owns a PCG64 stream seeded by its :class:`AgentSpec` and draws two
uniforms per round (tie coin, action coin) whether it needs them or not, plus
one final pair used for the end-of-game regime. That fixed consumption is what
keeps the two backends bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import _kernel
from .bandit import TIE_TOL, History, TieBreak, resolve_tie
from .game import Action, Outcome, PayoffParams, reward
from .markov import StateVector
from .policies import (
    CONFIG_TYPES,
    ConstantConfig,
    EpsilonDecayConfig,
    EpsilonGreedyConfig,
    ExploreFirstConfig,
    PolicyConfig,
    UcbConfig,
    conditional_p_h,
)

RECORD_EVERY_ROUND = "every_round"
RECORD_ENDPOINTS = "endpoints"


def derive_seed(*keys: int) -> int:
    """Mix nonnegative integer keys into one 64-bit seed (numpy SeedSequence hash)."""
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


class Regime(NamedTuple):
    """Pair of target policies (player 0, player 1)."""

    pi0: Action
    pi1: Action

    def __str__(self) -> str:
        return self.pi0.name + self.pi1.name

    @classmethod
    def parse(cls, text: str) -> "Regime":
        o = Outcome.parse(text)
        return cls(o.a0, o.a1)


HH = Regime(Action.H, Action.H)


@dataclass(frozen=True)
class AgentSpec:
    config: PolicyConfig
    seed: int = 0

    @property
    def algorithm(self) -> str:
        return self.config.name

    def to_mapping(self) -> dict:
        out = {"algorithm": self.algorithm}
        cfg = self.config
        if isinstance(cfg, EpsilonGreedyConfig):
            out["epsilon"] = cfg.epsilon
        elif isinstance(cfg, EpsilonDecayConfig):
            out["eta"] = cfg.eta
        elif isinstance(cfg, UcbConfig):
            out["delta"] = cfg.delta
        elif isinstance(cfg, ConstantConfig):
            out["action"] = cfg.action.name
        elif hasattr(cfg, "aspiration"):
            out["aspiration"] = cfg.aspiration
        out["tie_break"] = cfg.tie_break.value
        out["seed"] = int(self.seed)
        return out

    @classmethod
    def from_mapping(cls, m: dict) -> "AgentSpec":
        m = dict(m)
        alg = m.pop("algorithm")
        seed = int(m.pop("seed", 0))
        if alg not in CONFIG_TYPES:
            raise ValueError(f"unknown algorithm {alg!r}; choose from {sorted(CONFIG_TYPES)}")
        return cls(CONFIG_TYPES[alg](**m), seed)


@dataclass(frozen=True)
class GameConfig:
    params: PayoffParams
    agents: tuple
    horizon: int = 10_000
    record: str = RECORD_EVERY_ROUND

    def __post_init__(self):
        if len(self.agents) != 2:
            raise ValueError("exactly two agents")
        object.__setattr__(self, "agents", tuple(self.agents))
        if int(self.horizon) < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.record not in (RECORD_EVERY_ROUND, RECORD_ENDPOINTS):
            raise ValueError(f"unknown record granularity {self.record!r}")

    @classmethod
    def build(cls, params: PayoffParams, config0: PolicyConfig, config1: PolicyConfig | None = None,
              horizon: int = 10_000, master_seed: int = 0, record: str = RECORD_EVERY_ROUND) -> "GameConfig":
        """Agent seeds are derive_seed(master_seed, agent_index)."""
        config1 = config0 if config1 is None else config1
        agents = (AgentSpec(config0, derive_seed(master_seed, 0)), AgentSpec(config1, derive_seed(master_seed, 1)))
        return cls(params, agents, horizon, record)

    def to_mapping(self) -> dict:
        return {
            "beta": self.params.beta,
            "gamma": self.params.gamma,
            "horizon": int(self.horizon),
            "record": self.record,
            "agents": [a.to_mapping() for a in self.agents],
        }

    @classmethod
    def from_mapping(cls, m: dict) -> "GameConfig":
        return cls(
            PayoffParams(m["beta"], m["gamma"]),
            tuple(AgentSpec.from_mapping(a) for a in m["agents"]),
            int(m["horizon"]),
            m.get("record", RECORD_EVERY_ROUND),
        )


@dataclass
class Trajectory:
    """One played game.

    Per-round arrays (``None`` under endpoint recording):
      actions[t, i]    action of player i in round t (0=H, 1=L)
      values[t, i, a]  player i's estimate of action a *after* round t
      regimes[t, i]    player i's target policy *when choosing* in round t
    """

    config: GameConfig
    final_state: StateVector
    final_values: np.ndarray
    final_regime: Regime
    last_non_hh: int
    actions: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    regimes: Optional[np.ndarray] = None
    forced: tuple = field(default_factory=tuple)

    @property
    def horizon(self) -> int:
        return self.config.horizon

    @property
    def outcomes(self) -> list[Outcome]:
        self._need_rounds()
        return [Outcome(Action(a0), Action(a1)) for a0, a1 in self.actions]

    @property
    def rewards(self) -> np.ndarray:
        self._need_rounds()
        table = np.array(self.config.params.reward_table())
        return table[2 * self.actions[:, 0].astype(int) + self.actions[:, 1].astype(int)]

    def regime_list(self) -> list[Regime]:
        self._need_rounds()
        return [Regime(Action(g0), Action(g1)) for g0, g1 in self.regimes]

    def states(self) -> np.ndarray:
        """Cumulative state vector after each round, shape (horizon, 4)."""
        self._need_rounds()
        k = 2 * self.actions[:, 0].astype(int) + self.actions[:, 1].astype(int)
        return np.cumsum(np.eye(4, dtype=np.int64)[k], axis=0)

    def _need_rounds(self):
        if self.actions is None:
            raise ValueError("trajectory was recorded at endpoint granularity")


# --- reference backend ----------------------------------------------------


class Agent:
    """A bandit player. It sees its own actions and rewards and nothing else."""

    def __init__(self, spec: AgentSpec):
        self.config = spec.config
        self._rng = make_rng(spec.seed)
        self._history = History()
        self._pending: Optional[Action] = None
        self.last_target: Optional[Action] = None

    @property
    def history(self) -> History:
        return self._history

    def act(self, force: Optional[Action] = None) -> Action:
        coin, u = self._rng.random(2)
        v_h, v_l = self._history.table.values()
        self.last_target = resolve_tie(v_h, v_l, self.config.tie_break, coin)
        p_h = conditional_p_h(self.config, self._history, coin)
        action = Action.H if u < p_h else Action.L
        if force is not None:
            action = force
        self._pending = action
        return action

    def observe(self, reward_: float) -> None:
        self._history.record(self._pending, reward_)
        self._pending = None

    def final_target(self) -> Action:
        coin, _ = self._rng.random(2)
        v_h, v_l = self._history.table.values()
        return resolve_tie(v_h, v_l, self.config.tie_break, coin)


def _play_reference(config: GameConfig, forced=()) -> Trajectory:
    h = config.horizon
    agents = [Agent(spec) for spec in config.agents]
    record = config.record == RECORD_EVERY_ROUND
    actions = np.zeros((h, 2), dtype=np.int8) if record else None
    values = np.zeros((h, 2, 2)) if record else None
    regimes = np.zeros((h, 2), dtype=np.int8) if record else None
    state = [0, 0, 0, 0]
    last_non_hh = -1
    for t in range(h):
        force = forced[t] if t < len(forced) else (None, None)
        a = [agents[i].act(force[i]) for i in range(2)]
        g = [ag.last_target for ag in agents]
        o = Outcome(a[0], a[1])
        r = reward(config.params, o)
        for i in range(2):
            agents[i].observe(r[i])
        state[2 * a[0] + a[1]] += 1
        if g[0] is not Action.H or g[1] is not Action.H:
            last_non_hh = t
        if record:
            actions[t] = a
            regimes[t] = g
            for i in range(2):
                values[t, i] = agents[i].history.table.values()
    final_values = np.array([ag.history.table.values() for ag in agents])
    final_regime = Regime(*(ag.final_target() for ag in agents))
    return Trajectory(config, StateVector(tuple(state)), final_values, final_regime, last_non_hh,
                      actions, values, regimes, tuple(forced))


# --- fast backend ---------------------------------------------------------


def kernel_encoding(configs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    codes, params, ties = [], [], []
    for cfg in configs:
        if isinstance(cfg, EpsilonGreedyConfig):
            codes.append(_kernel.EG); params.append(cfg.epsilon)
        elif isinstance(cfg, EpsilonDecayConfig):
            codes.append(_kernel.ED); params.append(cfg.eta)
        elif isinstance(cfg, UcbConfig):
            codes.append(_kernel.UCB); params.append(cfg.delta)
        elif isinstance(cfg, ConstantConfig):
            codes.append(_kernel.CONST); params.append(1.0 if cfg.action is Action.H else 0.0)
        elif isinstance(cfg, ExploreFirstConfig):
            codes.append(_kernel.EXPLORE_FIRST); params.append(0.0)
        else:
            raise TypeError(f"{cfg.name} has no compiled implementation")
        ties.append(cfg.tie_break.code)
    return np.array(codes, dtype=np.int64), np.array(params, dtype=float), np.array(ties, dtype=np.int64)


def kernel_supported(config: GameConfig) -> bool:
    try:
        kernel_encoding([a.config for a in config.agents])
    except TypeError:
        return False
    return True


def game_uniforms(config: GameConfig) -> np.ndarray:
    h = config.horizon
    u = np.empty((h + 1, 2, 2))
    for i, spec in enumerate(config.agents):
        u[:, i, :] = make_rng(spec.seed).random((h + 1, 2))
    return u


def _play_fast(config: GameConfig) -> Trajectory:
    h = config.horizon
    codes, params, ties = kernel_encoding([a.config for a in config.agents])
    record = config.record == RECORD_EVERY_ROUND
    actions = np.zeros((h if record else 0, 2), dtype=np.int8)
    values = np.zeros((h if record else 0, 2, 2))
    regimes = np.zeros((h if record else 0, 2), dtype=np.int8)
    sums, counts, state, last_non_hh, final = _kernel.run_game(
        codes, params, ties, config.params.beta, config.params.gamma, h, game_uniforms(config),
        record, actions, values, regimes,
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        final_values = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    if not record:
        actions = values = regimes = None
    return Trajectory(config, StateVector(tuple(state)), final_values, Regime(Action(final[0]), Action(final[1])),
                      int(last_non_hh), actions, values, regimes)


def play_game(config: GameConfig, backend: str = "auto", forced=()) -> Trajectory:
    """Play `config.horizon` simultaneous rounds.

    `forced` optionally fixes the first outcomes, e.g. ``[Outcome(H, L)]``;
    agents still draw their coins for those rounds. Forcing and agents without
    a compiled implementation run on the reference backend.
    """
    forced = tuple(Outcome(*o) for o in forced)
    if backend == "auto":
        backend = "fast" if (kernel_supported(config) and not forced) else "reference"
    if backend == "fast":
        if forced:
            raise ValueError("forced openings need the reference backend")
        return _play_fast(config)
    if backend == "reference":
        return _play_reference(config, forced)
    raise ValueError(f"unknown backend {backend!r}")


# --- classification ---------------------------------------------------------


def classify_regime(histories, tie_break=TieBreak.FIRST, rng=None) -> Regime:
    rules = tie_break if isinstance(tie_break, (tuple, list)) else (tie_break, tie_break)
    out = []
    for hist, rule in zip(histories, rules):
        rule = TieBreak(rule)
        coin = 0.0
        if rule is TieBreak.RANDOM:
            if rng is None:
                raise ValueError("random tie-breaking needs an rng")
            coin = rng.random()
        v_h, v_l = hist.table.values()
        out.append(resolve_tie(v_h, v_l, rule, coin))
    return Regime(*out)


def collusive_values(values) -> bool:
    """values[i] = (v_i(H), v_i(L)); both players must strictly prefer H."""
    return all(v[0] - v[1] > TIE_TOL for v in values)


def is_collusive_ending(trajectory: Trajectory) -> bool:
    return collusive_values(trajectory.final_values)


def collusion_onset_from_regimes(regimes) -> Optional[int]:
    """Smallest T with every regime from T onward equal to (H,H)."""
    regimes = [Regime.parse(r) if isinstance(r, str) else Regime(*r) for r in regimes]
    if not regimes or regimes[-1] != HH:
        return None
    t = len(regimes)
    while t > 0 and regimes[t - 1] == HH:
        t -= 1
    return t


def collusion_onset(trajectory: Trajectory) -> Optional[int]:
    """Index T (in rounds of history) from which the regime stays (H,H) through the end.

    Regime T is the one agents hold when choosing round T; the final regime
    (after the last round) counts as index ``horizon``.
    """
    if trajectory.final_regime != HH:
        return None
    return trajectory.last_non_hh + 1


def with_record(config: GameConfig, record: str) -> GameConfig:
    return replace(config, record=record)
