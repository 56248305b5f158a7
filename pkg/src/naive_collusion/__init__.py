"""Simulation and analysis of naive bandit learners in a repeated pricing duopoly."""

__version__ = "0.1.0"

from .bandit import History, TieBreak, ValueTable, target_policy, value_estimate  # noqa: E402
from .engine import (  # noqa: E402
    AgentSpec,
    GameConfig,
    Regime,
    Trajectory,
    collusion_onset,
    is_collusive_ending,
    play_game,
)
from .game import Action, Outcome, PayoffParams, reward  # noqa: E402
from .markov import StateVector, exact_collusion_probability, transition_distribution  # noqa: E402
from .policies import (  # noqa: E402
    EpsilonDecayConfig,
    EpsilonGreedyConfig,
    UcbConfig,
    behavior_distribution,
    ucb_collusion_delta_bound,
)
from .sweep import GridSpec, HeatmapResult, run_grid, summarize_monotonicity  # noqa: E402

__all__ = [
    "__version__",
    "History",
    "TieBreak",
    "ValueTable",
    "target_policy",
    "value_estimate",
    "AgentSpec",
    "GameConfig",
    "Regime",
    "Trajectory",
    "collusion_onset",
    "is_collusive_ending",
    "play_game",
    "Action",
    "Outcome",
    "PayoffParams",
    "reward",
    "StateVector",
    "exact_collusion_probability",
    "transition_distribution",
    "EpsilonDecayConfig",
    "EpsilonGreedyConfig",
    "UcbConfig",
    "behavior_distribution",
    "ucb_collusion_delta_bound",
    "GridSpec",
    "HeatmapResult",
    "run_grid",
    "summarize_monotonicity",
]
