"""
Two pricing bots that never talk
================================

Two sellers each run a bandit that only sees its own price and profit.
With fixed-epsilon exploration they settle on the low price; with UCB
they end up holding the high price.
"""

from pathlib import Path

import numpy as np

from naive_collusion import EpsilonGreedyConfig, GameConfig, PayoffParams, UcbConfig, is_collusive_ending, play_game
from naive_collusion.export import atomic_write, value_plot_svg

out = Path(__file__).with_name("out")
params = PayoffParams(beta=0.6, gamma=0.3)

# %%
# Epsilon-greedy, 10% exploration
eg = play_game(GameConfig.build(params, EpsilonGreedyConfig(0.1), horizon=10_000, master_seed=1))
print("epsilon-greedy final estimates (rows: agents, cols: H, L)")
print(np.round(eg.final_values, 4))
print("collusive ending:", is_collusive_ending(eg))
atomic_write(out / "epsilon_greedy_values.svg", value_plot_svg(eg, "epsilon-greedy, eps = 0.1"))

# %%
# UCB with delta below exp(-gamma^2 / 2)
ucb = play_game(GameConfig.build(params, UcbConfig(0.1), horizon=10_000, master_seed=1))
print("UCB final estimates")
print(np.round(ucb.final_values, 4))
print("collusive ending:", is_collusive_ending(ucb))
share_hh = (ucb.actions == 0).all(axis=1).mean()
print(f"share of rounds at (H,H): {share_hh:.3f}")
atomic_write(out / "ucb_values.svg", value_plot_svg(ucb, "UCB, delta = 0.1"))
print("figures written to", out)
