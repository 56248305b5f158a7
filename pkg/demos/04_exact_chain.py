"""
The learning process as a Markov chain
======================================

Both agents' estimates are functions of the outcome counts, so short games
can be solved exactly by pushing probability mass through the chain.
"""

import math

from naive_collusion import EpsilonGreedyConfig, PayoffParams, UcbConfig
from naive_collusion.markov import exact_collusion_probability, exact_terminal_distribution
from naive_collusion.oracle import monte_carlo_collusion

params = PayoffParams(0.6, 0.3)
for name, cfg in (("epsilon-greedy 0.5", EpsilonGreedyConfig(0.5)), ("UCB 0.5", UcbConfig(0.5))):
    print(name)
    for horizon in (4, 8, 12):
        exact = exact_collusion_probability(params, [cfg, cfg], horizon)
        mc = monte_carlo_collusion(params, [cfg, cfg], horizon, 200_000, seed=horizon)
        se = math.sqrt(max(exact * (1 - exact), 1e-300) / 200_000)
        states = len(exact_terminal_distribution(params, [cfg, cfg], horizon))
        print(f"  T={horizon:2d}  exact {exact:.5f}  simulated {mc:.5f}  ({(mc - exact) / se:+.2f} SE)  {states} states")
