"""
Collusion across the payoff square
==================================

A reduced version of the full sweeps: epsilon-decay agents over (beta, gamma)
and asymmetric UCB agents over (delta0, delta1). Full-size grids are one CLI
call away (``naive-collusion sweep``).
"""

from pathlib import Path

import numpy as np

from naive_collusion import EpsilonDecayConfig, GridSpec, run_grid, summarize_monotonicity
from naive_collusion.export import atomic_write, heatmap_svg
from naive_collusion.sweep import Axis, mirrored_pairs

out = Path(__file__).with_name("out")

spec = GridSpec(axis0=Axis("beta", 0.05, 0.95, 10), axis1=Axis("gamma", 0.05, 0.95, 10),
                agent=EpsilonDecayConfig(0.999), trials=15, horizon=10_000)
res = run_grid(spec)
with np.printoptions(precision=2, nanstr=" .  "):
    print(res.proportions)
print(summarize_monotonicity(res).describe())
atomic_write(out / "epsilon_decay_grid.svg", heatmap_svg(res, "epsilon-decay, eta = 0.999"))

# %%
dspec = GridSpec.delta_grid(0.6, 0.3, n=6, trials=15, horizon=10_000)
dres = run_grid(dspec)
print(np.array2string(dres.proportions, precision=2))
bad = [p for p in mirrored_pairs(dres) if not p[-1]]
print(f"mirrored pairs outside 3 SE: {len(bad)}")
atomic_write(out / "asymmetric_ucb_grid.svg", heatmap_svg(dres, "UCB, beta = 0.6, gamma = 0.3"))
