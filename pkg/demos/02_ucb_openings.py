"""
How UCB agents lock in
======================

Force each of the four possible first-round outcomes and watch the next
two rounds. Every opening ends in one of two states, and from the
(1,0,0,1) state both estimates are pinned at beta and gamma.
"""

from naive_collusion import GameConfig, Outcome, PayoffParams, UcbConfig, play_game
from naive_collusion.engine import AgentSpec
from naive_collusion.policies import ucb_collusion_delta_bound, ucb_delta_bound_detailed

params = PayoffParams(0.6, 0.3)
delta = 0.1
print(f"delta = {delta}, collusion bound exp(-gamma^2/2) = {ucb_collusion_delta_bound(params.gamma):.5f}")

for opening in ("HH", "LL", "HL", "LH"):
    cfg = GameConfig(params, (AgentSpec(UcbConfig(delta, "first"), 1), AgentSpec(UcbConfig(delta, "first"), 2)),
                     horizon=6)
    traj = play_game(cfg, forced=[Outcome.parse(opening)])
    path = " ".join(str(o) for o in traj.outcomes)
    print(f"open {opening}: {path}   state after 2 rounds {tuple(traj.states()[1].tolist())}")

# %%
# The bound loosens as (H,H) rounds pile up after a (0,1,1,0) opening
print("s0  bound")
for s0 in range(4):
    print(f"{s0:2d}  {ucb_delta_bound_detailed(params, s0):.5f}")
