"""Executable checks of the analytical results against simulated and enumerated play.

Every check returns an :class:`OracleVerdict`. A failing verdict always carries
a witness holding the game configuration(s) and seeds needed to replay it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernel
from .bandit import TIE_TOL, TieBreak
from .engine import (
    RECORD_ENDPOINTS,
    RECORD_EVERY_ROUND,
    AgentSpec,
    GameConfig,
    Regime,
    Trajectory,
    collusion_onset,
    derive_seed,
    is_collusive_ending,
    kernel_encoding,
    play_game,
)
from .game import Action, Outcome, PayoffParams
from .markov import exact_collusion_probability
from .policies import EpsilonDecayConfig, EpsilonGreedyConfig, UcbConfig, is_deterministic, ucb_collusion_delta_bound

STRICT_TOL = 1e-12
EQUAL_TOL = 1e-10


@dataclass
class OracleVerdict:
    claim: str
    passed: bool
    witness: Optional[dict] = None
    stats: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        if not self.passed and self.witness is None:
            raise ValueError(f"failing verdict for {self.claim} needs a witness")

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_mapping(self) -> dict:
        return {"claim": self.claim, "status": self.status, "note": self.note,
                "stats": self.stats, "witness": self.witness}


def _witness(trajectory: Trajectory, **extra) -> dict:
    w = {"config": trajectory.config.to_mapping()}
    if trajectory.forced:
        w["forced"] = [str(o) for o in trajectory.forced]
    w.update(extra)
    return w


def _prior_counts(actions: np.ndarray) -> np.ndarray:
    """counts[t, i, a]: plays of action a by player i before round t."""
    onehot = np.stack([actions == 0, actions == 1], axis=-1).astype(np.int64)
    c = np.cumsum(onehot, axis=0)
    return np.concatenate([np.zeros((1, 2, 2), dtype=np.int64), c[:-1]], axis=0)


# --- lemmas -----------------------------------------------------------------


def check_lemma2_3(trajectory: Trajectory, params: PayoffParams | None = None) -> OracleVerdict:
    """At each (H,H) round every H estimate rises (or sits at beta); at each
    (L,L) round every L estimate falls (or sits at gamma)."""
    params = params or trajectory.config.params
    acts = trajectory.actions
    if acts is None:
        raise ValueError("lemma checks need an every-round trajectory")
    vals = trajectory.values
    before = np.concatenate([np.zeros((1, 2, 2)), vals[:-1]], axis=0)
    prior = _prior_counts(acts)
    checked = 0
    for action, pinned, sign, claim in ((0, params.beta, 1.0, "lemma2"), (1, params.gamma, -1.0, "lemma3")):
        rounds = np.nonzero((acts[:, 0] == action) & (acts[:, 1] == action))[0]
        for i in range(2):
            r = rounds[prior[rounds, i, action] > 0]
            v0, v1 = before[r, i, action], vals[r, i, action]
            moved = sign * (v1 - v0) > STRICT_TOL
            stuck = (np.abs(v1 - pinned) <= EQUAL_TOL) & (np.abs(v0 - pinned) <= EQUAL_TOL)
            bad = r[~(moved | stuck)]
            checked += len(r)
            if len(bad):
                t = int(bad[0])
                return OracleVerdict(claim, False, _witness(trajectory, round=t, player=i,
                                                            before=float(before[t, i, action]),
                                                            after=float(vals[t, i, action])))
    return OracleVerdict("lemma2_3", True, stats={"rounds_checked": checked})


def check_lemma4(trajectory: Trajectory) -> OracleVerdict:
    """Once the two histories are path-equivalent, symmetric deterministic agents
    play identical actions for the rest of the game."""
    acts = trajectory.actions
    if acts is None:
        raise ValueError("lemma checks need an every-round trajectory")
    rew = trajectory.rewards
    onehot = np.stack([acts == 0, acts == 1], axis=-1)
    counts = np.cumsum(onehot, axis=0)
    sums = np.cumsum(onehot * rew[:, :, None], axis=0)
    equiv = np.all(counts[:, 0] == counts[:, 1], axis=1) & np.all(np.abs(sums[:, 0] - sums[:, 1]) <= TIE_TOL, axis=1)
    # histories before round 0 are both empty, hence equivalent
    equiv = np.concatenate([[True], equiv[:-1]])
    idx = np.nonzero(equiv)[0]
    t_star = int(idx[0]) if len(idx) else None
    if t_star is None:
        return OracleVerdict("lemma4", True, stats={"t_star": None}, note="never path-equivalent")
    diff = np.nonzero(acts[t_star:, 0] != acts[t_star:, 1])[0]
    if len(diff):
        return OracleVerdict("lemma4", False, _witness(trajectory, t_star=t_star, round=int(t_star + diff[0])))
    return OracleVerdict("lemma4", True, stats={"t_star": t_star})


def check_markov_consistency(trajectory: Trajectory, tol: float = EQUAL_TOL) -> OracleVerdict:
    """State-based value formulas agree with the agents' own estimates every round."""
    s = trajectory.states().astype(float)
    b, g = trajectory.config.params.beta, trajectory.config.params.gamma
    # [player][action] -> (numerator, denominator)
    forms = {
        (0, 0): (b * s[:, 0], s[:, 0] + s[:, 1]),
        (0, 1): (s[:, 2] + g * s[:, 3], s[:, 2] + s[:, 3]),
        (1, 0): (b * s[:, 0], s[:, 0] + s[:, 2]),
        (1, 1): (s[:, 1] + g * s[:, 3], s[:, 1] + s[:, 3]),
    }
    checked = 0
    for (i, a), (num, den) in forms.items():
        ok = den > 0
        v_state = num[ok] / den[ok]
        v_hist = trajectory.values[ok, i, a]
        bad = np.nonzero(np.abs(v_state - v_hist) > tol)[0]
        checked += int(ok.sum())
        if len(bad):
            t = int(np.nonzero(ok)[0][bad[0]])
            return OracleVerdict("markov_consistency", False, _witness(trajectory, round=t, player=i, action=a))
    return OracleVerdict("markov_consistency", True, stats={"values_checked": checked})


# --- proposition 1 ------------------------------------------------------------


def check_prop1(agent, param_grid, horizon: int = 1000, master_seed: int = 0) -> OracleVerdict:
    """Symmetric deterministic agents reach a persistent (H,H) regime for every payoff pair."""
    if isinstance(agent, (tuple, list)):
        if len(agent) != 2 or agent[0] != agent[1]:
            raise ValueError("proposition 1 needs two identical agents")
        agent = agent[0]
    if not is_deterministic(agent):
        raise ValueError(f"{agent.name} with tie_break={agent.tie_break.value} is not deterministic")
    onsets = []
    for k, params in enumerate(param_grid):
        params = params if isinstance(params, PayoffParams) else PayoffParams(*params)
        traj = play_game(GameConfig.build(params, agent, horizon=horizon, master_seed=derive_seed(master_seed, k),
                                          record=RECORD_ENDPOINTS))
        onset = collusion_onset(traj)
        if onset is None:
            return OracleVerdict("prop1", False, _witness(traj, game=k))
        onsets.append(onset)
    return OracleVerdict("prop1", True, stats={"games": len(onsets), "max_onset": max(onsets)})


# --- proposition 2 ------------------------------------------------------------

H, L = Action.H, Action.L
PROP2_OPENINGS = {
    # round-0 outcome -> (round-1 outcome, state after two rounds)
    Outcome(H, H): (Outcome(L, L), (1, 0, 0, 1)),
    Outcome(L, L): (Outcome(H, H), (1, 0, 0, 1)),
    Outcome(H, L): (Outcome(L, H), (0, 1, 1, 0)),
    Outcome(L, H): (Outcome(H, L), (0, 1, 1, 0)),
}


def check_prop2_opening(delta: float, tie_breaks=("first", "first"),
                        params: PayoffParams = PayoffParams(0.6, 0.3)) -> OracleVerdict:
    """Force each of the four round-0 outcomes and compare rounds 1-2 with the case analysis."""
    cases = []
    failure = None
    for k, (o0, (o1_expected, s2_expected)) in enumerate(PROP2_OPENINGS.items()):
        cfg = GameConfig(params, tuple(AgentSpec(UcbConfig(delta, TieBreak(tb)), derive_seed(k, i))
                                       for i, tb in enumerate(tie_breaks)), horizon=2)
        traj = play_game(cfg, forced=[o0])
        o1 = traj.outcomes[1]
        ok = o1 == o1_expected and traj.final_state.counts == s2_expected
        cases.append({"opening": str(o0), "round1": str(o1), "state2": list(traj.final_state.counts), "ok": ok})
        if not ok and failure is None:
            failure = _witness(traj, case=k + 1, expected_round1=str(o1_expected), expected_state2=list(s2_expected))
    passed = all(c["ok"] for c in cases)
    return OracleVerdict("prop2_opening", passed, failure, {"cases": cases, "passed": sum(c["ok"] for c in cases)})


def check_prop2_convergence(params: PayoffParams, delta: float, horizon: int = 10_000, trials: int = 1000,
                            master_seed: int = 0, tie_break=TieBreak.RANDOM) -> OracleVerdict:
    """Symmetric UCB below the delta bound ends collusive in every trial."""
    bound = ucb_collusion_delta_bound(params.gamma)
    in_bound = delta < bound
    note = "" if in_bound else f"out-of-bound regime: delta={delta} >= {bound:.6g}, no guarantee"
    cfg = UcbConfig(delta, TieBreak(tie_break))
    collusive = 0
    pinned = 0
    failure = None
    for k in range(trials):
        traj = play_game(GameConfig.build(params, cfg, horizon=horizon, master_seed=derive_seed(master_seed, k),
                                          record=RECORD_ENDPOINTS))
        ok = is_collusive_ending(traj)
        s = traj.final_state
        if s[1] == 0 and s[2] == 0:
            # (1,0,0,1) opening: estimates stay pinned at beta and gamma
            pinned += 1
            v = traj.final_values
            ok = ok and bool(np.all(np.abs(v[:, 0] - params.beta) <= EQUAL_TOL)
                             and np.all(np.abs(v[:, 1] - params.gamma) <= EQUAL_TOL))
        collusive += bool(is_collusive_ending(traj))
        if not ok and failure is None:
            failure = _witness(traj, trial=k)
    stats = {"trials": trials, "collusive": collusive, "pinned_openings": pinned,
             "delta_bound": bound, "in_bound": in_bound}
    return OracleVerdict("prop2_convergence", failure is None, failure, stats, note)


# --- proposition 3 ------------------------------------------------------------


def prop3_limit_values(params: PayoffParams, eps0: float, eps1: float, regime, player: int) -> tuple[float, float]:
    """Long-run (v(H), v(L)) of `player` while both epsilon-greedy agents hold `regime` fixed.

    Only the opponent's target matters: it sets how often the opponent plays H.
    """
    regime = Regime.parse(regime) if isinstance(regime, str) else Regime(*regime)
    if player == 0:
        opp_target, eps = regime.pi1, eps1
    elif player == 1:
        opp_target, eps = regime.pi0, eps0
    else:
        raise ValueError("player must be 0 or 1")
    q = 1.0 - eps / 2.0 if opp_target is Action.H else eps / 2.0
    return params.beta * q, q + params.gamma * (1.0 - q)


def frozen_regime_values(params: PayoffParams, eps0: float, eps1: float, regime, rounds: int,
                         rng: np.random.Generator) -> dict:
    """Monte Carlo of play with targets frozen at `regime`.

    Returns {(player, action): (mean reward, standard error, samples)}.
    """
    regime = Regime.parse(regime) if isinstance(regime, str) else Regime(*regime)
    p_h = [1.0 - e / 2.0 if tgt is Action.H else e / 2.0 for e, tgt in ((eps0, regime.pi0), (eps1, regime.pi1))]
    plays_h = rng.random((rounds, 2)) < np.array(p_h)
    table = np.array(params.reward_table())
    k = 2 * (~plays_h[:, 0]).astype(int) + (~plays_h[:, 1]).astype(int)
    rewards = table[k]
    out = {}
    for i in range(2):
        for a in Action:
            mask = plays_h[:, i] if a is Action.H else ~plays_h[:, i]
            x = rewards[mask, i]
            out[(i, a)] = (float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x))), int(len(x)))
    return out


def _final_segment(regimes: np.ndarray) -> int:
    """Start index of the trailing run of identical regimes."""
    diff = np.any(regimes != regimes[-1], axis=1)
    idx = np.nonzero(diff)[0]
    return int(idx[-1]) + 1 if len(idx) else 0


def check_prop3(params: PayoffParams, eps0: float, eps1: float, horizon: int = 10_000, trials: int = 1000,
                master_seed: int = 0, threshold: float = 0.05, min_persist: int = 2000,
                z: float = 3.0, min_samples: int = 30) -> OracleVerdict:
    """Fixed-epsilon greedy agents rarely end collusive, and within long-lived
    regimes their per-action mean rewards sit at the limit values.

    The regime-conditioned means only use rounds inside a trailing regime run
    of at least `min_persist` rounds, so transient early play does not bias them.
    """
    if not (eps0 > 0 and eps1 > 0):
        raise ValueError("proposition 3 needs epsilon > 0 for both agents")
    c0, c1 = EpsilonGreedyConfig(eps0), EpsilonGreedyConfig(eps1)
    collusive = 0
    first_collusive = None
    acc: dict = {}
    for k in range(trials):
        traj = play_game(GameConfig.build(params, c0, c1, horizon=horizon, master_seed=derive_seed(master_seed, k),
                                          record=RECORD_EVERY_ROUND))
        if is_collusive_ending(traj):
            collusive += 1
            if first_collusive is None:
                first_collusive = _witness(traj, trial=k)
        start = _final_segment(traj.regimes)
        if horizon - start < min_persist:
            continue
        regime = str(Regime(Action(traj.regimes[-1, 0]), Action(traj.regimes[-1, 1])))
        acts = traj.actions[start:]
        rew = traj.rewards[start:]
        for i in range(2):
            for a in Action:
                x = rew[acts[:, i] == a, i]
                s = acc.setdefault((regime, i, a.name), [0, 0.0, 0.0])
                s[0] += len(x)
                s[1] += float(x.sum())
                s[2] += float((x * x).sum())
    proportion = collusive / trials
    groups = []
    worst = None
    for (regime, i, a), (n, sx, sxx) in sorted(acc.items()):
        if n < min_samples:
            continue
        mean = sx / n
        var = max(sxx / n - mean * mean, 0.0) * n / (n - 1)
        se = math.sqrt(var / n)
        limit = prop3_limit_values(params, eps0, eps1, regime, i)[0 if a == "H" else 1]
        zscore = abs(mean - limit) / se if se > 0 else (0.0 if abs(mean - limit) <= EQUAL_TOL else math.inf)
        groups.append({"regime": regime, "player": i, "action": a, "n": n, "mean": mean,
                       "limit": limit, "se": se, "z": zscore, "ok": zscore <= z})
        if zscore > z and worst is None:
            worst = groups[-1]
    stats = {"trials": trials, "collusive": collusive, "proportion": proportion, "threshold": threshold,
             "groups": groups}
    witness = None
    if proportion > threshold:
        witness = first_collusive
    elif worst is not None:
        witness = {"params": [params.beta, params.gamma], "eps": [eps0, eps1], "master_seed": master_seed,
                   "trials": trials, "horizon": horizon, "group": worst}
    return OracleVerdict("prop3", witness is None, witness, stats)


# --- exact chain vs Monte Carlo ------------------------------------------------


def monte_carlo_collusion(params: PayoffParams, configs, horizon: int, trials: int, seed: int = 0,
                          chunk: int = 100_000) -> float:
    """Fraction of collusive endings over `trials` independent short games."""
    codes, prm, ties = kernel_encoding(configs)
    rng = np.random.Generator(np.random.PCG64(seed))
    hits = 0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        u = rng.random((n, horizon + 1, 2, 2))
        flags, _ = _kernel.run_batch(codes, prm, ties, params.beta, params.gamma, horizon, u)
        hits += int(flags.sum())
        done += n
    return hits / trials


def check_exact_dp(params: PayoffParams, configs, horizon: int, trials: int = 1_000_000, seed: int = 0,
                   z: float = 3.0) -> OracleVerdict:
    exact = exact_collusion_probability(params, configs, horizon)
    mc = monte_carlo_collusion(params, configs, horizon, trials, seed)
    se = math.sqrt(exact * (1 - exact) / trials)
    ok = abs(mc - exact) <= z * se + 1e-12
    stats = {"exact": exact, "monte_carlo": mc, "se": se, "horizon": horizon, "trials": trials}
    witness = None if ok else {"params": [params.beta, params.gamma],
                               "agents": [AgentSpec(c).to_mapping() for c in configs],
                               "horizon": horizon, "trials": trials, "seed": seed}
    return OracleVerdict("exact_dp_crosscheck", ok, witness, stats)


def random_mixed_config(rng: np.random.Generator):
    """A random epsilon-greedy, epsilon-decay or UCB agent (for consistency sweeps)."""
    tie = TieBreak(("first", "last", "random")[rng.integers(3)])
    kind = rng.integers(3)
    if kind == 0:
        return EpsilonGreedyConfig(float(rng.uniform(0.01, 0.99)), tie)
    if kind == 1:
        return EpsilonDecayConfig(float(rng.uniform(0.9, 0.9999)), tie)
    return UcbConfig(float(rng.uniform(0.01, 1.0)), tie)


def random_params(rng: np.random.Generator) -> PayoffParams:
    while True:
        b, g = sorted(rng.uniform(0.0, 1.0, 2), reverse=True)
        if 1.0 > b > g > 0.0 and b - g > 1e-6:
            return PayoffParams(float(b), float(g))

