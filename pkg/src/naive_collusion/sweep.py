"""Seeded grid experiments: proportion of games ending in collusion per tile."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.stats import spearmanr

from .engine import RECORD_ENDPOINTS, AgentSpec, GameConfig, derive_seed, is_collusive_ending, play_game
from .game import PayoffParams
from .policies import CONFIG_TYPES, PolicyConfig, UcbConfig

BETA_GAMMA = "beta_gamma"
DELTA = "delta"


class EmptyGridError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class GridSpec:
    """Either a (beta, gamma) grid for one symmetric agent template, or a
    (delta0, delta1) grid of UCB agents at fixed payoffs."""

    kind: str = BETA_GAMMA
    axis0: Axis = Axis("beta", 0.025, 0.975, 20)
    axis1: Axis = Axis("gamma", 0.025, 0.975, 20)
    agent: PolicyConfig = UcbConfig(0.1)
    trials: int = 30
    horizon: int = 10_000
    master_seed: int = 0
    beta: Optional[float] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (BETA_GAMMA, DELTA):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.trials < 1 or self.horizon < 1:
            raise ValueError("trials and horizon must be positive")
        if self.kind == DELTA:
            if not isinstance(self.agent, UcbConfig):
                raise ValueError("delta grids need a UCB agent template")
            PayoffParams(self.beta, self.gamma)

    @classmethod
    def delta_grid(cls, beta: float, gamma: float, lo: float = 0.05, hi: float = 0.95, n: int = 10,
                   **kw) -> "GridSpec":
        kw.setdefault("agent", UcbConfig(0.5))
        return cls(kind=DELTA, axis0=Axis("delta0", lo, hi, n), axis1=Axis("delta1", lo, hi, n),
                   beta=beta, gamma=gamma, **kw)

    def tile_game(self, row: int, col: int) -> Optional[tuple]:
        """(params, config0, config1) for a tile, or None if the tile is infeasible."""
        x, y = float(self.axis0.values[row]), float(self.axis1.values[col])
        if self.kind == BETA_GAMMA:
            if not 1.0 > x > y > 0.0:
                return None
            return PayoffParams(x, y), self.agent, self.agent
        if not (0.0 < x <= 1.0 and 0.0 < y <= 1.0):
            return None
        return PayoffParams(self.beta, self.gamma), replace(self.agent, delta=x), replace(self.agent, delta=y)

    def trial_config(self, row: int, col: int, trial: int) -> GameConfig:
        params, c0, c1 = self.tile_game(row, col)
        seed = derive_seed(self.master_seed, row, col, trial)
        return GameConfig.build(params, c0, c1, horizon=self.horizon, master_seed=seed, record=RECORD_ENDPOINTS)

    def to_mapping(self) -> dict:
        agent = AgentSpec(self.agent).to_mapping()
        agent.pop("seed")
        return {
            "kind": self.kind,
            "axis0": vars(self.axis0).copy(),
            "axis1": vars(self.axis1).copy(),
            "agent": agent,
            "trials": self.trials,
            "horizon": self.horizon,
            "master_seed": self.master_seed,
            "beta": self.beta,
            "gamma": self.gamma,
        }

    @classmethod
    def from_mapping(cls, m: dict) -> "GridSpec":
        agent = dict(m["agent"])
        alg = agent.pop("algorithm")
        return cls(
            kind=m["kind"],
            axis0=Axis(**m["axis0"]),
            axis1=Axis(**m["axis1"]),
            agent=CONFIG_TYPES[alg](**agent),
            trials=int(m["trials"]),
            horizon=int(m["horizon"]),
            master_seed=int(m["master_seed"]),
            beta=m.get("beta"),
            gamma=m.get("gamma"),
        )


@dataclass
class HeatmapResult:
    spec: GridSpec
    collusive: np.ndarray  # int counts, -1 on masked tiles
    trials: np.ndarray  # games played per tile, 0 on masked tiles
    meta: dict = field(default_factory=dict)

    @property
    def masked(self) -> np.ndarray:
        return self.trials == 0

    @property
    def proportions(self) -> np.ndarray:
        """Collusive fraction per tile; NaN marks infeasible (masked) tiles."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.masked, np.nan, self.collusive / np.maximum(self.trials, 1))

    @property
    def axis0(self) -> np.ndarray:
        return self.spec.axis0.values

    @property
    def axis1(self) -> np.ndarray:
        return self.spec.axis1.values


def run_tile(spec: GridSpec, row: int, col: int) -> int:
    """Number of collusive endings among the tile's trials."""
    return sum(is_collusive_ending(play_game(spec.trial_config(row, col, k))) for k in range(spec.trials))


def _tile_job(args):
    spec, row, col = args
    return row, col, run_tile(spec, row, col)


def run_grid(spec: GridSpec, workers: int = 1, tiles=None) -> HeatmapResult:
    """Play every feasible tile. Seeds depend only on (master_seed, row, col, trial),
    so results do not depend on `workers`, scheduling, or which tiles are included."""
    n0, n1 = spec.axis0.n, spec.axis1.n
    wanted = set(tiles) if tiles is not None else None
    jobs = [
        (spec, r, c)
        for r in range(n0)
        for c in range(n1)
        if (wanted is None or (r, c) in wanted) and spec.tile_game(r, c) is not None
    ]
    if not jobs:
        raise EmptyGridError("no feasible tiles in grid")
    collusive = np.full((n0, n1), -1, dtype=np.int64)
    trials = np.zeros((n0, n1), dtype=np.int64)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_tile_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_tile_job(j) for j in jobs]
    for r, c, k in results:
        collusive[r, c] = k
        trials[r, c] = spec.trials
    return HeatmapResult(spec, collusive, trials)


def run_asymmetric_ucb_grid(spec: GridSpec, workers: int = 1, tiles=None) -> HeatmapResult:
    if spec.kind != DELTA:
        raise ValueError("asymmetric UCB grids are built with GridSpec.delta_grid")
    return run_grid(spec, workers, tiles)


@dataclass
class TrendReport:
    """Mean Spearman correlation of collusion proportion with each axis, taken
    over slices where the other axis is held fixed. ``None`` means undefined
    (every slice constant)."""

    rho_axis0: Optional[float]
    rho_axis1: Optional[float]
    slices_axis0: list
    slices_axis1: list

    @property
    def beta_trend(self) -> Optional[float]:
        return self.rho_axis0

    @property
    def gamma_trend(self) -> Optional[float]:
        return self.rho_axis1

    def describe(self) -> str:
        def fmt(x):
            return "undefined" if x is None else f"{x:+.4f}"
        return (f"axis0 trend {fmt(self.rho_axis0)} over {len(self.slices_axis0)} slices; "
                f"axis1 trend {fmt(self.rho_axis1)} over {len(self.slices_axis1)} slices")


def _slice_rhos(x: np.ndarray, grid: np.ndarray) -> list:
    """Spearman rho along axis 0 of `grid` for each column with >= 3 tiles and some variation."""
    out = []
    for j in range(grid.shape[1]):
        col = grid[:, j]
        ok = ~np.isnan(col)
        if ok.sum() < 3 or np.ptp(col[ok]) == 0:
            continue
        out.append(float(spearmanr(x[ok], col[ok])[0]))
    return out


def summarize_monotonicity(result: HeatmapResult) -> TrendReport:
    p = result.proportions
    if min(p.shape) < 3 or (~np.isnan(p)).sum() < 3:
        raise InsufficientDataError("need at least 3 points along each axis")
    s0 = _slice_rhos(result.axis0, p)
    s1 = _slice_rhos(result.axis1, p.T)
    mean = lambda xs: float(np.mean(xs)) if xs else None  # noqa: E731
    return TrendReport(mean(s0), mean(s1), s0, s1)


def mirrored_pairs(result: HeatmapResult, z: float = 3.0) -> list:
    """(row, col, p_rc, p_cr, pooled_se, ok) for each off-diagonal pair of a square grid."""
    p = result.proportions
    n = result.trials
    out = []
    for r in range(p.shape[0]):
        for c in range(r + 1, p.shape[1]):
            if n[r, c] == 0 or n[c, r] == 0:
                continue
            pooled = (result.collusive[r, c] + result.collusive[c, r]) / (n[r, c] + n[c, r])
            se = math.sqrt(pooled * (1 - pooled) * (1 / n[r, c] + 1 / n[c, r]))
            diff = abs(p[r, c] - p[c, r])
            out.append((r, c, p[r, c], p[c, r], se, diff <= z * se + 1e-15))
    return out
