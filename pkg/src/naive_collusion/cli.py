"""Command line entry point: ``naive-collusion {play,sweep,verify,export}``.

Settings resolve as defaults < JSON config file < NAIVE_COLLUSION_SEED (seed only)
< explicit flags. Every run writes a manifest.json that ``export`` replays.
Exit codes: 0 success, 1 invalid input, 2 oracle failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import oracle
from .engine import GameConfig, derive_seed, is_collusive_ending, play_game
from .export import (
    heatmap_csv,
    heatmap_svg,
    read_manifest,
    sha256_file,
    trajectory_csv,
    value_plot_svg,
    atomic_write,
    write_manifest,
)
from .game import PayoffParams
from .policies import (
    ConstantConfig,
    EpsilonDecayConfig,
    EpsilonGreedyConfig,
    ExploreFirstConfig,
    UcbConfig,
)
from .sweep import BETA_GAMMA, DELTA, Axis, GridSpec, run_grid, summarize_monotonicity

SEED_ENV = "NAIVE_COLLUSION_SEED"
EXIT_OK, EXIT_INVALID, EXIT_ORACLE = 0, 1, 2

PLAY_DEFAULTS = {
    "alg": "ucb", "epsilon": 0.1, "eta": 0.999, "delta": 0.1, "tie_break": "random",
    "alg1": None, "epsilon1": None, "eta1": None, "delta1": None, "tie_break1": None,
    "beta": 0.6, "gamma": 0.3, "rounds": 10_000, "seed": 0,
}
SWEEP_DEFAULTS = {
    "kind": "beta-gamma", "alg": "epsilon_decay", "epsilon": [0.1], "eta": [0.999], "delta": [0.1],
    "tie_break": "random", "payoffs": ["0.6,0.3"], "axis0": None, "axis1": None,
    "trials": 30, "rounds": 10_000, "seed": 0, "workers": 1, "format": "both",
}
VERIFY_DEFAULTS = {"suite": "all", "trials": 200, "rounds": 10_000, "seed": 0, "mc_trials": 200_000,
                   "inject_fault": False}
SUITES = ("lemmas", "markov-consistency", "prop1", "prop2-opening", "prop2", "prop3", "exact-dp-crosscheck")
ALGORITHMS = ("epsilon_greedy", "epsilon_decay", "ucb", "explore_first", "constant")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def agent_config(alg: str, epsilon=None, eta=None, delta=None, tie_break="random"):
    if alg == "epsilon_greedy":
        return EpsilonGreedyConfig(float(epsilon), tie_break)
    if alg == "epsilon_decay":
        return EpsilonDecayConfig(float(eta), tie_break)
    if alg == "ucb":
        return UcbConfig(float(delta), tie_break)
    if alg == "explore_first":
        return ExploreFirstConfig(tie_break)
    if alg == "constant":
        return ConstantConfig("H")
    raise ValueError(f"unknown algorithm {alg!r}")


def resolve(defaults: dict, args: argparse.Namespace) -> dict:
    cfg = dict(defaults)
    path = getattr(args, "config", None)
    if path:
        try:
            loaded = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    if "seed" in cfg and os.environ.get(SEED_ENV):
        try:
            cfg["seed"] = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV} must be an integer") from exc
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            cfg[key] = value
    return cfg


# --- play -------------------------------------------------------------------------


def build_game(cfg: dict) -> GameConfig:
    params = PayoffParams(cfg["beta"], cfg["gamma"])
    c0 = agent_config(cfg["alg"], cfg["epsilon"], cfg["eta"], cfg["delta"], cfg["tie_break"])

    def pick(key):
        v = cfg.get(key + "1")
        return cfg[key] if v is None else v

    c1 = agent_config(pick("alg"), pick("epsilon"), pick("eta"), pick("delta"), pick("tie_break"))
    return GameConfig.build(params, c0, c1, horizon=int(cfg["rounds"]), master_seed=int(cfg["seed"]))


def run_play(cfg: dict, out: Path) -> dict:
    game = build_game(cfg)
    traj = play_game(game)
    title = f"beta={game.params.beta:g}, gamma={game.params.gamma:g}"
    files = {
        "trajectory": atomic_write(out / "trajectory.csv", trajectory_csv(traj)),
        "values_svg": atomic_write(out / "values.svg", value_plot_svg(traj, title)),
    }
    summary = {"collusive_ending": bool(is_collusive_ending(traj)), "final_state": list(traj.final_state.counts)}
    return {"files": files, "rounds": game.horizon, "summary": summary, "game": game.to_mapping()}


# --- sweep ------------------------------------------------------------------------


def _axis(values, name, default) -> Axis:
    lo, hi, n = values if values is not None else default
    return Axis(name, float(lo), float(hi), int(n))


def build_grids(cfg: dict) -> list[GridSpec]:
    kind = cfg["kind"].replace("-", "_")
    common = {"trials": int(cfg["trials"]), "horizon": int(cfg["rounds"]), "master_seed": int(cfg["seed"])}
    grids = []
    if kind == BETA_GAMMA:
        key = {"epsilon_greedy": "epsilon", "epsilon_decay": "eta", "ucb": "delta"}.get(cfg["alg"])
        panel_values = cfg[key] if key else [None]
        for v in panel_values:
            agent = agent_config(cfg["alg"], **({key: v} if key else {}), tie_break=cfg["tie_break"])
            grids.append(GridSpec(kind=BETA_GAMMA, axis0=_axis(cfg["axis0"], "beta", (0.025, 0.975, 20)),
                                  axis1=_axis(cfg["axis1"], "gamma", (0.025, 0.975, 20)), agent=agent, **common))
    elif kind == DELTA:
        for pair in cfg["payoffs"]:
            beta, gamma = (float(x) for x in str(pair).split(","))
            grids.append(GridSpec(kind=DELTA, axis0=_axis(cfg["axis0"], "delta0", (0.05, 0.95, 10)),
                                  axis1=_axis(cfg["axis1"], "delta1", (0.05, 0.95, 10)),
                                  agent=UcbConfig(0.5, cfg["tie_break"]), beta=beta, gamma=gamma, **common))
    else:
        raise ValueError(f"unknown sweep kind {cfg['kind']!r}")
    return grids


def run_sweep(cfg: dict, out: Path) -> dict:
    grids = build_grids(cfg)
    files = {}
    rounds = 0
    trends = []
    for k, spec in enumerate(grids):
        result = run_grid(spec, workers=int(cfg["workers"]))
        rounds += int(result.trials.sum()) * spec.horizon
        if spec.kind == DELTA:
            title = f"beta={spec.beta:g}, gamma={spec.gamma:g}"
        else:
            title = f"{spec.agent.name} " + ", ".join(
                f"{f}={getattr(spec.agent, f):g}" for f in ("epsilon", "eta", "delta") if hasattr(spec.agent, f))
        if cfg["format"] in ("csv", "both"):
            files[f"heatmap_{k}_csv"] = atomic_write(out / f"heatmap_{k}.csv", heatmap_csv(result))
        if cfg["format"] in ("svg", "both"):
            files[f"heatmap_{k}_svg"] = atomic_write(out / f"heatmap_{k}.svg", heatmap_svg(result, title))
        try:
            trends.append(summarize_monotonicity(result).describe())
        except ValueError:
            trends.append("undefined")
    return {"files": files, "rounds": rounds, "summary": {"trends": trends},
            "grids": [g.to_mapping() for g in grids]}


# --- verify -----------------------------------------------------------------------


def _random_games(n: int, horizon: int, seed: int):
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 7)))
    for k in range(n):
        params = oracle.random_params(rng)
        c0, c1 = oracle.random_mixed_config(rng), oracle.random_mixed_config(rng)
        yield play_game(GameConfig.build(params, c0, c1, horizon=horizon, master_seed=derive_seed(seed, 8, k)))


def _first_failure(claim: str, verdicts, stats: dict) -> oracle.OracleVerdict:
    for v in verdicts:
        if not v.passed:
            v.claim = claim
            v.stats.update(stats)
            return v
    return oracle.OracleVerdict(claim, True, stats=stats)


def run_suite(name: str, trials: int, rounds: int, seed: int, mc_trials: int) -> list:
    p = PayoffParams(0.6, 0.3)
    if name == "lemmas":
        short = min(rounds, 500)
        games = list(_random_games(trials, short, seed))
        out = [_first_failure("lemma2_3", (oracle.check_lemma2_3(g) for g in games), {"games": len(games)})]
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 9)))
        sym = []
        for k in range(trials):
            params = oracle.random_params(rng)
            for cfg in (UcbConfig(float(rng.uniform(0.01, 1.0)), "first"), ExploreFirstConfig()):
                sym.append(play_game(GameConfig.build(params, cfg, horizon=short, master_seed=k)))
        out.append(_first_failure("lemma4", (oracle.check_lemma4(g) for g in sym), {"games": len(sym)}))
        return out
    if name == "markov-consistency":
        from .markov import markov_property_violations

        games = list(_random_games(trials, min(rounds, 500), seed))
        out = [_first_failure("markov_consistency", (oracle.check_markov_consistency(g) for g in games),
                              {"games": len(games)})]
        cfgs = [EpsilonGreedyConfig(0.2), EpsilonDecayConfig(0.9), UcbConfig(0.3)]
        bad = [(a.name, b.name) for a in cfgs for b in cfgs if markov_property_violations(p, [a, b], 4)]
        out.append(oracle.OracleVerdict("lemma1_markov", not bad, {"violating_pairs": bad} if bad else None,
                                        {"depth": 4, "pairs": len(cfgs) ** 2}))
        return out
    if name == "prop1":
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 10)))
        grid = [oracle.random_params(rng) for _ in range(trials)]
        out = []
        for cfg in (UcbConfig(0.1, "first"), UcbConfig(0.1, "last"), ExploreFirstConfig()):
            v = oracle.check_prop1(cfg, grid, horizon=rounds, master_seed=seed)
            v.claim = f"prop1[{cfg.name},{cfg.tie_break.value}]"
            out.append(v)
        return out
    if name == "prop2-opening":
        out = []
        for ties in (("first", "first"), ("first", "last"), ("random", "random")):
            v = oracle.check_prop2_opening(0.1, ties, p)
            v.claim = f"prop2_opening[{ties[0]},{ties[1]}]"
            out.append(v)
        return out
    if name == "prop2":
        return [oracle.check_prop2_convergence(p, 0.5, horizon=rounds, trials=trials, master_seed=seed)]
    if name == "prop3":
        out = []
        for e0, e1 in ((0.05, 0.05), (0.1, 0.1), (0.2, 0.2), (0.05, 0.2)):
            v = oracle.check_prop3(p, e0, e1, horizon=rounds, trials=trials, master_seed=seed)
            v.claim = f"prop3[{e0},{e1}]"
            out.append(v)
        return out
    if name == "exact-dp-crosscheck":
        out = []
        for cfg in (EpsilonGreedyConfig(0.5), UcbConfig(0.5, "random")):
            v = oracle.check_exact_dp(p, [cfg, cfg], 8, trials=mc_trials, seed=seed)
            v.claim = f"exact_dp[{cfg.name}]"
            out.append(v)
        return out
    raise UsageError(f"unknown suite {name!r}")


def injected_fault() -> oracle.OracleVerdict:
    """Lemma check on a trajectory whose H estimate is knocked down after an (H,H) round."""
    traj = play_game(GameConfig.build(PayoffParams(0.6, 0.3), UcbConfig(0.1, "first"), horizon=20))
    hh = [t for t in range(1, traj.horizon) if not traj.actions[t].any() and traj.values[t - 1, 0, 0] > 0]
    traj.values[hh[0], 0, 0] = traj.values[hh[0] - 1, 0, 0] - 0.1
    v = oracle.check_lemma2_3(traj)
    v.claim = "injected_fault"
    v.witness["injected"] = {"round": hh[0], "player": 0}
    return v


def run_verify(cfg: dict, out: Path) -> tuple[dict, bool]:
    names = SUITES if cfg["suite"] == "all" else (cfg["suite"],)
    verdicts = []
    for name in names:
        verdicts.extend(run_suite(name, int(cfg["trials"]), int(cfg["rounds"]), int(cfg["seed"]),
                                  int(cfg["mc_trials"])))
    if cfg["inject_fault"]:
        verdicts.append(injected_fault())
    files = {}
    lines = []
    for v in verdicts:
        locator = "-"
        if not v.passed:
            wpath = atomic_write(out / f"witness_{v.claim}.json", json.dumps(v.witness, indent=2, sort_keys=True, default=str))
            files[f"witness_{v.claim}"] = wpath
            locator = str(wpath)
        lines.append("\t".join(x for x in (v.claim, v.status, locator, _brief(v.stats), v.note) if x))
    report = "\n".join(lines) + "\n"
    files["report"] = atomic_write(out / "report.txt", report)
    files["verdicts"] = atomic_write(out / "verdicts.json", json.dumps([v.to_mapping() for v in verdicts],
                                                                       indent=2, sort_keys=True, default=_jsonable))
    sys.stdout.write(report)
    ok = all(v.passed for v in verdicts)
    return {"files": files, "rounds": 0, "summary": {"passed": sum(v.passed for v in verdicts),
                                                    "total": len(verdicts)}}, ok


def _brief(stats: dict) -> str:
    """Scalar stats at 4 significant digits for the human-readable report."""
    parts = []
    for k, x in sorted(stats.items()):
        if isinstance(x, (bool, np.bool_)) or x is None:
            continue
        if isinstance(x, (int, float, np.integer, np.floating)):
            parts.append(f"{k}={x:.4g}")
    return " ".join(parts)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return str(x)


# --- plumbing -----------------------------------------------------------------------


RUNNERS = {"play": run_play, "sweep": run_sweep}


def execute(command: str, cfg: dict, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    ok = True
    if command == "verify":
        result, ok = run_verify(cfg, out)
    else:
        result = RUNNERS[command](cfg, out)
    manifest = {
        "command": command,
        "config": cfg,
        "master_seed": cfg.get("seed"),
        "version": __version__,
        "outputs": {k: {"path": str(Path(p).name), "sha256": sha256_file(p)} for k, p in result["files"].items()},
        "rounds_played": result["rounds"],
        "wall_clock_seconds": round(time.perf_counter() - start, 3),
        "summary": result.get("summary", {}),
    }
    write_manifest(out / "manifest.json", json.loads(json.dumps(manifest, default=_jsonable)))
    if command != "verify":
        for k, p in result["files"].items():
            print(f"{k}: {p}")
    return EXIT_OK if ok else EXIT_ORACLE


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with flat key/value settings")
    p.add_argument("--seed", type=int, help="master seed (also NAIVE_COLLUSION_SEED)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--print-config", action="store_true", help="print resolved settings and exit")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="naive-collusion", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    play = sub.add_parser("play", help="play one game and write its trajectory")
    _add_common(play)
    play.add_argument("--alg", choices=ALGORITHMS)
    play.add_argument("--epsilon", type=float)
    play.add_argument("--eta", type=float)
    play.add_argument("--delta", type=float)
    play.add_argument("--tie-break", dest="tie_break", choices=("first", "last", "random"))
    play.add_argument("--alg1", choices=ALGORITHMS, help="agent 1 algorithm (default: same as agent 0)")
    play.add_argument("--epsilon1", type=float)
    play.add_argument("--eta1", type=float)
    play.add_argument("--delta1", type=float)
    play.add_argument("--tie-break1", dest="tie_break1", choices=("first", "last", "random"))
    play.add_argument("--beta", type=float)
    play.add_argument("--gamma", type=float)
    play.add_argument("--rounds", type=int)

    sweep = sub.add_parser("sweep", help="collusion-proportion heatmaps over a parameter grid")
    _add_common(sweep)
    sweep.add_argument("--kind", choices=("beta-gamma", "delta"))
    sweep.add_argument("--alg", choices=ALGORITHMS)
    sweep.add_argument("--epsilon", type=float, nargs="+", help="one panel per value")
    sweep.add_argument("--eta", type=float, nargs="+", help="one panel per value")
    sweep.add_argument("--delta", type=float, nargs="+", help="one panel per value")
    sweep.add_argument("--tie-break", dest="tie_break", choices=("first", "last", "random"))
    sweep.add_argument("--payoffs", nargs="+", help="delta grids: BETA,GAMMA per panel")
    sweep.add_argument("--axis0", type=float, nargs=3, metavar=("LO", "HI", "N"))
    sweep.add_argument("--axis1", type=float, nargs=3, metavar=("LO", "HI", "N"))
    sweep.add_argument("--trials", type=int)
    sweep.add_argument("--rounds", type=int)
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--format", choices=("csv", "svg", "both"))

    verify = sub.add_parser("verify", help="check the analytical claims against simulation")
    _add_common(verify)
    verify.add_argument("--suite", choices=("all",) + SUITES)
    verify.add_argument("--trials", type=int)
    verify.add_argument("--rounds", type=int)
    verify.add_argument("--mc-trials", dest="mc_trials", type=int)
    verify.add_argument("--inject-fault", dest="inject_fault", action="store_true",
                        help="add a deliberately broken trajectory (tests the failure path)")

    export = sub.add_parser("export", help="replay the run recorded in a manifest")
    export.add_argument("manifest")
    export.add_argument("--out", required=True, help="directory for the regenerated files")
    return parser


DEFAULTS = {"play": PLAY_DEFAULTS, "sweep": SWEEP_DEFAULTS, "verify": VERIFY_DEFAULTS}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "export":
            manifest = read_manifest(args.manifest)
            return execute(manifest["command"], manifest["config"], Path(args.out))
        cfg = resolve(DEFAULTS[args.command], args)
        if args.command == "verify" and cfg["suite"] not in ("all",) + SUITES:
            raise UsageError(f"unknown suite {cfg['suite']!r}")
        if args.command == "play":
            build_game(cfg)
        elif args.command == "sweep":
            build_grids(cfg)
        if args.print_config:
            print(json.dumps(cfg, indent=2, sort_keys=True))
            return EXIT_OK
        out = Path(args.out or f"{args.command}-out")
        return execute(args.command, cfg, out)
    except (UsageError, ValueError, TypeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
