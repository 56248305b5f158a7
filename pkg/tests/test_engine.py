import numpy as np
import pytest

from naive_collusion.bandit import History, TieBreak
from naive_collusion.engine import (
    HH,
    RECORD_ENDPOINTS,
    Agent,
    AgentSpec,
    GameConfig,
    Regime,
    Trajectory,
    classify_regime,
    collusion_onset,
    collusion_onset_from_regimes,
    derive_seed,
    game_uniforms,
    is_collusive_ending,
    make_rng,
    play_game,
    with_record,
)
from naive_collusion.game import Action, Outcome
from naive_collusion.markov import StateVector
from naive_collusion.policies import (
    ConstantConfig,
    EpsilonDecayConfig,
    EpsilonGreedyConfig,
    ExploreFirstConfig,
    UcbConfig,
    WinStayLoseShiftConfig,
)

H, L = Action.H, Action.L

MIXED = [
    (EpsilonGreedyConfig(0.1), EpsilonGreedyConfig(0.1)),
    (EpsilonGreedyConfig(0.3, "first"), EpsilonDecayConfig(0.99, "last")),
    (EpsilonDecayConfig(0.999), EpsilonDecayConfig(0.995)),
    (UcbConfig(0.1, "random"), UcbConfig(0.1, "random")),
    (UcbConfig(0.5, "first"), UcbConfig(0.9, "last")),
    (UcbConfig(0.2), EpsilonGreedyConfig(0.05)),
    (ExploreFirstConfig(), ExploreFirstConfig("random")),
    (ConstantConfig(H), UcbConfig(0.3)),
]


class TestPlayGame:
    def test_ucb_opening(self, params):
        traj = play_game(GameConfig.build(params, UcbConfig(0.1, "first"), horizon=4))
        assert [str(o) for o in traj.outcomes[:3]] == ["(H,H)", "(L,L)", "(H,H)"]
        assert tuple(traj.states()[1]) == (1, 0, 0, 1)
        # round 3: H scores 0.6 + sqrt(ln 10) = 2.117, L scores 0.3 + sqrt(2 ln 10) = 2.446,
        # so both explore L again; the targets stay (H,H) throughout
        assert str(traj.outcomes[3]) == "(L,L)"
        assert [str(r) for r in traj.regime_list()] == ["HH"] * 4
        assert traj.final_state.round == 4

    def test_constant_agents(self, params):
        traj = play_game(GameConfig.build(params, ConstantConfig(H), ConstantConfig(L), horizon=3))
        assert [str(o) for o in traj.outcomes] == ["(H,L)"] * 3
        assert list(traj.rewards[:, 0]) == [0.0, 0.0, 0.0]

    def test_asymmetric_tie_opening(self, params):
        traj = play_game(GameConfig.build(params, UcbConfig(0.1, "first"), UcbConfig(0.1, "last"), horizon=2))
        assert [str(o) for o in traj.outcomes] == ["(H,L)", "(L,H)"]
        assert traj.final_state.counts == (0, 1, 1, 0)

    @pytest.mark.parametrize("c0,c1", MIXED)
    def test_backends_bit_identical(self, params, c0, c1):
        cfg = GameConfig.build(params, c0, c1, horizon=3000, master_seed=derive_seed(5, hash(c0.name) % 97))
        fast = play_game(cfg, backend="fast")
        ref = play_game(cfg, backend="reference")
        np.testing.assert_array_equal(fast.actions, ref.actions)
        np.testing.assert_array_equal(fast.regimes, ref.regimes)
        np.testing.assert_allclose(fast.values, ref.values, rtol=0, atol=1e-13)
        assert fast.final_state == ref.final_state
        assert fast.final_regime == ref.final_regime
        assert fast.last_non_hh == ref.last_non_hh
        assert is_collusive_ending(fast) == is_collusive_ending(ref)

    @pytest.mark.parametrize("backend", ["fast", "reference"])
    def test_deterministic(self, params, backend):
        cfg = GameConfig.build(params, EpsilonGreedyConfig(0.2), horizon=2000, master_seed=99)
        a, b = play_game(cfg, backend), play_game(cfg, backend)
        assert a.actions.tobytes() == b.actions.tobytes()
        assert a.values.tobytes() == b.values.tobytes()

    def test_seeds_matter(self, params):
        a = play_game(GameConfig.build(params, EpsilonGreedyConfig(0.5), horizon=200, master_seed=1))
        b = play_game(GameConfig.build(params, EpsilonGreedyConfig(0.5), horizon=200, master_seed=2))
        assert not np.array_equal(a.actions, b.actions)

    def test_endpoint_recording(self, params):
        cfg = GameConfig.build(params, UcbConfig(0.4), horizon=1500, master_seed=4)
        full = play_game(cfg)
        ends = play_game(with_record(cfg, RECORD_ENDPOINTS))
        assert ends.actions is None and ends.values is None
        np.testing.assert_array_equal(full.values[-1], ends.final_values)
        assert full.final_state == ends.final_state
        with pytest.raises(ValueError):
            ends.outcomes

    def test_trajectory_lengths(self, params):
        traj = play_game(GameConfig.build(params, EpsilonDecayConfig(0.99), horizon=321, master_seed=3))
        assert traj.actions.shape == (321, 2) and traj.values.shape == (321, 2, 2)
        assert len(traj.regime_list()) == 321
        assert tuple(traj.states()[-1]) == traj.final_state.counts
        assert traj.final_state.round == 321

    def test_order_dependent_agent_uses_reference(self, params):
        traj = play_game(GameConfig.build(params, WinStayLoseShiftConfig(), horizon=20))
        assert traj.actions.shape == (20, 2)
        with pytest.raises(TypeError):
            play_game(GameConfig.build(params, WinStayLoseShiftConfig(), horizon=5), backend="fast")

    def test_forced_opening(self, params):
        cfg = GameConfig.build(params, UcbConfig(0.1, "first"), horizon=3)
        traj = play_game(cfg, forced=[Outcome(L, H)])
        assert str(traj.outcomes[0]) == "(L,H)"
        assert str(traj.outcomes[1]) == "(H,L)"
        with pytest.raises(ValueError):
            play_game(cfg, backend="fast", forced=[Outcome(L, H)])

    def test_ucb_in_bound_colludes(self, params):
        assert is_collusive_ending(play_game(GameConfig.build(params, UcbConfig(0.1), horizon=10_000, master_seed=7)))

    def test_epsilon_greedy_competes(self, params):
        ends = [is_collusive_ending(play_game(GameConfig.build(params, EpsilonGreedyConfig(0.1), horizon=10_000,
                                                               master_seed=k, record=RECORD_ENDPOINTS)))
                for k in range(20)]
        assert sum(ends) <= 1


class TestRandomness:
    def test_bulk_equals_per_round_draws(self, params):
        cfg = GameConfig.build(params, UcbConfig(0.1), horizon=50, master_seed=8)
        bulk = game_uniforms(cfg)
        for i, spec in enumerate(cfg.agents):
            rng = make_rng(spec.seed)
            per_round = np.array([rng.random(2) for _ in range(51)])
            np.testing.assert_array_equal(bulk[:, i, :], per_round)

    def test_agent_streams_differ(self):
        assert derive_seed(0, 0) != derive_seed(0, 1)
        assert derive_seed(3, 1, 2) == derive_seed(3, 1, 2)
        assert 0 <= derive_seed(2**40, 5) < 2**64

    def test_agent_sees_only_own_rewards(self, params):
        # replaying agent 0 alone on its own reward stream reproduces its actions
        cfg = GameConfig.build(params, EpsilonGreedyConfig(0.3), UcbConfig(0.2), horizon=400, master_seed=12)
        traj = play_game(cfg)
        solo = Agent(cfg.agents[0])
        for t in range(cfg.horizon):
            assert solo.act() == traj.actions[t, 0]
            solo.observe(traj.rewards[t, 0])


class TestSpecs:
    def test_mapping_round_trip(self, params):
        cfg = GameConfig.build(params, EpsilonDecayConfig(0.99, "last"), ConstantConfig(L), horizon=77, master_seed=4)
        assert GameConfig.from_mapping(cfg.to_mapping()) == cfg

    def test_unknown_algorithm(self):
        with pytest.raises(ValueError, match="unknown algorithm"):
            AgentSpec.from_mapping({"algorithm": "thompson", "seed": 1})

    def test_bad_horizon(self, params):
        with pytest.raises(ValueError):
            GameConfig.build(params, UcbConfig(0.1), horizon=0)


class TestClassification:
    def test_classify(self):
        a = History.from_pairs([(H, 0.6), (L, 0.3)])
        b = History.from_pairs([(H, 0.0), (L, 1.0)])
        assert classify_regime([a, a]) == Regime(H, H)
        assert classify_regime([b, a]) == Regime(L, H)
        assert classify_regime([History(), History()], TieBreak.FIRST) == HH
        assert str(classify_regime([History(), History()], ("first", "last"))) == "HL"

    def test_onset_from_regimes(self):
        assert collusion_onset_from_regimes(["LL", "LL", "HH", "HH", "HH"]) == 2
        assert collusion_onset_from_regimes(["HH", "LL", "HH"]) == 2
        assert collusion_onset_from_regimes(["HH", "HH", "LL"]) is None
        assert collusion_onset_from_regimes([]) is None

    def test_onset_matches_regime_list(self, params):
        for k in range(10):
            traj = play_game(GameConfig.build(params, UcbConfig(0.3), horizon=300, master_seed=k))
            regs = traj.regime_list() + [traj.final_regime]
            assert collusion_onset(traj) == collusion_onset_from_regimes(regs)

    def _fake(self, params, values):
        cfg = GameConfig.build(params, UcbConfig(0.1), horizon=1)
        return Trajectory(cfg, StateVector((1, 0, 0, 0)), np.array(values), HH, -1)

    def test_collusive_needs_strict(self, params):
        assert is_collusive_ending(self._fake(params, [[0.6, 0.3], [0.6, 0.3]]))
        assert not is_collusive_ending(self._fake(params, [[0.6, 0.6], [0.6, 0.3]]))
        assert not is_collusive_ending(self._fake(params, [[0.6, 0.3], [0.2, 0.3]]))
