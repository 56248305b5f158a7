import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from naive_collusion.bandit import History, TieBreak, record
from naive_collusion.game import Action, PayoffParams
from naive_collusion.policies import (
    BehaviorPolicy,
    ConstantConfig,
    EpsilonDecayConfig,
    EpsilonGreedyConfig,
    ExploreFirstConfig,
    UcbConfig,
    WinStayLoseShiftConfig,
    behavior_distribution,
    ed_distribution,
    eg_distribution,
    epsilon_at,
    is_deterministic,
    is_path_invariant,
    ucb_collusion_delta_bound,
    ucb_delta_bound_detailed,
    ucb_score,
    ucb_select,
)

H, L = Action.H, Action.L
unit = st.floats(0.001, 0.999)


class TestConfigs:
    @pytest.mark.parametrize("make", [lambda: EpsilonGreedyConfig(0.0), lambda: EpsilonGreedyConfig(1.0),
                                      lambda: EpsilonDecayConfig(1.0), lambda: UcbConfig(0.0),
                                      lambda: UcbConfig(1.5), lambda: UcbConfig(0.1, "sideways")])
    def test_invalid(self, make):
        with pytest.raises(ValueError):
            make()

    def test_ucb_delta_one_allowed(self):
        assert UcbConfig(1.0).delta == 1.0

    def test_tie_break_from_string(self):
        assert UcbConfig(0.1, "last").tie_break is TieBreak.LAST

    def test_classification(self):
        assert is_deterministic(UcbConfig(0.1, "first"))
        assert not is_deterministic(UcbConfig(0.1, "random"))
        assert not is_deterministic(EpsilonGreedyConfig(0.1, "first"))
        assert is_deterministic(ExploreFirstConfig())
        assert not is_path_invariant(WinStayLoseShiftConfig())
        assert is_path_invariant(EpsilonDecayConfig(0.99))

    def test_behavior_policy_range(self):
        with pytest.raises(ValueError):
            BehaviorPolicy(1.5)
        assert BehaviorPolicy(1.0).degenerate and not BehaviorPolicy(0.5).degenerate


class TestEpsilonGreedy:
    def test_greedy_h(self):
        h = History.from_pairs([(H, 0.57), (L, 0.3)])
        pol = eg_distribution(h, EpsilonGreedyConfig(0.1))
        assert pol.probability(H) == pytest.approx(0.95, abs=1e-15)
        assert pol.probability(L) == pytest.approx(0.05, abs=1e-15)

    @pytest.mark.parametrize("eps", [0.05, 0.3, 0.9])
    def test_tie_first(self, eps):
        pol = eg_distribution(History(), EpsilonGreedyConfig(eps, "first"))
        assert pol.p_h == pytest.approx(1 - eps / 2, abs=1e-15)

    def test_greedy_l(self):
        h = History.from_pairs([(H, 0.0), (L, 1.0)])
        assert eg_distribution(h, EpsilonGreedyConfig(0.2)).p_h == pytest.approx(0.10, abs=1e-15)

    def test_random_tie_is_uniform(self):
        # marginal over the tie coin: half the time each action is greedy
        assert eg_distribution(History(), EpsilonGreedyConfig(0.2, "random")).p_h == pytest.approx(0.5)

    @given(unit, st.floats(0, 1), st.floats(0, 1))
    def test_sums_to_one(self, eps, rh, rl):
        h = History.from_pairs([(H, rh), (L, rl)])
        pol = eg_distribution(h, EpsilonGreedyConfig(eps, "first"))
        assert pol.probability(H) + pol.probability(L) == pytest.approx(1.0, abs=1e-12)
        greedy = H if rh >= rl - 1e-12 else L
        assert pol.probability(greedy) == pytest.approx(1 - eps / 2, abs=1e-15)


class TestEpsilonDecay:
    def test_start(self):
        assert epsilon_at(EpsilonDecayConfig(0.37), 0) == 1.0
        assert ed_distribution(History(), EpsilonDecayConfig(0.999, "first"), t=0).p_h == 0.5

    def test_late_greedy_l(self):
        cfg = EpsilonDecayConfig(0.999)
        h = History.from_pairs([(H, 0.0), (L, 1.0)])
        pol = ed_distribution(h, cfg, t=10_000)
        assert pol.p_h == pytest.approx(0.999**10_000 / 2, rel=1e-9)
        assert f"{pol.p_h:.2e}" == "2.26e-05"

    def test_half(self):
        h = History.from_pairs([(H, 1.0), (L, 0.0)])
        assert ed_distribution(h, EpsilonDecayConfig(0.5), t=1).p_h == 0.75

    def test_default_round_is_history_length(self):
        cfg = EpsilonDecayConfig(0.5)
        h = History.from_pairs([(H, 1.0), (L, 0.0), (H, 1.0)])
        assert ed_distribution(h, cfg).p_h == ed_distribution(h, cfg, t=3).p_h == 1 - 0.125 / 2

    @given(st.floats(0.01, 0.9999), st.integers(0, 3000))
    def test_recurrence_exact(self, eta, t):
        cfg = EpsilonDecayConfig(eta)
        assert epsilon_at(cfg, t + 1) == eta * epsilon_at(cfg, t)
        assert epsilon_at(cfg, t + 1) <= epsilon_at(cfg, t)

    def test_schedule_close_to_power(self):
        cfg = EpsilonDecayConfig(0.999)
        assert epsilon_at(cfg, 10_000) == pytest.approx(0.999**10_000, rel=1e-10)


class TestUcb:
    def test_unsampled_infinite(self):
        assert ucb_score(History(), H, UcbConfig(0.1)) == math.inf

    def test_single_play(self):
        h = History.from_pairs([(H, 0.6)])
        assert ucb_score(h, H, UcbConfig(0.1)) == pytest.approx(0.6 + math.sqrt(2 * math.log(10)), abs=1e-12)
        assert ucb_score(h, H, UcbConfig(0.1)) == pytest.approx(2.74597, abs=5e-6)

    def test_delta_one_no_bonus(self):
        h = History.from_pairs([(H, 0.6), (H, 0.0), (L, 0.3)])
        assert ucb_score(h, H, UcbConfig(1.0)) == 0.3
        assert ucb_score(h, L, UcbConfig(1.0)) == 0.3

    def test_select_random_at_start(self, rng):
        cfg = UcbConfig(0.1, "random")
        n = 4000
        share = sum(ucb_select(History(), cfg, rng) is H for _ in range(n)) / n
        assert abs(share - 0.5) < 3 * math.sqrt(0.25 / n)

    def test_select_higher(self):
        # H: 0.6 + bonus(1); L: two plays, smaller bonus
        h = History.from_pairs([(H, 0.6), (L, 0.3), (L, 0.3)])
        cfg = UcbConfig(0.1, "last")
        assert ucb_score(h, H, cfg) > ucb_score(h, L, cfg)
        assert ucb_select(h, cfg) is H

    def test_after_hl_opening(self):
        # player 0 played H and got 0: finite score for H, L still unsampled
        h = History.from_pairs([(H, 0.0)])
        cfg = UcbConfig(0.1, "first")
        assert ucb_score(h, H, cfg) == pytest.approx(math.sqrt(2 * math.log(10)))
        assert ucb_select(h, cfg) is L

    @given(st.floats(0.0, 1.0), st.integers(1, 500), st.floats(0.01, 0.99))
    def test_decreasing_in_count(self, v, n, delta):
        cfg = UcbConfig(delta)
        a = History.from_pairs([(H, v)] * n)
        b = History.from_pairs([(H, v)] * (n + 1))
        assert ucb_score(b, H, cfg) < ucb_score(a, H, cfg)

    @given(st.lists(st.tuples(st.sampled_from([H, L]), st.floats(0.0, 1.0)), min_size=2, max_size=20),
           st.floats(0.05, 1.0), unit)
    def test_value_order_survives_scaling(self, pairs, c, delta):
        h = History.from_pairs(pairs)
        scaled = History.from_pairs([(a, r * c) for a, r in pairs])
        cfg = UcbConfig(delta)
        vh, vl = [ucb_score(h, a, UcbConfig(1.0)) for a in (H, L)]
        sh, sl = [ucb_score(scaled, a, UcbConfig(1.0)) for a in (H, L)]
        assume(abs(vh - vl) > 1e-9 and math.isfinite(vh) and math.isfinite(vl))
        assert (vh > vl) == (sh > sl)
        # the bonus depends on counts and delta only
        bonus = [ucb_score(h, a, cfg) - ucb_score(h, a, UcbConfig(1.0)) for a in (H, L)]
        bonus_s = [ucb_score(scaled, a, cfg) - ucb_score(scaled, a, UcbConfig(1.0)) for a in (H, L)]
        assert bonus == pytest.approx(bonus_s, abs=1e-12)


class TestDeltaBounds:
    def test_values(self):
        assert ucb_collusion_delta_bound(0.3) == pytest.approx(math.exp(-0.045), abs=1e-15)
        assert ucb_collusion_delta_bound(0.3) == pytest.approx(0.95600, abs=5e-6)
        assert ucb_collusion_delta_bound(0.5) == pytest.approx(0.88250, abs=5e-6)
        assert ucb_collusion_delta_bound(1e-9) == pytest.approx(1.0)

    @pytest.mark.parametrize("g", [0.0, 1.0, -0.2])
    def test_domain(self, g):
        with pytest.raises(ValueError):
            ucb_collusion_delta_bound(g)

    @given(unit, unit)
    def test_strictly_decreasing_and_in_range(self, g0, g1):
        assume(g0 < g1)
        b0, b1 = ucb_collusion_delta_bound(g0), ucb_collusion_delta_bound(g1)
        assert b0 > b1
        assert math.exp(-0.5) < b1 < 1.0

    @given(unit, st.floats(0.0, 0.9999))
    def test_bonus_exceeds_gamma_below_bound(self, g, frac):
        delta = ucb_collusion_delta_bound(g) * frac
        assume(delta > 0)
        assert math.sqrt(2 * math.log(1 / delta)) > g

    def test_detailed(self):
        p = PayoffParams(0.6, 0.3)
        assert ucb_delta_bound_detailed(p, 0) == pytest.approx(math.exp(-0.045), abs=1e-15)
        assert ucb_delta_bound_detailed(p, 2) == 1.0
        # s0 = 1 sits on the threshold gamma/(beta-gamma) = 1: exponent is zero
        assert ucb_delta_bound_detailed(p, 1) == pytest.approx(1.0)

    @given(st.floats(0.01, 0.98), st.floats(0.01, 0.99))
    def test_detailed_nondecreasing(self, g, frac):
        b = g + (1 - g) * frac
        assume(1 > b > g)
        p = PayoffParams(b, g)
        seq = [ucb_delta_bound_detailed(p, s) for s in range(60)]
        assert all(x <= y + 1e-15 for x, y in zip(seq, seq[1:]))
        assert seq[0] == pytest.approx(ucb_collusion_delta_bound(g), abs=1e-15)


class TestTestAgents:
    def test_constant(self):
        assert behavior_distribution(ConstantConfig(L), History()).p_h == 0.0

    def test_explore_first(self):
        cfg = ExploreFirstConfig()
        h = History()
        assert behavior_distribution(cfg, h).p_h == 1.0
        record(h, H, 0.0)
        assert behavior_distribution(cfg, h).p_h == 0.0
        record(h, L, 0.3)
        assert behavior_distribution(cfg, h).p_h == 0.0

    def test_win_stay_lose_shift_is_order_dependent(self):
        cfg = WinStayLoseShiftConfig(0.5)
        a = History.from_pairs([(H, 0.6), (L, 1.0)])
        b = History.from_pairs([(L, 1.0), (H, 0.6)])
        assert behavior_distribution(cfg, a).p_h != behavior_distribution(cfg, b).p_h

    def test_random_tie_needs_no_rng_for_marginal(self):
        pol = behavior_distribution(UcbConfig(0.1, "random"), History())
        assert pol.p_h == 0.5 and not pol.degenerate
        assert np.isclose(behavior_distribution(UcbConfig(0.1, "first"), History()).p_h, 1.0)
