import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from naive_collusion.game import (
    OUTCOMES,
    Action,
    Outcome,
    PayoffParams,
    outcome_from_index,
    outcome_index,
    reward,
)

H, L = Action.H, Action.L


@st.composite
def payoffs(draw):
    g = draw(st.floats(1e-6, 1 - 2e-6))
    b = draw(st.floats(g + 1e-7, 1 - 1e-7))
    return PayoffParams(b, g)


class TestPayoffParams:
    @pytest.mark.parametrize("beta,gamma", [(0.3, 0.6), (0.5, 0.5), (1.0, 0.3), (0.6, 0.0), (0.6, -0.1)])
    def test_rejects_invalid(self, beta, gamma):
        with pytest.raises(ValueError, match="1 > beta > gamma > 0"):
            PayoffParams(beta, gamma)

    def test_immutable(self, params):
        with pytest.raises(AttributeError):
            params.beta = 0.7


class TestReward:
    def test_table(self, params):
        assert reward(params, Outcome(H, H)) == (0.6, 0.6)
        assert reward(params, Outcome(H, L)) == (0.0, 1.0)
        assert reward(params, Outcome(L, H)) == (1.0, 0.0)
        assert reward(params, Outcome(L, L)) == (0.3, 0.3)

    @given(payoffs())
    def test_bounds_dominance_and_pareto(self, p):
        for o in OUTCOMES:
            assert all(0.0 <= r <= 1.0 for r in reward(p, o))
        for opp in (H, L):
            # player 0 gains by switching H -> L whatever the opponent does
            assert reward(p, Outcome(L, opp))[0] > reward(p, Outcome(H, opp))[0]
            assert reward(p, Outcome(opp, L))[1] > reward(p, Outcome(opp, H))[1]
        hh, ll = reward(p, Outcome(H, H)), reward(p, Outcome(L, L))
        assert hh[0] > ll[0] and hh[1] > ll[1]


class TestOutcomeIndex:
    def test_values(self):
        assert outcome_index(Outcome(H, H)) == 0
        assert outcome_index(Outcome(H, L)) == 1
        assert outcome_index(Outcome(L, H)) == 2
        assert outcome_index(Outcome(L, L)) == 3

    def test_bijection(self, params):
        seen = {outcome_index(Outcome(a, b)) for a, b in itertools.product(Action, Action)}
        assert seen == {0, 1, 2, 3}
        table = params.reward_table()
        for k in range(4):
            o = outcome_from_index(k)
            assert outcome_index(o) == k
            assert reward(params, o) == table[k]

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            outcome_from_index(4)

    @pytest.mark.parametrize("text", ["HL", "(H,L)", "h,l"])
    def test_parse(self, text):
        assert Outcome.parse(text) == Outcome(H, L)
        assert str(Outcome.parse(text)) == "(H,L)"

    def test_other(self):
        assert H.other is L and L.other is H
