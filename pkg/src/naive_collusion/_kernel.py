"""Compiled game loop.

Mirrors the reference agents in engine.py operation for operation, so both
backends produce bit-identical trajectories from the same uniforms. The
uniform array has shape (horizon + 1, 2, 2): [round, agent, (tie coin, action coin)];
the extra last row only feeds the tie coin of the final regime.
"""

import math

import numpy as np
from numba import njit

EG, ED, UCB, CONST, EXPLORE_FIRST = 0, 1, 2, 3, 4
TIE_FIRST, TIE_LAST, TIE_RANDOM = 0, 1, 2
TIE_TOL = 1e-12


@njit(cache=True)
def _resolve(vh, vl, tie, coin):
    if vh == vl or abs(vh - vl) <= TIE_TOL:
        if tie == TIE_FIRST:
            return 0
        if tie == TIE_LAST:
            return 1
        return 0 if coin < 0.5 else 1
    return 0 if vh > vl else 1


@njit(cache=True)
def _value(sums, counts, i, a):
    n = counts[i, a]
    if n == 0:
        return 0.0
    return sums[i, a] / n


@njit(cache=True)
def _p_h(code, param, tie, sums, counts, i, eps, coin):
    if code == CONST:
        return param
    if code == UCB:
        nh = counts[i, 0]
        nl = counts[i, 1]
        s_h = math.inf
        s_l = math.inf
        if nh > 0:
            s_h = sums[i, 0] / nh + math.sqrt(2.0 * math.log(1.0 / param) / nh)
        if nl > 0:
            s_l = sums[i, 1] / nl + math.sqrt(2.0 * math.log(1.0 / param) / nl)
        return 1.0 if _resolve(s_h, s_l, tie, coin) == 0 else 0.0
    vh = _value(sums, counts, i, 0)
    vl = _value(sums, counts, i, 1)
    if code == EXPLORE_FIRST:
        if counts[i, 0] == 0:
            return 1.0
        if counts[i, 1] == 0:
            return 0.0
        return 1.0 if _resolve(vh, vl, tie, coin) == 0 else 0.0
    g = _resolve(vh, vl, tie, coin)
    e = param if code == EG else eps
    explore = e / 2.0
    return 1.0 - explore if g == 0 else explore


@njit(cache=True)
def run_game(codes, params, ties, beta, gamma, horizon, u, record, actions, values, regimes):
    """Play one game. Returns (sums, counts, state, last_non_hh, final_regime)."""
    sums = np.zeros((2, 2))
    counts = np.zeros((2, 2), dtype=np.int64)
    state = np.zeros(4, dtype=np.int64)
    eps = np.ones(2)
    rew = np.array([[beta, beta], [0.0, 1.0], [1.0, 0.0], [gamma, gamma]])
    act = np.zeros(2, dtype=np.int64)
    greedy = np.zeros(2, dtype=np.int64)
    last_non_hh = -1
    for t in range(horizon):
        for i in range(2):
            coin = u[t, i, 0]
            greedy[i] = _resolve(_value(sums, counts, i, 0), _value(sums, counts, i, 1), ties[i], coin)
            p = _p_h(codes[i], params[i], ties[i], sums, counts, i, eps[i], coin)
            act[i] = 0 if u[t, i, 1] < p else 1
        for i in range(2):
            if codes[i] == ED:
                eps[i] = eps[i] * params[i]
        k = 2 * act[0] + act[1]
        state[k] += 1
        for i in range(2):
            sums[i, act[i]] += rew[k, i]
            counts[i, act[i]] += 1
        if greedy[0] != 0 or greedy[1] != 0:
            last_non_hh = t
        if record:
            for i in range(2):
                actions[t, i] = act[i]
                regimes[t, i] = greedy[i]
                values[t, i, 0] = _value(sums, counts, i, 0)
                values[t, i, 1] = _value(sums, counts, i, 1)
    final = np.zeros(2, dtype=np.int64)
    for i in range(2):
        final[i] = _resolve(_value(sums, counts, i, 0), _value(sums, counts, i, 1), ties[i], u[horizon, i, 0])
    return sums, counts, state, last_non_hh, final


@njit(cache=True)
def run_batch(codes, params, ties, beta, gamma, horizon, u_batch):
    """Endpoint-only play of many games. Returns (collusive flags, final states)."""
    n = u_batch.shape[0]
    flags = np.zeros(n, dtype=np.bool_)
    states = np.zeros((n, 4), dtype=np.int64)
    dummy_a = np.zeros((0, 2), dtype=np.int8)
    dummy_v = np.zeros((0, 2, 2))
    dummy_r = np.zeros((0, 2), dtype=np.int8)
    for j in range(n):
        sums, counts, state, _, _ = run_game(
            codes, params, ties, beta, gamma, horizon, u_batch[j], False, dummy_a, dummy_v, dummy_r
        )
        ok = True
        for i in range(2):
            if not (_value(sums, counts, i, 0) - _value(sums, counts, i, 1) > TIE_TOL):
                ok = False
        flags[j] = ok
        states[j] = state
    return flags, states
