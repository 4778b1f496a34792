"""Compiled episode loops.

Every trajectory-determining float operation here goes through the same
primitives in _numeric that the estimator class uses, in the same order, so
a kernel episode and a class-driven episode produce bit-identical
trajectories.  The finite-arm forecaster loop is the one exception: its
weight updates call the library exp directly, which is only guaranteed to
match the interpreted path statistically.
"""
import numpy as np
from numba import njit

from . import _numeric


@njit(cache=True)
def swucb_span(thetas, sets3d, sizes, set_idx, noise, start, length, window,
               ridge, beta, refresh_every, action_out, reward_out, regret_out):
    """Run a windowed-UCB learner over rounds [start, start+length).

    State starts empty (gram = ridge * I).  Outputs land in the global round
    slots of the out arrays.  Returns the realized reward sum of the span,
    or NaN if a factorization failed.
    """
    d = thetas.shape[1]
    gram = np.zeros((d, d))
    for i in range(d):
        gram[i, i] = ridge
    moment = np.zeros(d)
    buf_x = np.zeros((window, d))
    buf_y = np.zeros(window)
    lo = np.zeros((d, d))
    theta = np.zeros(d)
    z = np.zeros(d)
    tmp = np.zeros(d)
    head = 0
    count = 0
    pushes = 0
    total = 0.0
    for r in range(length):
        t = start + r
        si = set_idx[t]
        kk = sizes[si]
        acts = sets3d[si]
        if not _numeric.chol_factor(gram, lo):
            return np.nan
        _numeric.chol_solve(lo, moment, theta)
        i = _numeric.best_ucb_index(lo, theta, acts, kk, beta, z)
        x = acts[i]
        tht = thetas[t]
        mean = _numeric.vdot(x, tht)
        y = mean + noise[t]
        bi = _numeric.best_mean_index(tht, acts, kk)
        action_out[t] = i
        reward_out[t] = y
        regret_out[t] = _numeric.vdot(acts[bi], tht) - mean
        total += y
        head, count = _numeric.push_obs(gram, moment, buf_x, buf_y,
                                        head, count, x, y, tmp)
        pushes += 1
        if pushes % refresh_every == 0:
            _numeric.rebuild(gram, moment, buf_x, buf_y, head, count, ridge)
    return total


@njit(cache=True)
def exp3s_episode(thetas, noise, uniforms, gamma, mix,
                  action_out, reward_out, regret_out):
    """Finite-arm forecaster episode on the standard-basis decision set:
    arm i's mean reward in round t is thetas[t, i]."""
    horizon, d = thetas.shape
    w = np.ones(d)
    for t in range(horizon):
        th = thetas[t]
        s = 0.0
        for i in range(d):
            s += w[i]
        pick = d - 1
        c = 0.0
        for i in range(d):
            c += (1.0 - gamma) * (w[i] / s) + gamma / d
            if uniforms[t] < c:
                pick = i
                break
        p_pick = (1.0 - gamma) * (w[pick] / s) + gamma / d
        y = th[pick] + noise[t]
        bv = th[0]
        for i in range(1, d):
            if th[i] > bv:
                bv = th[i]
        action_out[t] = pick
        reward_out[t] = y
        regret_out[t] = bv - th[pick]
        g = 0.5 * (y + 1.0)
        if g < 0.0:
            g = 0.0
        elif g > 1.0:
            g = 1.0
        w[pick] *= np.exp(gamma * (g / p_pick) / d)
        tot = 0.0
        for i in range(d):
            tot += w[i]
        add = (np.e * mix / d) * tot
        m = 0.0
        for i in range(d):
            w[i] += add
            if w[i] > m:
                m = w[i]
        if m > 1e100:
            for i in range(d):
                w[i] /= m
