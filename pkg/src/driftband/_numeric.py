"""Jitted small-matrix kernels shared by the estimator and the episode runners.

Everything here is written as plain float64 loops and compiled without
fastmath, so results are bit-identical whether a routine is called from
Python-level code or inlined into another jitted function.  The episode
runners in _episodes.py rely on that: they must reproduce the estimator
class's arithmetic exactly.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def vdot(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


@njit(cache=True)
def chol_factor(a, lo):
    """Lower-triangular Cholesky factor of symmetric PD ``a`` into ``lo``.

    Returns False (instead of raising) when a pivot is not strictly
    positive, which also catches NaN.  Only the lower triangle of ``lo``
    is written; callers must not read above the diagonal.
    """
    d = a.shape[0]
    for j in range(d):
        s = a[j, j]
        for k in range(j):
            s -= lo[j, k] * lo[j, k]
        if not (s > 0.0):
            return False
        piv = np.sqrt(s)
        lo[j, j] = piv
        for i in range(j + 1, d):
            t = a[i, j]
            for k in range(j):
                t -= lo[i, k] * lo[j, k]
            lo[i, j] = t / piv
    return True


@njit(cache=True)
def chol_solve(lo, rhs, out):
    """Solve (lo lo^T) out = rhs in place via forward and back substitution."""
    d = lo.shape[0]
    for i in range(d):
        s = rhs[i]
        for k in range(i):
            s -= lo[i, k] * out[k]
        out[i] = s / lo[i, i]
    for i in range(d - 1, -1, -1):
        s = out[i]
        for k in range(i + 1, d):
            s -= lo[k, i] * out[k]
        out[i] = s / lo[i, i]


@njit(cache=True)
def inv_quad(lo, x, z):
    """x^T A^{-1} x for A = lo lo^T, through one forward solve (no inverse)."""
    d = lo.shape[0]
    for i in range(d):
        s = x[i]
        for k in range(i):
            s -= lo[i, k] * z[k]
        z[i] = s / lo[i, i]
    q = 0.0
    for i in range(d):
        q += z[i] * z[i]
    return q


@njit(cache=True)
def push_obs(gram, moment, buf_x, buf_y, head, count, x, y, tmp):
    """Append (x, y) to the circular window, evicting the oldest pair when full.

    Rank-one add of the new pair happens before the rank-one subtract of the
    evicted pair; rebuild() and the episode runners follow the same order.
    Returns the updated (head, count).
    """
    d = x.shape[0]
    w = buf_x.shape[0]
    for i in range(d):
        moment[i] += x[i] * y
        for j in range(d):
            gram[i, j] += x[i] * x[j]
    if count == w:
        oy = buf_y[head]
        for i in range(d):
            tmp[i] = buf_x[head, i]
        for i in range(d):
            moment[i] -= tmp[i] * oy
            for j in range(d):
                gram[i, j] -= tmp[i] * tmp[j]
        for i in range(d):
            buf_x[head, i] = x[i]
        buf_y[head] = y
        head = (head + 1) % w
    else:
        slot = (head + count) % w
        for i in range(d):
            buf_x[slot, i] = x[i]
        buf_y[slot] = y
        count += 1
    return head, count


@njit(cache=True)
def rebuild(gram, moment, buf_x, buf_y, head, count, ridge):
    """Recompute gram = ridge*I + sum x x^T and moment from the stored window.

    Accumulates oldest to newest; cancels float drift from long runs of
    incremental add/subtract updates.
    """
    d = gram.shape[1]
    w = buf_x.shape[0]
    for i in range(d):
        moment[i] = 0.0
        for j in range(d):
            gram[i, j] = 0.0
        gram[i, i] = ridge
    for k in range(count):
        idx = (head + k) % w
        yv = buf_y[idx]
        for i in range(d):
            xi = buf_x[idx, i]
            moment[i] += xi * yv
            for j in range(d):
                gram[i, j] += xi * buf_x[idx, j]


@njit(cache=True)
def best_ucb_index(lo, theta, actions, kk, beta, z):
    """Index of the UCB-maximizing row among actions[:kk]; first max wins."""
    best = -np.inf
    best_j = 0
    for a in range(kk):
        x = actions[a]
        sc = vdot(x, theta) + beta * np.sqrt(inv_quad(lo, x, z))
        if sc > best:
            best = sc
            best_j = a
    return best_j


@njit(cache=True)
def best_mean_index(theta, actions, kk):
    """Index of the row of actions[:kk] maximizing <x, theta>; first max wins."""
    best = -np.inf
    best_j = 0
    for a in range(kk):
        v = vdot(actions[a], theta)
        if v > best:
            best = v
            best_j = a
    return best_j
