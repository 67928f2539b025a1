"""Compiled coordinate-descent kernel for one lasso problem.

Solves ``min_g 0.5 g'Gg - b'g + lam |g|_1`` from a warm start, where
``G = diag(d) + s U U'``. Only ``v = U'g`` is kept in sync, so one
coordinate update costs ``O(k)`` for ``U`` of width ``k``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _update(e, lam, gamma, v, d, U, s, b, gdiag):
    ge = gamma[e]
    dot = 0.0
    for j in range(U.shape[1]):
        dot += U[e, j] * v[j]
    z = b[e] - (d[e] * ge + s * dot) + gdiag[e] * ge
    if z > lam:
        new = (z - lam) / gdiag[e]
    elif z < -lam:
        new = (z + lam) / gdiag[e]
    else:
        new = 0.0
    delta = new - ge
    if delta != 0.0:
        gamma[e] = new
        for j in range(U.shape[1]):
            v[j] += delta * U[e, j]
    return abs(delta) * np.sqrt(gdiag[e])


@njit(cache=True)
def gram_diagonal(d, U, s):
    m = d.shape[0]
    out = np.empty(m)
    for e in range(m):
        acc = 0.0
        for j in range(U.shape[1]):
            acc += U[e, j] * U[e, j]
        out[e] = d[e] + s * acc
    return out


@njit(cache=True)
def cd_solve(d, U, s, b, gdiag, lam, gamma, tol, max_sweeps):
    """Cyclic CD with active-set inner loops; updates ``gamma`` in place.

    Returns ``(sweeps, last_change)``; ``sweeps`` is -1 when the budget ran
    out. Coordinates with a vanishing diagonal are pinned at zero.
    """
    m = b.shape[0]
    k = U.shape[1]
    dmax = 0.0
    for e in range(m):
        if gdiag[e] > dmax:
            dmax = gdiag[e]
    floor = 1e-12 * max(dmax, 1e-300)

    v = np.zeros(k)
    for e in range(m):
        if gamma[e] != 0.0:
            for j in range(k):
                v[j] += U[e, j] * gamma[e]

    active = np.empty(m, dtype=np.int64)
    sweeps = 0
    while True:
        change = 0.0
        n_active = 0
        for e in range(m):
            if gdiag[e] <= floor:
                gamma[e] = 0.0
                continue
            c = _update(e, lam, gamma, v, d, U, s, b, gdiag)
            if c > change:
                change = c
            if gamma[e] != 0.0:
                active[n_active] = e
                n_active += 1
        sweeps += 1
        if change < tol:
            return sweeps, change
        if sweeps >= max_sweeps:
            return -1, change
        while True:
            change = 0.0
            for a in range(n_active):
                c = _update(active[a], lam, gamma, v, d, U, s, b, gdiag)
                if c > change:
                    change = c
            sweeps += 1
            if change < tol:
                break
            if sweeps >= max_sweeps:
                return -1, change
