"""Compiled inner loops for the two grid dynamic programs."""

import numba
import numpy as np


@numba.njit(cache=True)
def rembed_distance(rel, gx, gy, R0, Rm, Rp):
    """Minimal number of steps from each prefix pair (a, b) to (n, n').

    ``rel[a, b]`` says whether X[a] relates to Y[b]; ``gx``/``gy`` are good
    masks.  Unreachable states hold -1.
    """
    n = gx.shape[0]
    n2 = gy.shape[0]
    px = np.zeros(n + 1, np.int64)
    py = np.zeros(n2 + 1, np.int64)
    for a in range(n):
        px[a + 1] = px[a] + (1 if gx[a] else 0)
    for b in range(n2):
        py[b + 1] = py[b] + (1 if gy[b] else 0)
    dist = np.full((n + 1, n2 + 1), -1, np.int32)
    dist[n, n2] = 0
    for a in range(n, -1, -1):
        for b in range(n2, -1, -1):
            if a == n and b == n2:
                continue
            best = -1
            if a < n and b < n2 and rel[a, b]:
                d = dist[a + 1, b + 1]
                if d >= 0:
                    best = d + 1
            if a + R0 <= n and px[a + R0] - px[a] == R0:
                for t in range(Rm, Rp + 1):
                    if b + t > n2:
                        break
                    if py[b + t] - py[b] == t:
                        d = dist[a + R0, b + t]
                        if d >= 0 and (best < 0 or d + 1 < best):
                            best = d + 1
            if b + R0 <= n2 and py[b + R0] - py[b] == R0:
                for t in range(Rm, Rp + 1):
                    if a + t > n:
                        break
                    if px[a + t] - px[a] == t:
                        d = dist[a + t, b + R0]
                        if d >= 0 and (best < 0 or d + 1 < best):
                            best = d + 1
            dist[a, b] = best
    return dist


@numba.njit(cache=True)
def compatible_reach(x, y):
    """Reachability table of the zero-deletion grid walk for bit arrays."""
    n = x.shape[0]
    n2 = y.shape[0]
    reach = np.zeros((n + 1, n2 + 1), np.bool_)
    reach[0, 0] = True
    for i in range(n + 1):
        for j in range(n2 + 1):
            if not reach[i, j]:
                continue
            if i < n and x[i] == 0:
                reach[i + 1, j] = True
            if j < n2 and y[j] == 0:
                reach[i, j + 1] = True
            if i < n and j < n2 and not (x[i] == 1 and y[j] == 1):
                reach[i + 1, j + 1] = True
    return reach


@numba.njit(cache=True)
def compatible_accepts(x, y):
    """Boolean form of the compatibility walk with early exit."""
    reach = compatible_reach(x, y)
    n = x.shape[0]
    n2 = y.shape[0]
    for j in range(n2 + 1):
        if reach[n, j]:
            return True
    for i in range(n + 1):
        if reach[i, n2]:
            return True
    return False


@numba.njit(cache=True)
def compatible_finish(x, y):
    """``fin[i, j]``: the walk from (i, j) can exhaust one of the sequences."""
    n = x.shape[0]
    n2 = y.shape[0]
    fin = np.zeros((n + 1, n2 + 1), np.bool_)
    for i in range(n, -1, -1):
        for j in range(n2, -1, -1):
            if i == n or j == n2:
                fin[i, j] = True
                continue
            ok = False
            if not (x[i] == 1 and y[j] == 1) and fin[i + 1, j + 1]:
                ok = True
            elif x[i] == 0 and fin[i + 1, j]:
                ok = True
            elif y[j] == 0 and fin[i, j + 1]:
                ok = True
            fin[i, j] = ok
    return fin


@numba.njit(cache=True)
def lipschitz_greedy_kernel(x, y, M, first_max):
    """Leftmost Lipschitz map of ``x`` into ``y`` (1-based positions) or ``phi[0] = -1``.

    ``feas[i, p]`` says that x[i:] can be placed with x[i] at position p; a
    backward pass fills it with a sliding window count over (p, p + M], then
    the forward pass takes the smallest feasible position at each step.
    """
    n = x.shape[0]
    ny = y.shape[0]
    feas = np.zeros((n, ny + 2), np.bool_)
    for p in range(1, ny + 1):
        feas[n - 1, p] = y[p - 1] == x[n - 1]
    for i in range(n - 2, -1, -1):
        # count of feasible q in (p, p + M], maintained right to left
        cnt = 0
        for p in range(ny, 0, -1):
            if p + 1 <= ny and feas[i + 1, p + 1]:
                cnt += 1
            if p + M + 1 <= ny and feas[i + 1, p + M + 1]:
                cnt -= 1
            feas[i, p] = y[p - 1] == x[i] and cnt > 0
    phi = np.full(n, -1, np.int64)
    lo = 1
    hi = first_max
    for i in range(n):
        pos = -1
        for p in range(lo, min(hi, ny) + 1):
            if feas[i, p]:
                pos = p
                break
        if pos < 0:
            phi[0] = -1
            return phi
        phi[i] = pos
        lo = pos + 1
        hi = pos + M
    return phi
