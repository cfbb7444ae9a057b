"""First-order fast marching for the reduced metric ds^2 + phi(s)^2 dalpha^2.

The domain is the half-strip [s_lo, s_hi] x [0, alpha_max] with uniform node
spacing in both coordinates. Rows where phi vanishes are pole rows: every node
in such a row is the same manifold point, so the row is accepted as a whole.
"""

import heapq
import math

import numpy as np

_FAR, _TRIAL, _KNOWN = 0, 1, 2


def _solve_update(a, b, hs, ha_phi):
    # (T - a)^2 / hs^2 + (T - b)^2 / ha_phi^2 = 1 with T >= max(a, b)
    if math.isinf(a) and math.isinf(b):
        return math.inf
    if math.isinf(b) or ha_phi == 0.0:
        return a + hs
    if math.isinf(a):
        return b + ha_phi
    wa = 1.0 / (hs * hs)
    wb = 1.0 / (ha_phi * ha_phi)
    A = wa + wb
    B = -2.0 * (wa * a + wb * b)
    C = wa * a * a + wb * b * b - 1.0
    disc = B * B - 4.0 * A * C
    if disc >= 0.0:
        t = (-B + math.sqrt(disc)) / (2.0 * A)
        if t >= max(a, b):
            return t
    return min(a + hs, b + ha_phi)


def fast_march(s, phi, alpha, seeds):
    """Arrival times from seeded nodes on a uniform (s, alpha) grid.

    Parameters
    ----------
    s : (Ns,) uniform arclength nodes
    phi : (Ns,) warp factor at the nodes (zero on pole rows)
    alpha : (Na,) uniform angle nodes starting at 0
    seeds : dict mapping (i, j) -> initial distance

    Returns
    -------
    T : (Ns, Na) array of distances
    """
    ns, na = len(s), len(alpha)
    hs = float(s[1] - s[0])
    ha = float(alpha[1] - alpha[0]) if na > 1 else math.inf
    phi = np.asarray(phi, dtype=float)
    pole = phi <= 0.0
    T = np.full((ns, na), math.inf)
    state = np.zeros((ns, na), dtype=np.int8)
    heap = []
    for (i, j), d in seeds.items():
        if d < T[i, j]:
            T[i, j] = d
            state[i, j] = _TRIAL
            heapq.heappush(heap, (d, i, j))

    Tl = T  # local alias for speed
    while heap:
        d, i, j = heapq.heappop(heap)
        if state[i, j] == _KNOWN or d > Tl[i, j]:
            continue
        if pole[i]:
            accepted = [(i, jj) for jj in range(na)]
            for _, jj in accepted:
                Tl[i, jj] = d
                state[i, jj] = _KNOWN
        else:
            accepted = [(i, j)]
            state[i, j] = _KNOWN
        for ci, cj in accepted:
            for ni, nj in ((ci - 1, cj), (ci + 1, cj), (ci, cj - 1), (ci, cj + 1)):
                if ni < 0 or ni >= ns or nj < 0 or nj >= na:
                    continue
                if state[ni, nj] == _KNOWN:
                    continue
                a = min(
                    Tl[ni - 1, nj] if ni > 0 and state[ni - 1, nj] == _KNOWN else math.inf,
                    Tl[ni + 1, nj] if ni < ns - 1 and state[ni + 1, nj] == _KNOWN else math.inf,
                )
                if pole[ni]:
                    t = a + hs
                else:
                    b = min(
                        Tl[ni, nj - 1] if nj > 0 and state[ni, nj - 1] == _KNOWN else math.inf,
                        Tl[ni, nj + 1] if nj < na - 1 and state[ni, nj + 1] == _KNOWN else math.inf,
                    )
                    t = _solve_update(a, b, hs, phi[ni] * ha)
                if t < Tl[ni, nj]:
                    Tl[ni, nj] = t
                    state[ni, nj] = _TRIAL
                    heapq.heappush(heap, (t, ni, nj))
    return T


def local_seeds(s, phi, alpha, s0, a0, radius=2):
    """Seed distances around an off-grid source using the local flat metric."""
    hs = s[1] - s[0]
    ha = alpha[1] - alpha[0] if len(alpha) > 1 else 1.0
    i0 = int(round((s0 - s[0]) / hs))
    j0 = int(round((a0 - alpha[0]) / ha))
    phi0 = float(np.interp(s0, s, phi))
    seeds = {}
    for i in range(i0 - radius, i0 + radius + 1):
        if i < 0 or i >= len(s):
            continue
        pm = 0.5 * (phi0 + phi[i])
        for j in range(j0 - radius, j0 + radius + 1):
            if j < 0 or j >= len(alpha):
                continue
            seeds[(i, j)] = math.hypot(s[i] - s0, pm * (alpha[j] - a0))
    return seeds


def bilinear(T, s, alpha, sq, aq):
    """Bilinear interpolation of a node field at (sq, aq)."""
    hs = s[1] - s[0]
    fi = min(max((sq - s[0]) / hs, 0.0), len(s) - 1.0)
    i = min(int(fi), len(s) - 2)
    u = fi - i
    if len(alpha) == 1:
        return (1 - u) * T[i, 0] + u * T[i + 1, 0]
    ha = alpha[1] - alpha[0]
    fj = min(max((aq - alpha[0]) / ha, 0.0), len(alpha) - 1.0)
    j = min(int(fj), len(alpha) - 2)
    v = fj - j
    return ((1 - u) * (1 - v) * T[i, j] + u * (1 - v) * T[i + 1, j]
            + (1 - u) * v * T[i, j + 1] + u * v * T[i + 1, j + 1])
