"""Exact squared Euclidean distance transform (two-pass parabola envelope).

Squared distances between pixel centers are integers, so the result is
exact and platform-independent; watershed lines built on it cannot shift
with floating-point rounding.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_INF = 1e18


@njit(cache=True)
def _edt_1d(f, d, v, z, n):
    # Lower envelope of parabolas y = (q - i)^2 + f[i] (Felzenszwalb/Huttenlocher).
    k = 0
    v[0] = 0
    z[0] = -_INF
    z[1] = _INF
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2 * q - 2 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2 * q - 2 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = _INF
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (q - v[k]) * (q - v[k]) + f[v[k]]


@njit(cache=True)
def _edt_2d(cost, h, w):
    out = np.empty((h, w), np.float64)
    f = np.empty(max(h, w), np.float64)
    d = np.empty(max(h, w), np.float64)
    v = np.empty(max(h, w), np.int64)
    z = np.empty(max(h, w) + 1, np.float64)
    for x in range(w):
        for y in range(h):
            f[y] = cost[y, x]
        _edt_1d(f, d, v, z, h)
        for y in range(h):
            out[y, x] = d[y]
    for y in range(h):
        for x in range(w):
            f[x] = out[y, x]
        _edt_1d(f, d, v, z, w)
        for x in range(w):
            out[y, x] = d[x]
    return out


def edt_squared(mask: np.ndarray) -> np.ndarray:
    """Squared distance from each foreground pixel to the nearest background pixel.

    Background pixels get 0. A mask with no background at all gets the
    (unreachable) bound h*h + w*w everywhere so downstream consumers still
    see finite values.
    """
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError("mask must be 2D")
    h, w = m.shape
    if not (~m).any():
        return np.full((h, w), h * h + w * w, dtype=np.int64)
    if not m.any():
        return np.zeros((h, w), dtype=np.int64)
    cost = np.where(m, _INF, 0.0)
    sq = _edt_2d(cost, h, w)
    return np.rint(sq).astype(np.int64)
