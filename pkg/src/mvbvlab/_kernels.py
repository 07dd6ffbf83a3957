"""Compiled inner loops for sine sums.

The sine values come from the three-term recurrence
``sin((k+1)x) = 2 cos x sin(kx) - sin((k-1)x)``, restarted from directly
evaluated seeds every ``reseed`` steps so that rounding error cannot build up
over long runs.  Seed angles ``k x`` are formed as exact double-double products,
so large ``k`` do not inherit the ``k x eps`` phase error of a plain product.
Accumulation is Neumaier-compensated.
"""

import os

import numba
import numpy as np
from numba import njit, prange

RESEED = 256

# prefer OpenMP; the TBB probe warns on older system TBB builds
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def configure_threads() -> int:
    """Cap numba's worker pool from ``MVBVLAB_THREADS`` (if set)."""
    raw = os.environ.get("MVBVLAB_THREADS")
    if raw:
        try:
            n = max(1, min(int(raw), numba.config.NUMBA_NUM_THREADS))
        except ValueError:
            raise ValueError(f"MVBVLAB_THREADS must be an integer, got {raw!r}")
        numba.set_num_threads(n)
    return numba.get_num_threads()


_SPLIT = 134217729.0  # 2**27 + 1


@njit(cache=True, nogil=True)
def _two_prod(a, b):
    """``(p, e)`` with ``p = fl(a b)`` and ``p + e = a b`` exactly (Dekker)."""
    p = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


@njit(cache=True, nogil=True)
def _sin_kx(k, x):
    p, e = _two_prod(float(k), x)
    return np.sin(p) + e * np.cos(p)


@njit(cache=True, nogil=True)
def _cos_kx(k, x):
    p, e = _two_prod(float(k), x)
    return np.cos(p) - e * np.sin(p)


@njit(cache=True, nogil=True)
def sine_dot(a, k0, x, reseed):
    """Return ``(s, c)`` with ``s + c ~= sum_i a[i] sin((k0 + i) x)``."""
    c2 = 2.0 * np.cos(x)
    s = 0.0
    comp = 0.0
    n = a.shape[0]
    i = 0
    while i < n:
        k = k0 + i
        prev = _sin_kx(k - 1, x)
        cur = _sin_kx(k, x)
        end = min(n, i + reseed)
        for t in range(i, end):
            v = a[t] * cur
            tot = s + v
            if abs(s) >= abs(v):
                comp += (s - tot) + v
            else:
                comp += (v - tot) + s
            s = tot
            nxt = c2 * cur - prev
            prev = cur
            cur = nxt
        i = end
    return s, comp


@njit(cache=True, nogil=True)
def cos_dot(a, k0, x, reseed):
    """Return ``(s, c)`` with ``s + c ~= sum_i a[i] cos((k0 + i) x)``."""
    c2 = 2.0 * np.cos(x)
    s = 0.0
    comp = 0.0
    n = a.shape[0]
    i = 0
    while i < n:
        k = k0 + i
        prev = _cos_kx(k - 1, x)
        cur = _cos_kx(k, x)
        end = min(n, i + reseed)
        for t in range(i, end):
            v = a[t] * cur
            tot = s + v
            if abs(s) >= abs(v):
                comp += (s - tot) + v
            else:
                comp += (v - tot) + s
            s = tot
            nxt = c2 * cur - prev
            prev = cur
            cur = nxt
        i = end
    return s, comp


@njit(cache=True, parallel=True)
def sine_dot_grid(a, k0, xs, reseed):
    out = np.empty((xs.shape[0], 2))
    for j in prange(xs.shape[0]):
        s, c = sine_dot(a, k0, xs[j], reseed)
        out[j, 0] = s
        out[j, 1] = c
    return out


@njit(cache=True, parallel=True)
def cos_dot_grid(a, k0, xs, reseed):
    out = np.empty((xs.shape[0], 2))
    for j in prange(xs.shape[0]):
        s, c = cos_dot(a, k0, xs[j], reseed)
        out[j, 0] = s
        out[j, 1] = c
    return out
