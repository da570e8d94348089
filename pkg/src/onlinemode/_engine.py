"""Compiled inner loop of the streaming mode update.

The loop consumes one block of samples at a time and mutates the running
state in place. A sample is only committed once its update is known to be
valid, so on error the state reflects everything before the offending row.
"""

import math

import numpy as np
from numba import njit

OK = 0
BAD_SAMPLE = 1
DIVERGED = 2

GUARD = 1e12

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_TWO_PI = 2.0 * math.pi
_FEJER_CUTOFF = 1e-2

HARMONIC = 0
POLYNOMIAL = 1


@njit(cache=True, nogil=True)
def step(form, a0, n0, gamma, n):
    if form == HARMONIC:
        return 1.0 / n
    return a0 / (n + n0) ** gamma


@njit(cache=True, nogil=True)
def _dprofile(family, u):
    if family == 0:
        return -u * _INV_SQRT_2PI * math.exp(-0.5 * u * u)
    if family == 1:
        w = 1.0 + u * u
        return -2.0 * u / (math.pi * w * w)
    if abs(u) < _FEJER_CUTOFF:
        u2 = u * u
        return u * (-2.0 / 3.0 + 8.0 * u2 / 45.0 - 6.0 * u2 * u2 / 315.0 + 16.0 * u2 * u2 * u2 / 14175.0) / math.pi
    s = math.sin(u)
    return (u * math.sin(2.0 * u) - 2.0 * s * s) / (math.pi * u * u * u)


@njit(cache=True, nogil=True)
def ascend(m, wsum, counters, warmup, samples, family, eps, lam,
           form, a0, n0, gamma, trace_every, trace_n, trace_m):
    """Fold ``samples`` into the state.

    ``counters`` holds ``[n_updates, warmup_count]``. Returns
    ``(status, row, n_traces)``; ``row`` is the offending row on error.
    """
    p = m.shape[0]
    ntr = 0
    d = np.empty(p)
    new = np.empty(p)
    for i in range(samples.shape[0]):
        x = samples[i]
        for j in range(p):
            if not math.isfinite(x[j]):
                return BAD_SAMPLE, i, ntr

        if counters[1] < warmup:
            for j in range(p):
                wsum[j] += x[j]
            counters[1] += 1
            if counters[1] == warmup:
                for j in range(p):
                    m[j] = wsum[j] / warmup
            continue

        n = counters[0] + 1
        a = step(form, a0, n0, gamma, n)
        if family == 3:
            r2 = 0.0
            for j in range(p):
                d[j] = m[j] - x[j]
                r2 += d[j] * d[j]
            scale = _TWO_PI ** (-0.5 * p) * math.exp(-0.5 * r2 / (eps * eps)) / eps ** (p + 2)
            for j in range(p):
                d[j] = -d[j] * scale - lam * m[j]
        else:
            d[0] = _dprofile(family, (m[0] - x[0]) / eps) / (eps * eps) - lam * m[0]

        for j in range(p):
            new[j] = m[j] + a * d[j]
            if not (abs(new[j]) <= GUARD):
                return DIVERGED, i, ntr
        for j in range(p):
            m[j] = new[j]
        counters[0] = n

        if trace_every > 0 and n % trace_every == 0:
            trace_n[ntr] = n
            for j in range(p):
                trace_m[ntr, j] = m[j]
            ntr += 1
    return OK, -1, ntr
