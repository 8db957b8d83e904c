"""Compiled window sums over a sorted sample (left-to-right summation within each point)."""

import numba
import numpy as np


@numba.njit(cache=True, inline="always")
def _even_poly(coef, v):
    # coef[j] multiplies x^(2j); v = x^2
    acc = 0.0
    for j in range(coef.shape[0] - 1, -1, -1):
        acc = acc * v + coef[j]
    return acc


@numba.njit(cache=True)
def classical_sorted(t, xs, coef, T, h):
    out = np.empty(t.shape[0])
    half = h * T
    for k in range(t.shape[0]):
        tk = t[k]
        lo = np.searchsorted(xs, tk - half, side="left")
        hi = np.searchsorted(xs, tk + half, side="right")
        s = 0.0
        for i in range(lo, hi):
            u = (tk - xs[i]) / h
            if abs(u) < T:
                s += _even_poly(coef, u * u)
        out[k] = s
    return out


@numba.njit(cache=True)
def variable_sorted(t, xs, root, coef, T, h2, cut):
    out = np.empty(t.shape[0])
    for k in range(t.shape[0]):
        tk = t[k]
        lo = np.searchsorted(xs, tk - cut, side="left")
        hi = np.searchsorted(xs, tk + cut, side="right")
        s = 0.0
        for i in range(lo, hi):
            d = tk - xs[i]
            if abs(d) < cut:
                a = d * root[i] / h2
                if abs(a) < T:
                    s += _even_poly(coef, a * a) * root[i]
        out[k] = s
    return out
