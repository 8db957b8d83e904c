"""Superlevel-set regions ``{t : g(t) > level, |t| < 1/r}`` and grids on them."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .estimators import classical_kde_eval

SCAN_SPACING = 1e-3
ROOT_TOL = 1e-10


@dataclass(frozen=True)
class Region:
    """Finite union of disjoint open intervals, sorted left to right."""

    intervals: tuple
    r: float
    source: str = "oracle"
    grid_spacing: float = 0.01
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        for (a, b), (c, _) in zip(ivs, ivs[1:]):
            if not b <= c:
                raise ValueError("intervals must be disjoint and sorted")
        if any(not a < b for a, b in ivs):
            raise ValueError("intervals must be nonempty")

    @property
    def empty(self):
        return len(self.intervals) == 0

    @property
    def length(self):
        return sum(b - a for a, b in self.intervals)

    def contains_point(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (t > a) & (t < b)
        return out

    def issubset(self, other, tol=0.0):
        """True when every interval lies inside some interval of ``other`` (up to ``tol``)."""
        for a, b in self.intervals:
            if not any(c - tol <= a and b <= d + tol for c, d in other.intervals):
                return False
        return True

    def inflate(self, eps):
        """The ``eps``-neighbourhood (overlapping intervals merged)."""
        merged = []
        for a, b in self.intervals:
            a, b = a - eps, b + eps
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(b, merged[-1][1]))
            else:
                merged.append((a, b))
        return Region(tuple(merged), self.r, self.source, self.grid_spacing,
                      dict(self.meta, eps=eps))

    def to_list(self):
        return [list(iv) for iv in self.intervals]


def superlevel_region(func, level, r, source="oracle", spacing=SCAN_SPACING, tol=ROOT_TOL):
    """``{func > level} & (-1/r, 1/r)`` by a sign-change scan refined with Brent's method."""
    if not r > 0:
        raise ValueError("r must be positive")
    lo, hi = -1.0 / r, 1.0 / r
    m = int(np.ceil((hi - lo) / spacing))
    xs = np.linspace(lo, hi, m + 1)
    g = np.asarray(func(xs), dtype=float) - level
    above = g > 0

    def g1(x):
        return float(np.asarray(func(np.array([x])), dtype=float)[0]) - level

    intervals = []
    i = 0
    while i <= m:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 <= m and above[j + 1]:
            j += 1
        a = lo if i == 0 else brentq(g1, xs[i - 1], xs[i], xtol=tol)
        b = hi if j == m else brentq(g1, xs[j], xs[j + 1], xtol=tol)
        if b > a:
            intervals.append((a, b))
        i = j + 1
    return Region(tuple(intervals), r, source)


def region_oracle(d, r, spacing=SCAN_SPACING):
    """``D_r = {t : f(t) > r, |t| < 1/r}``."""
    return superlevel_region(d.pdf, r, r, "oracle", spacing)


def region_data(sample, bw, kernel, r, spacing=SCAN_SPACING, pilot=None):
    """Data-driven region ``{t : fhat(t; h1) > 2r, |t| < 1/r}``.

    ``pilot`` replaces the classical pilot by any vectorized function (test hook).
    """
    if pilot is None:
        def pilot(t):
            return classical_kde_eval(sample, bw.h1, kernel, t)
    return superlevel_region(pilot, 2.0 * r, r, "data_driven", spacing)


def region_grid(reg, spacing):
    """Uniform grid ``a + k * spacing`` inside each interval ``(a, b)``, endpoints excluded."""
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    pts = []
    for a, b in reg.intervals:
        k = np.arange(1, int(np.floor((b - a) / spacing)) + 1)
        g = a + k * spacing
        pts.append(g[g < b])
    return np.concatenate(pts) if pts else np.empty(0)


def region_grid_count(reg, min_count, max_spacing=0.01):
    """Grid with spacing ``<= max_spacing`` and at least ``min_count`` points."""
    if reg.empty:
        return np.empty(0)
    spacing = min(max_spacing, reg.length / (min_count + len(reg.intervals) + 1))
    return region_grid(reg, spacing)


def epsilon_neighbourhood(reg, d, eps=None):
    """``D_r^eps`` with ``f > r/2`` on it.

    The default ``eps`` is half the distance from ``D_r`` to the ``r/2`` level
    set of ``f``; an explicit ``eps`` is checked against that condition.
    """
    outer = superlevel_region(d.pdf, reg.r / 2.0, reg.r * 0.5 / (1 + 1e-9))
    gap = np.inf
    for a, b in reg.intervals:
        for c, e in outer.intervals:
            if c <= a and b <= e:
                gap = min(gap, a - c, e - b)
    if eps is None:
        eps = 0.5 * gap
    if not 0 < eps < gap:
        raise ValueError(f"eps={eps!r} leaves the set where f > r/2 (gap {gap!r})")
    return reg.inflate(eps)
