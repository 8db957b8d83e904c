"""Linearization of the two-stage estimator around the ideal one.

With the pilot deviation ``D(x) = fhat(x; h1) - E fhat(x; h1)`` the leading
terms are

    eps1(t) = (1/(n h2)) sum_i L(a_i) f^{-1/2}(X_i) D(X_i) 1{|t - X_i| < h2 B},
    T(t)    = (1/h2) int f^{1/2}(x) D(x) L((t - x) f^{1/2}(x) / h2) 1{|t - x| <= h2 B} dx,

with ``a_i = (t - X_i) f^{1/2}(X_i) / h2`` and ``L(z) = K(z) + z K'(z)``.
``T`` is ``eps1`` with the empirical measure of the outer sum replaced by
``f``.  Expanding ``fhat^{1/2} = f^{1/2} (1 + D/(2f) + ...)`` gives

    true - ideal = eps1 / 2 + (pilot bias and quadratic terms),

so the gap reported by :func:`linearization_gap` subtracts ``T / 2``.
"""

from dataclasses import dataclass, field

import numpy as np

from .estimators import (
    BandwidthPair,
    classical_kde_eval,
    hhm_ideal_eval,
    pilot_at_points,
    true_estimator_eval,
)
from .quadrature import composite_rule, panel_edges

F_MIN = 1e-12


class DecompositionError(ValueError):
    pass


@dataclass
class DecompContext:
    """Sample, model and tuning constants shared by the decomposition terms."""

    sample: object
    density: object
    kernel: object
    bandwidths: BandwidthPair
    B: float
    region_r: float
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.B < self.kernel.half_width / np.sqrt(self.region_r) * (1 - 1e-12):
            raise DecompositionError("B must be at least T / sqrt(r)")

    @property
    def x(self):
        return self.sample.observations

    @property
    def n(self):
        return len(self.sample.observations)

    def pilot_points(self):
        """``fhat(X_i; h1)``, computed once."""
        if "pilot" not in self._cache:
            self._cache["pilot"] = pilot_at_points(self.sample, self.bandwidths.h1, self.kernel)
        return self._cache["pilot"]

    def D_points(self):
        """``D(X_i)``, computed once (one expected-pilot quadrature per observation)."""
        if "D" not in self._cache:
            self._cache["D"] = self.pilot_points() - expected_pilot(self.x, self)
        return self._cache["D"]


def expected_pilot(t, ctx, nodes=64):
    """``E fhat(t; h1) = int K(u) f(t - h1 u) du`` by Gauss-Legendre on ``[-T, T]``."""
    T = ctx.kernel.half_width
    h1 = ctx.bandwidths.h1
    if not h1 > 0:
        raise DecompositionError("h1 must be positive")
    u, wt = composite_rule(-T, T, 2, nodes)
    ku = wt * ctx.kernel.eval(u)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(len(tt))
    step = max(1, (1 << 20) // len(u))
    for lo in range(0, len(tt), step):
        blk = tt[lo:lo + step]
        out[lo:lo + step] = ctx.density.pdf(blk[:, None] - h1 * u[None, :]) @ ku
    return out if np.ndim(t) else float(out[0])


def dev_D(t, ctx):
    """Pilot deviation ``fhat(t; h1) - E fhat(t; h1)``."""
    return classical_kde_eval(ctx.sample, ctx.bandwidths.h1, ctx.kernel, t) - expected_pilot(t, ctx)


def bias_b(t, ctx):
    """Pilot bias ``E fhat(t; h1) - f(t)``."""
    return expected_pilot(t, ctx) - ctx.density.pdf(t)


def delta_eval(t, ctx, fhat=None):
    """``(fhat^{1/2}(t) - f^{1/2}(t)) / f^{1/2}(t)``; ``fhat`` overrides the pilot value."""
    f = np.asarray(ctx.density.pdf(t), dtype=float)
    if np.any(f <= F_MIN):
        raise DecompositionError("delta needs f(t) > 0")
    if fhat is None:
        fhat = classical_kde_eval(ctx.sample, ctx.bandwidths.h1, ctx.kernel, t)
    out = (np.sqrt(fhat) - np.sqrt(f)) / np.sqrt(f)
    return out if np.ndim(out) else float(out)


def _windowed(t, ctx, weights):
    """``(1/(n h2)) sum_i L(a_i) weights_i 1{|t - X_i| < h2 B}`` (dense reference sum)."""
    x = ctx.x
    h2 = ctx.bandwidths.h2
    cut = h2 * ctx.B
    root = np.sqrt(ctx.density.pdf(x))
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(len(tt))
    step = max(1, (1 << 21) // len(x))
    for lo in range(0, len(tt), step):
        d = tt[lo:lo + step, None] - x[None, :]
        inside = np.abs(d) < cut
        out[lo:lo + step] = np.where(inside, ctx.kernel.L(d * root / h2) * weights, 0.0).sum(axis=1)
    out /= len(x) * h2
    return out if np.ndim(t) else float(out[0])


def epsilon1_eval(t, ctx, D_points=None):
    """Leading term ``eps1`` (linear in ``D`` at the observations; ``D_points`` overrides it)."""
    D = ctx.D_points() if D_points is None else np.asarray(D_points, dtype=float)
    f = ctx.density.pdf(ctx.x)
    cut = ctx.bandwidths.h2 * ctx.B
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    near = np.abs(tt[:, None] - ctx.x[None, :]).min(axis=0) < cut if len(tt) < 4096 else np.ones(len(f), bool)
    if np.any(f[near] <= F_MIN):
        raise DecompositionError("density vanishes at a contributing observation")
    with np.errstate(divide="ignore"):
        weights = np.where(f > F_MIN, D / np.sqrt(np.maximum(f, F_MIN)), 0.0)
    return _windowed(t, ctx, weights)


def T_eval(t, ctx, D=None, nodes=16, panels_per_h1=4):
    """Empirical-process term ``T(t)`` by quadrature over the window ``[t - h2 B, t + h2 B]``.

    ``D`` optionally replaces the pilot deviation by any vectorized function of ``x``.
    """
    h1, h2 = ctx.bandwidths.h1, ctx.bandwidths.h2
    cut = h2 * ctx.B
    width = h1 / panels_per_h1
    if D is None:
        def D(x):
            return dev_D(x, ctx)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(len(tt))
    for k, tk in enumerate(tt):
        edges = panel_edges([tk - cut, tk + cut], width)
        x, wt = composite_rule(edges[0], edges[-1], edges, nodes)
        fx = ctx.density.pdf(x)
        if np.any(fx <= F_MIN):
            raise DecompositionError("density vanishes inside the integration window")
        root = np.sqrt(fx)
        out[k] = np.dot(wt, root * D(x) * ctx.kernel.L((tk - x) * root / h2)) / h2
    return out if np.ndim(t) else float(out[0])


def linearization_terms(ctx, grid, pilot=None):
    """True, ideal and ``T`` on a grid (``pilot`` overrides the pilot at the observations)."""
    bw = ctx.bandwidths
    true = true_estimator_eval(ctx.sample, bw, ctx.B, ctx.kernel, grid,
                               pilot=ctx.pilot_points() if pilot is None else pilot)
    ideal = hhm_ideal_eval(ctx.sample, ctx.density, bw, ctx.B, ctx.kernel, grid)
    return {"true": np.atleast_1d(true), "ideal": np.atleast_1d(ideal),
            "T": np.atleast_1d(T_eval(grid, ctx))}


def linearization_gap(ctx, grid, T_weight=0.5):
    """``max_grid |true - ideal - T_weight * T|``."""
    terms = linearization_terms(ctx, grid)
    return float(np.max(np.abs(terms["true"] - terms["ideal"] - T_weight * terms["T"])))
