"""Deterministic bias machinery for the square-root-law ideal estimator.

For fixed ``t`` and ``w`` let

    g(u) = r(u) K(s(u)),   r(u) = f^{3/2}(t+u),   s(u) = w f^{1/2}(t+u),

so that the expected ideal estimator is ``tilde_f(t; h) = int_{-B}^{B} g(h w) dw``.
Derivatives of ``g`` up to order four are assembled from the product/chain
rule expansions below, never by numerical differencing.  The exponent
``alpha`` generalizes ``f^{1/2}, f^{3/2}`` to ``f^alpha, f^{alpha+1}``; only
``alpha = 1/2`` cancels the second-order bias term.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .quadrature import composite_rule, panel_edges

F_MIN = 1e-12

# bandwidth below which |tilde_f - f| <= 2 |H| h^4 on D_0.1 wherever |H| >= sup|H| / 10
# (window B = T / sqrt(0.05)); near zeros of H the ratio has no bound
H0 = {"normal": 0.1, "mixture": 0.05, "bump": 0.05}


class BiasOracleError(ValueError):
    pass


def power_derivs(fd, p):
    """Derivatives 0..4 of ``f^p`` given ``fd = [f, f', f'', f''', f'''']`` (Faa di Bruno)."""
    f, f1, f2, f3, f4 = fd
    c1 = p
    c2 = p * (p - 1)
    c3 = c2 * (p - 2)
    c4 = c3 * (p - 3)
    fp = f ** p
    fm1 = fp / f
    fm2 = fm1 / f
    fm3 = fm2 / f
    fm4 = fm3 / f
    return (
        fp,
        c1 * fm1 * f1,
        c2 * fm2 * f1 ** 2 + c1 * fm1 * f2,
        c3 * fm3 * f1 ** 3 + 3 * c2 * fm2 * f1 * f2 + c1 * fm1 * f3,
        c4 * fm4 * f1 ** 4 + 6 * c3 * fm3 * f1 ** 2 * f2
        + c2 * fm2 * (3 * f2 ** 2 + 4 * f1 * f3) + c1 * fm1 * f4,
    )


def _combine(order, r, s, Kd):
    """Assemble ``g^(order)`` from derivatives of ``r``, ``s`` and ``K^(j)(s)``."""
    r0, r1, r2, r3, r4 = r
    s1, s2, s3, s4 = s[1:]
    K0, K1, K2, K3, K4 = Kd
    if order == 0:
        return r0 * K0
    if order == 1:
        return r1 * K0 + r0 * s1 * K1
    if order == 2:
        return r2 * K0 + (2 * r1 * s1 + r0 * s2) * K1 + r0 * s1 ** 2 * K2
    if order == 3:
        return (r3 * K0 + (3 * r2 * s1 + 3 * r1 * s2 + r0 * s3) * K1
                + 3 * (r1 * s1 ** 2 + r0 * s1 * s2) * K2 + r0 * s1 ** 3 * K3)
    return (r4 * K0
            + (4 * r3 * s1 + 6 * r2 * s2 + 4 * r1 * s3 + r0 * s4) * K1
            + (6 * r2 * s1 ** 2 + 12 * r1 * s1 * s2 + 4 * r0 * s1 * s3 + 3 * r0 * s2 ** 2) * K2
            + (4 * r1 * s1 ** 3 + 6 * r0 * s1 ** 2 * s2) * K3
            + r0 * s1 ** 4 * K4)


def g_derivative(density, kernel, t, w, u, order=0, alpha=0.5):
    """``g_{t,w}^(order)(u)``, vectorized over broadcastable ``t``, ``w``, ``u``."""
    if int(order) != order or not 0 <= order <= 4:
        raise BiasOracleError(f"order must be in 0..4, got {order!r}")
    t, w, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t, w, u)))
    x = t + u
    if order == 0:
        f = density.pdf(x)
        out = np.asarray(f ** (alpha + 1) * kernel.eval(w * f ** alpha))
        return out if out.ndim else float(out)
    fd = density.derivs(x)
    if np.any(fd[0] < F_MIN):
        raise BiasOracleError("density too small at t + u for derivative formulas")
    r = power_derivs(fd, alpha + 1.0)
    s = tuple(w * q for q in power_derivs(fd, alpha))
    Kd = [kernel.eval(s[0], j) for j in range(5)]
    out = np.asarray(_combine(order, r, s, Kd))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class GEvalContext:
    """Fixed ``(t, w, f, K)`` for the function ``g_{t,w}``."""

    t: float
    w: float
    density: object
    kernel: object
    alpha: float = 0.5

    def eval(self, u, order=0):
        return g_derivative(self.density, self.kernel, self.t, self.w, u, order, self.alpha)


def g_eval(ctx, u, order=0):
    return ctx.eval(u, order)


# ---------------------------------------------------------------------------
# Integrals over w at u = 0
# ---------------------------------------------------------------------------

def w_integral(t, density, kernel, B, power, order, alpha=0.5, nodes=64):
    """``int_{-B}^{B} w^power g_{t,w}^(order)(0) dw``.

    At ``u = 0`` the integrand is a polynomial in ``w`` times ``K^(j)(w f^alpha(t))``,
    supported in ``|w| <= T / f^alpha(t)``; Gauss-Legendre on that interval
    (clipped to ``[-B, B]``) is exact up to rounding.
    """
    ft = float(density.pdf(t))
    if ft < F_MIN:
        raise BiasOracleError(f"density too small at t={t!r}")
    edge = min(B, kernel.half_width / ft ** alpha)
    x, wt = composite_rule(-edge, edge, np.array([-edge, 0.0, edge]), nodes)
    vals = g_derivative(density, kernel, t, x, 0.0, order, alpha)
    return float(np.dot(wt, x ** power * vals))


def moment_cancellation(t, density, kernel, B, i, alpha=0.5):
    """``int_{-B}^{B} w^i g_{t,w}^(i)(0) dw`` for ``i`` in 1..3 (zero when ``alpha = 1/2``).

    Raises :class:`BiasOracleError` if ``B < T / f^{1/2}(t)``, where the
    identity is not expected to hold.
    """
    if i not in (1, 2, 3):
        raise BiasOracleError("i must be 1, 2 or 3")
    ft = float(density.pdf(t))
    if ft < F_MIN:
        raise BiasOracleError(f"density too small at t={t!r}")
    if B < kernel.half_width / np.sqrt(ft) * (1 - 1e-12):
        raise BiasOracleError(f"B={B!r} below T/f^(1/2)(t)={kernel.half_width / np.sqrt(ft)!r}")
    return w_integral(t, density, kernel, B, i, i, alpha)


def H_eval(t, density, kernel):
    """Coefficient of ``h^4`` in ``tilde_f(t; h) - f(t)``."""
    f, f1, f2, f3, f4 = (np.asarray(v, dtype=float) for v in density.derivs(t))
    if np.any(f <= F_MIN):
        raise BiasOracleError("H needs f(t) > 0")
    bracket = (f1 ** 4 / f ** 5 - 1.5 * f1 ** 2 * f2 / f ** 4
               + (4 * f1 * f3 + 3 * f2 ** 2) / (12 * f ** 3) - f4 / (24 * f ** 2))
    out = bracket * kernel.moment(4)
    return out if out.ndim else float(out)


def H_from_g(t, density, kernel, B=None):
    """``(1/24) int w^4 g^(4)(0) dw``; ``B`` defaults to ``T / f^{1/2}(t) + 1``."""
    if B is None:
        B = kernel.half_width / np.sqrt(float(density.pdf(t))) + 1.0
    return w_integral(t, density, kernel, B, 4, 4) / 24.0


# ---------------------------------------------------------------------------
# Expected ideal estimator
# ---------------------------------------------------------------------------

def _support_breaks(t, h, density, kernel, B, scan=2048):
    """Points in ``[-B, B]`` where ``|w| f^{1/2}(t + h w)`` crosses ``T`` or ``t + h w`` leaves the support."""
    T = kernel.half_width
    ws = np.linspace(-B, B, scan + 1)

    def phi(w):
        return np.abs(w) * np.sqrt(density.pdf(t + h * w)) - T

    vals = phi(ws)
    breaks = [-B, B]
    for j in np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:])):
        a, b = ws[j], ws[j + 1]
        if vals[j] == 0:
            breaks.append(a)
        elif vals[j + 1] != 0:
            breaks.append(brentq(lambda w: float(phi(np.array(w))), a, b, xtol=1e-14))
    if density.support is not None:
        for edge in density.support:
            w = (edge - t) / h
            if -B < w < B:
                breaks.append(w)
    return np.array(sorted(breaks))


def tilde_f(t, h, density, kernel, B, nodes=20, max_panel=None):
    """Expected ideal estimator ``int_{-B}^{B} f^{3/2}(t+hw) K(w f^{1/2}(t+hw)) dw``.

    Composite Gauss-Legendre on panels split at the kernel-support crossings,
    so each panel integrates a smooth function; absolute error is below 1e-12
    for the panel densities.
    """
    if not h > 0 or not B > 0:
        raise BiasOracleError("h and B must be positive")
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(len(ts))
    width = max_panel or B / 16.0
    for k, tk in enumerate(ts):
        edges = panel_edges(_support_breaks(tk, h, density, kernel, B), width)
        x, wt = composite_rule(edges[0], edges[-1], edges, nodes)
        fx = density.pdf(tk + h * x)
        out[k] = np.dot(wt, fx ** 1.5 * kernel.eval(x * np.sqrt(fx)))
    return float(out[0]) if scalar else out


def bias_ratio_curve(density, kernel, r, B, h_list, grid=None, min_points=400, tilde_fn=None):
    """Sup over a ``D_r`` grid of ``|(tilde_f(t;h) - f(t))/h^4 - H(t)|`` for each ``h``.

    Returns a list of ``{"h", "sup_dev", "argmax_t"}`` rows in the order of
    ``h_list``.  ``tilde_fn(t, h)`` overrides the quadrature (plumbing checks).
    """
    from .regions import region_grid_count, region_oracle

    if B < kernel.half_width / np.sqrt(r) * (1 - 1e-12):
        raise BiasOracleError("B must be at least T / sqrt(r)")
    h_list = [float(h) for h in h_list]
    if grid is None:
        reg = region_oracle(density, r)
        grid = region_grid_count(reg, min_points, max_spacing=min(0.01, min(h_list) / 4.0))
    grid = np.asarray(grid, dtype=float)
    f = density.pdf(grid)
    H = H_eval(grid, density, kernel)
    rows = []
    for h in h_list:
        tf = tilde_fn(grid, h) if tilde_fn is not None else tilde_f(grid, h, density, kernel, B)
        dev = np.abs((tf - f) / h ** 4 - H)
        j = int(np.argmax(dev))
        rows.append({"h": h, "sup_dev": float(dev[j]), "argmax_t": float(grid[j])})
    return rows
