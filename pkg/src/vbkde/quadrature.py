"""Composite Gauss-Legendre rules shared by the kernel, bias and decomposition code."""

from functools import lru_cache

import numpy as np

DEFAULT_NODES = 64


@lru_cache(maxsize=32)
def _leggauss(m):
    x, w = np.polynomial.legendre.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_rule(a, b, panels, nodes=DEFAULT_NODES):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[a, b]``.

    ``panels`` is either a number of equal panels or an increasing array of
    panel edges (which must start at ``a`` and end at ``b``).
    """
    if np.ndim(panels) == 0:
        edges = np.linspace(a, b, int(panels) + 1)
    else:
        edges = np.asarray(panels, dtype=float)
    x0, w0 = _leggauss(nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return x, w


def integrate(func, a, b, panels=8, nodes=DEFAULT_NODES):
    """Integrate a vectorized ``func`` over ``[a, b]``."""
    if b <= a:
        return 0.0
    x, w = composite_rule(a, b, panels, nodes)
    return float(np.dot(w, func(x)))


def panel_edges(breaks, max_width):
    """Merge sorted breakpoints into panel edges no wider than ``max_width``."""
    breaks = np.unique(np.asarray(breaks, dtype=float))
    out = [breaks[:1]]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        k = max(1, int(np.ceil((hi - lo) / max_width)))
        out.append(np.linspace(lo, hi, k + 1)[1:])
    return np.concatenate(out)
