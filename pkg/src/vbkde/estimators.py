"""Classical, square-root-law ideal, and two-stage plug-in density estimators.

All estimators take evaluation points ``t`` as a scalar or array and a sample
(either a :class:`~vbkde.density.Sample` or a plain array).  Two summation
paths exist: ``"naive"`` sums every observation for every ``t``; ``"pruned"``
sorts the sample and only visits observations inside the kernel window.  The
two agree to rounding error and the pruned path is the default.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _sums
from .density import Sample

ESTIMATORS = ("classical", "abramson_ideal", "hhm_ideal", "true_twostage")

# max entries in a dense (t, X) block
_BLOCK = 1 << 21


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class BandwidthPair:
    """Pilot bandwidth ``h1 = n^{-(2+eta)/9}`` and main bandwidth ``h2 = (log n / n)^{1/9}``."""

    h1: float
    h2: float
    n: int
    eta: float = 0.0
    rule_tag: str = "sqrt-law"


def schedule(n, eta=0.0):
    """Bandwidth pair for sample size ``n`` (``n >= 3``) and undersmoothing offset ``eta``."""
    if int(n) != n or n < 3:
        raise EstimatorError(f"schedule needs an integer n >= 3, got {n!r}")
    if not 0.0 <= eta < 1.0:
        raise EstimatorError(f"eta must lie in [0, 1), got {eta!r}")
    n = int(n)
    h1 = n ** (-(2.0 + eta) / 9.0)
    h2 = (math.log(n) / n) ** (1.0 / 9.0)
    return BandwidthPair(h1, h2, n, float(eta), "sqrt-law")


def check_band_conditions(n, eta=0.0):
    """Scan ``n .. 2n`` for ``h2`` decreasing and ``n h2 / |log h2|`` and ``n h2`` increasing."""
    ns = np.arange(max(int(n), 3), 2 * int(n) + 1)
    h2 = (np.log(ns) / ns) ** (1.0 / 9.0)
    h1 = ns ** (-(2.0 + eta) / 9.0)
    ok = True
    for h in (h1, h2):
        ok &= bool(np.all(np.diff(h) < 0))
        ok &= bool(np.all(np.diff(ns * h / np.abs(np.log(h))) > 0))
        ok &= bool(np.all(np.diff(ns * h) > 0))
    return ok


def classical_bandwidth(n):
    """Sup-norm rate bandwidth ``(log n / n)^{1/5}`` for the second-order classical estimator."""
    return (math.log(n) / n) ** 0.2


def default_B(kernel, r):
    """Smallest admissible truncation constant ``T / sqrt(r)``."""
    return kernel.half_width / math.sqrt(r)


def _points(sample):
    x = sample.observations if isinstance(sample, Sample) else np.atleast_1d(np.asarray(sample, float))
    if len(x) == 0:
        raise EstimatorError("empty sample")
    return x


def _finish(t, out):
    return out if np.ndim(t) else float(out[0])


def _chunks(m, n):
    size = max(1, _BLOCK // max(n, 1))
    for lo in range(0, m, size):
        yield slice(lo, min(m, lo + size))


def _naive_sum(t, x, weight, term):
    """Reference path: ``sum_i term(t - x_i, weight_i)`` over every observation."""
    out = np.empty(len(t))
    for sl in _chunks(len(t), len(x)):
        out[sl] = term(t[sl, None] - x[None, :], weight[None, :]).sum(axis=1)
    return out


def _check_method(method):
    if method not in ("naive", "pruned"):
        raise EstimatorError(f"unknown method {method!r}")


def classical_kde_eval(sample, h, kernel, t, method="pruned"):
    """``(1/(n h)) sum_i K((t - X_i)/h)``."""
    if not h > 0:
        raise EstimatorError("bandwidth must be positive")
    _check_method(method)
    x = _points(sample)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if method == "naive":
        s = _naive_sum(tt, x, x, lambda d, _w: kernel.eval(d / h))
    else:
        s = _sums.classical_sorted(tt, np.sort(x), kernel.even_coefficients,
                                   float(kernel.half_width), float(h))
    return _finish(t, s / (len(x) * h))


def variable_kde_eval(x, root, h2, B, kernel, t, method="pruned"):
    """``(1/(n h2)) sum_i K((t - X_i) root_i / h2) root_i 1{|t - X_i| < h2 B}``.

    Shared core of the ideal (``root = f^{1/2}(X_i)``) and two-stage
    (``root = pilot^{1/2}(X_i)``) estimators.
    """
    if not h2 > 0:
        raise EstimatorError("bandwidth must be positive")
    _check_method(method)
    x = _points(x)
    root = np.asarray(root, dtype=float)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    cut = h2 * B
    if method == "naive":
        def term(d, w):
            return np.where(np.abs(d) < cut, kernel.eval(d * w / h2) * w, 0.0)

        s = _naive_sum(tt, x, root, term)
    else:
        order = np.argsort(x, kind="stable")
        s = _sums.variable_sorted(tt, x[order], root[order], kernel.even_coefficients,
                                  float(kernel.half_width), float(h2), float(cut))
    return _finish(t, s / (len(x) * h2))


def abramson_ideal_eval(sample, density, h, kernel, t, method="naive"):
    """Square-root-law estimator with clipped density ``f_t(x) = max(f(x), f(t)/10)``."""
    if not h > 0:
        raise EstimatorError("bandwidth must be positive")
    x = _points(sample)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    fx = density.pdf(x)
    ft = density.pdf(tt)
    out = np.empty(len(tt))
    for sl in _chunks(len(tt), len(x)):
        root = np.sqrt(np.maximum(fx[None, :], ft[sl, None] / 10.0))
        out[sl] = (root / h * kernel.eval((tt[sl, None] - x[None, :]) * root / h)).sum(axis=1)
    return _finish(t, out / len(x))


def hhm_ideal_eval(sample, density, bw, B, kernel, t, method="pruned"):
    """Ideal estimator: bandwidth ``h2 / f^{1/2}(X_i)`` with the true density and window ``|t - X_i| < h2 B``."""
    x = _points(sample)
    return variable_kde_eval(x, np.sqrt(density.pdf(x)), _h2(bw), B, kernel, t, method)


def pilot_at_points(sample, h1, kernel, method="pruned"):
    """Classical pilot ``fhat(X_i; h1)`` at every observation (the sum includes ``i`` itself)."""
    x = _points(sample)
    return np.atleast_1d(classical_kde_eval(x, h1, kernel, x, method))


def true_estimator_eval(sample, bw, B, kernel, t, method="pruned", pilot=None):
    """Two-stage estimator: the ideal estimator with ``f`` replaced by the classical pilot.

    ``pilot`` optionally overrides the pilot values at the observations (an
    array, or a callable evaluated at the observations).
    """
    x = _points(sample)
    if pilot is None:
        p = pilot_at_points(x, bw.h1, kernel, method)
    elif callable(pilot):
        p = np.asarray(pilot(x), dtype=float)
    else:
        p = np.asarray(pilot, dtype=float)
    return variable_kde_eval(x, np.sqrt(p), bw.h2, B, kernel, t, method)


def _h2(bw):
    return bw.h2 if isinstance(bw, BandwidthPair) else float(bw)


@dataclass
class EstimateCurve:
    """Estimator values on a grid plus the settings that produced them."""

    grid: np.ndarray
    values: np.ndarray
    estimator_tag: str
    bandwidths: BandwidthPair
    B: float
    sample_ref: str
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def rows(self):
        bw = self.bandwidths
        for t, v in zip(self.grid, self.values):
            yield (float(t), float(v), self.estimator_tag, bw.n, bw.h1, bw.h2, self.B, self.seed)


CSV_COLUMNS = ("t", "value", "estimator", "n", "h1", "h2", "B", "seed")


def evaluate_curve(estimator_tag, sample, kernel, grid, bw=None, B=None, density=None,
                   h=None, r=None, method="pruned"):
    """Evaluate one estimator on a sorted grid.

    ``bw`` defaults to :func:`schedule` at the sample size; ``B`` defaults to
    ``T / sqrt(r)``.  The classical and Abramson estimators use the single
    bandwidth ``h`` (default: :func:`classical_bandwidth` and ``bw.h2``
    respectively), recorded in both slots of the curve's bandwidth pair.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise EstimatorError("grid must be sorted")
    x = _points(sample)
    n = len(x)
    if estimator_tag not in ESTIMATORS:
        raise EstimatorError(f"unknown estimator {estimator_tag!r}; choose from {ESTIMATORS}")
    if bw is None:
        bw = schedule(max(n, 3))
    if B is None:
        if r is None:
            raise EstimatorError("either B or r is required")
        B = default_B(kernel, r)
    needs_density = estimator_tag in ("abramson_ideal", "hhm_ideal")
    if needs_density and density is None:
        raise EstimatorError(f"{estimator_tag} needs the true density")

    if estimator_tag == "classical":
        hc = h if h is not None else classical_bandwidth(max(n, 3))
        values = classical_kde_eval(x, hc, kernel, grid, method)
        bw = BandwidthPair(hc, hc, n, bw.eta, "classical")
    elif estimator_tag == "abramson_ideal":
        ha = h if h is not None else bw.h2
        values = abramson_ideal_eval(x, density, ha, kernel, grid)
        bw = BandwidthPair(ha, ha, n, bw.eta, "abramson")
    elif estimator_tag == "hhm_ideal":
        values = hhm_ideal_eval(x, density, bw, B, kernel, grid, method)
    else:
        values = true_estimator_eval(x, bw, B, kernel, grid, method)
    seed = sample.seed if isinstance(sample, Sample) else 0
    ref = sample.tag if isinstance(sample, Sample) else f"array:n={n}"
    return EstimateCurve(grid, np.atleast_1d(values), estimator_tag, bw, float(B), ref, seed)
