"""Analytic test densities with derivatives up to order four and reproducible samplers.

The built-in panel is

* ``normal``  -- standard normal,
* ``mixture`` -- ``0.5 N(-1, 0.5^2) + 0.5 N(1, 0.75^2)``,
* ``bump``    -- ``c (1 - (x/3)^2)^7`` on ``[-3, 3]``.

Each model carries a derivative bound ``C`` (``||f^(k)||_inf <= C`` for
``k = 0..4``) and a modulus of continuity ``z(d) = M5 * d`` for ``f''''``, where
``M5`` bounds ``|f^(5)|``.  Both are measured on a fine grid at construction and
rounded up, so every model certifies against its own stored constants.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite_e import hermeval
from scipy.special import ndtr

from .rng import sub_seed, uniform_block

MAX_ORDER = 4
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class DensityError(ValueError):
    pass


def _check_order(order, max_order=MAX_ORDER):
    if int(order) != order or not 0 <= order <= max_order:
        raise DensityError(f"derivative order must be in 0..{max_order}, got {order!r}")
    return int(order)


def _round_up(x, digits=3):
    if x <= 0:
        return 0.0
    e = math.floor(math.log10(x)) - digits + 1
    return float(f"{math.ceil(x / 10.0 ** e * (1 + 1e-12)) * 10.0 ** e:.{digits}g}")


@dataclass(frozen=True)
class Sample:
    """An i.i.d. sample in draw order, reproducible from ``(density_name, n, seed)``."""

    observations: np.ndarray
    seed: int
    n: int
    density_name: str

    def __post_init__(self):
        obs = np.array(self.observations, dtype=float)
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)
        if obs.ndim != 1 or len(obs) != self.n:
            raise DensityError("observations must be a 1-d array of length n")

    @classmethod
    def from_points(cls, points, density_name="manual", seed=0):
        points = np.atleast_1d(np.asarray(points, dtype=float))
        return cls(points, seed, len(points), density_name)

    @property
    def tag(self):
        return f"{self.density_name}:n={self.n}:seed={self.seed}"


class Modulus:
    """Linear modulus of continuity ``z(d) = slope * d``."""

    def __init__(self, slope):
        self.slope = float(slope)

    def __call__(self, delta):
        return self.slope * np.abs(np.asarray(delta, dtype=float))

    def __repr__(self):
        return f"Modulus({self.slope!r})"


class DensityModel:
    """Base class: subclasses provide ``_deriv(x, k)`` for ``k = 0..5``, ``cdf`` and ``_draw``."""

    name = "density"
    lanes = 2
    # interval outside which the density vanishes identically (None = whole line)
    support = None
    # range scanned when certifying constants
    scan_range = (-10.0, 10.0)

    def _init_constants(self):
        lo, hi = self.scan_range
        xs = np.linspace(lo, hi, 200001)
        sups = [float(np.max(np.abs(self._deriv(xs, k)))) for k in range(6)]
        self.sup_norms = np.array(sups[:5])
        self.deriv_bound = _round_up(max(sups[:5]))
        self.modulus = Modulus(_round_up(sups[5]))

    def eval(self, x, order=0):
        """``f^(order)(x)`` for ``order`` in ``0..4``."""
        order = _check_order(order)
        x = np.asarray(x, dtype=float)
        out = self._deriv(x, order)
        return out if np.ndim(out) else float(out)

    def pdf(self, x):
        return self.eval(x, 0)

    def __call__(self, x):
        return self.eval(x, 0)

    def derivs(self, x, upto=MAX_ORDER):
        """Stack ``[f, f', ..., f^(upto)]`` at ``x``."""
        x = np.asarray(x, dtype=float)
        return np.stack([self._deriv(x, k) for k in range(upto + 1)])

    def sample(self, n, seed):
        """Draw ``n`` observations; draw ``i`` uses only stream block ``i`` of ``seed``."""
        n = int(n)
        if n < 1:
            raise DensityError("n must be >= 1")
        u = uniform_block(seed, n, self.lanes)
        return Sample(self._draw(u, seed), int(seed), n, self.name)

    def to_dict(self):
        return {"name": self.name}


def _normal_deriv(x, mu, sigma, k):
    z = (x - mu) / sigma
    coef = [0.0] * k + [1.0]
    return (-1.0) ** k * hermeval(z, coef) * np.exp(-0.5 * z * z) * _INV_SQRT_2PI / sigma ** (k + 1)


def _box_muller(u1, u2):
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


class Normal(DensityModel):
    """``N(mu, sigma^2)``; derivatives via Hermite polynomials."""

    lanes = 2

    def __init__(self, mu=0.0, sigma=1.0, name=None):
        self.mu, self.sigma = float(mu), float(sigma)
        if not self.sigma > 0:
            raise DensityError("sigma must be positive")
        self.name = name or ("normal" if (self.mu, self.sigma) == (0.0, 1.0)
                             else f"normal({self.mu:g},{self.sigma:g})")
        self.scan_range = (self.mu - 12 * self.sigma, self.mu + 12 * self.sigma)
        self._init_constants()

    def _deriv(self, x, k):
        return _normal_deriv(x, self.mu, self.sigma, k)

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def _draw(self, u, seed):
        return self.mu + self.sigma * _box_muller(u[:, 0], u[:, 1])

    def to_dict(self):
        return {"name": self.name, "kind": "normal", "mu": self.mu, "sigma": self.sigma}


class NormalMixture(DensityModel):
    """Finite normal mixture; a draw picks its component, then a Box-Muller normal."""

    lanes = 3

    def __init__(self, weights, means, sds, name="mixture"):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.sds = np.asarray(sds, dtype=float)
        if not (len(self.weights) == len(self.means) == len(self.sds)) or len(self.weights) == 0:
            raise DensityError("weights, means and sds must have equal nonzero length")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise DensityError("mixture weights must be nonnegative and sum to 1")
        if np.any(self.sds <= 0):
            raise DensityError("mixture sds must be positive")
        self.name = name
        self.scan_range = (float(np.min(self.means - 12 * self.sds)),
                           float(np.max(self.means + 12 * self.sds)))
        self._init_constants()

    def _deriv(self, x, k):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, m, s in zip(self.weights, self.means, self.sds):
            out = out + w * _normal_deriv(x, m, s, k)
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return sum(w * ndtr((x - m) / s) for w, m, s in zip(self.weights, self.means, self.sds))

    def _draw(self, u, seed):
        edges = np.cumsum(self.weights)[:-1]
        comp = np.searchsorted(edges, u[:, 0], side="right")
        return self.means[comp] + self.sds[comp] * _box_muller(u[:, 1], u[:, 2])

    def to_dict(self):
        return {"name": self.name, "kind": "mixture", "weights": self.weights.tolist(),
                "means": self.means.tolist(), "sds": self.sds.tolist()}


class Bump(DensityModel):
    """Polynomial bump ``c (1 - (x/a)^2)^power`` on ``[-a, a]``.

    Sampled by rejection from the uniform envelope of height ``c``.  Each draw
    owns ``ATTEMPTS`` proposal pairs in its stream block; the rare draw that
    rejects them all continues on a private stream seeded by ``(seed, i)``.
    """

    ATTEMPTS = 32

    def __init__(self, half_width=3.0, power=7, name="bump"):
        self.a = float(half_width)
        self.power = int(power)
        if self.power < 5:
            raise DensityError("power must be >= 5 for four continuous derivatives")
        base = Polynomial([1.0, 0.0, -1.0 / self.a ** 2]) ** self.power
        anti = base.integ(lbnd=-self.a)
        self.c = 1.0 / anti(self.a)
        polys = [base * self.c]
        for _ in range(5):
            polys.append(polys[-1].deriv())
        self._polys = polys
        self._cdf_poly = anti * self.c
        self.lanes = 2 * self.ATTEMPTS
        self.name = name
        self.support = (-self.a, self.a)
        self.scan_range = (-self.a, self.a)
        self._init_constants()

    def _deriv(self, x, k):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < self.a
        if k == 0:
            # factored form stays nonnegative near the edges
            base = np.clip(1.0 - (x / self.a) ** 2, 0.0, None)
            return np.where(inside, self.c * base ** self.power, 0.0)
        return np.where(inside, self._polys[k](x), 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), -self.a, self.a)
        return self._cdf_poly(x)

    def _accept(self, u):
        x = self.a * (2.0 * u[..., 0::2] - 1.0)
        ok = u[..., 1::2] <= (1.0 - (x / self.a) ** 2) ** self.power
        return x, ok

    def _draw(self, u, seed):
        x, ok = self._accept(u)
        first = np.argmax(ok, axis=1)
        out = x[np.arange(len(x)), first]
        for i in np.flatnonzero(~ok.any(axis=1)):
            s = sub_seed(seed, i, 0xB0B)
            block = 0
            while True:
                xs, oks = self._accept(uniform_block(s, 1, self.lanes, offset=block)[0])
                if oks.any():
                    out[i] = xs[np.argmax(oks)]
                    break
                block += 1
        return out

    def to_dict(self):
        return {"name": self.name, "kind": "bump", "half_width": self.a, "power": self.power}


class Uniform(DensityModel):
    """Uniform density on ``[lo, hi]``; diagnostic only (not four times differentiable)."""

    lanes = 1

    def __init__(self, lo=-1.0, hi=1.0, name="uniform"):
        self.lo, self.hi = float(lo), float(hi)
        self.name = name
        self.support = (self.lo, self.hi)
        self.scan_range = (self.lo, self.hi)
        self.sup_norms = np.array([1.0 / (self.hi - self.lo), 0, 0, 0, 0])
        self.deriv_bound = float("inf")
        self.modulus = Modulus(0.0)

    def _deriv(self, x, k):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo) if k == 0 else 0.0, 0.0)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def _draw(self, u, seed):
        return self.lo + (self.hi - self.lo) * u[:, 0]


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

_PANEL = {
    "normal": lambda: Normal(0.0, 1.0),
    "mixture": lambda: NormalMixture([0.5, 0.5], [-1.0, 1.0], [0.5, 0.75], name="mixture"),
    "bump": lambda: Bump(3.0, 7, name="bump"),
}
_CACHE = {}

PANEL_NAMES = tuple(_PANEL)


def mixture_from_json(source, name="mixture"):
    """Mixture from ``{"weights": [...], "means": [...], "sds": [...]}`` (dict, JSON text or path)."""
    if isinstance(source, dict):
        spec = source
    elif str(source).lstrip().startswith("{"):
        spec = json.loads(source)
    else:
        with open(source) as fh:
            spec = json.load(fh)
    return NormalMixture(spec["weights"], spec["means"], spec["sds"], name=spec.get("name", name))


def get_density(name):
    """Panel density by name, or a normal mixture from a JSON file/text."""
    if isinstance(name, DensityModel):
        return name
    if name in _PANEL:
        if name not in _CACHE:
            _CACHE[name] = _PANEL[name]()
        return _CACHE[name]
    if name.endswith(".json") or name.lstrip().startswith("{"):
        return mixture_from_json(name)
    raise DensityError(f"unknown density {name!r}; available: {sorted(_PANEL)}")


def panel():
    return [get_density(name) for name in PANEL_NAMES]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def density_eval(d, x, order=0):
    return d.eval(x, order)


def draw_sample(d, n, seed):
    return d.sample(n, seed)


@dataclass
class Certification:
    """Outcome of :func:`certify_class`; truthy iff the density is in the class."""

    ok: bool
    violation: tuple = None
    detail: str = ""

    def __bool__(self):
        return bool(self.ok)


def certify_class(d, C, z, spacing=0.01, t_range=None, tol=1e-9):
    """Check ``||f^(k)||_inf <= C`` (k=0..4) and ``|f''''(t+u) - f''''(t)| <= z(|u|)`` for ``|u| <= 1``.

    Both checks run on a lattice with the given spacing over ``t_range``
    (default: the density's scan range).  Returns a :class:`Certification`
    carrying the first violating point or ``(t, u)`` pair.
    """
    lo, hi = t_range or d.scan_range
    xs = np.linspace(lo - 1.0, hi + 1.0, int(round((hi - lo + 2.0) / spacing)) + 1)
    step = xs[1] - xs[0]
    m = int(round(1.0 / step))
    for k in range(MAX_ORDER + 1):
        vals = np.abs(d.eval(xs, k))
        bad = np.flatnonzero(vals > C + tol)
        if len(bad):
            i = bad[0]
            return Certification(False, (float(xs[i]), k),
                                 f"|f^({k})({xs[i]:.6g})| = {vals[i]:.6g} > C = {C:g}")
    f4 = d.eval(xs, 4)
    t_idx = np.arange(m, len(xs) - m)
    for j in range(1, m + 1):
        u = j * step
        bound = float(z(u)) + tol
        for sign in (1, -1):
            diff = np.abs(f4[t_idx + sign * j] - f4[t_idx])
            bad = np.flatnonzero(diff > bound)
            if len(bad):
                t = float(xs[t_idx[bad[0]]])
                return Certification(False, (t, sign * u),
                                     f"|f''''(t+u) - f''''(t)| = {diff[bad[0]]:.6g} > z({u:.4g})")
    return Certification(True)
