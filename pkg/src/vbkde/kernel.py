"""Compact-support polynomial kernels with exact derivatives and moments.

A kernel is a polynomial ``p`` restricted to ``[-T, T]``::

    K(x) = p(x)  for |x| < T,   K(x) = 0 otherwise.

The built-in ``quintic`` kernel is ``(693/512) (1 - x^2)^5`` on ``[-1, 1]``;
its fifth-order zeros at the endpoints make ``K`` four times continuously
differentiable on the whole line, which is what the bias expansion needs.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .quadrature import integrate

MAX_ORDER = 4
MAX_MOMENT = 8


class KernelError(ValueError):
    """Raised for invalid kernel definitions or unsupported derivative orders."""


def _check_order(order, max_order=MAX_ORDER):
    if int(order) != order or not 0 <= order <= max_order:
        raise KernelError(f"derivative order must be in 0..{max_order}, got {order!r}")
    return int(order)


def _abs_max_on(poly, lo, hi):
    crit = [lo, hi]
    for root in poly.deriv().roots() if poly.degree() > 0 else []:
        if abs(root.imag) < 1e-12 and lo < root.real < hi:
            crit.append(root.real)
    return float(np.max(np.abs(poly(np.array(crit)))))


@dataclass(frozen=True)
class Kernel:
    """Symmetric nonnegative polynomial kernel supported on ``[-half_width, half_width]``.

    Parameters
    ----------
    coefficients : sequence of float
        Polynomial coefficients in increasing powers of ``x``.
    half_width : float
        Support constant ``T``.
    name : str
        Identifier used in output files.
    """

    coefficients: tuple
    half_width: float = 1.0
    name: str = "custom"
    _polys: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coef = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coef)
        if not self.half_width > 0:
            raise KernelError("half_width must be positive")
        p = Polynomial(coef)
        polys = [p]
        for _ in range(MAX_ORDER + 1):
            polys.append(polys[-1].deriv())
        object.__setattr__(self, "_polys", tuple(polys))
        self._validate()

    def _validate(self):
        T = self.half_width
        if any(abs(c) > 1e-14 * max(1.0, max(map(abs, self.coefficients)))
               for c in self.coefficients[1::2]):
            raise KernelError("kernel polynomial must be even (odd coefficients nonzero)")
        mass = self.moment(0)
        if abs(mass - 1.0) > 1e-10:
            raise KernelError(f"kernel must integrate to 1, got {mass!r}")
        xs = np.linspace(-T, T, 4001)
        if np.min(self._polys[0](xs)) < -1e-12:
            raise KernelError("kernel must be nonnegative on its support")

    @property
    def T(self):
        return self.half_width

    @property
    def order4_smooth(self):
        """True when ``K, K', ..., K''''`` all vanish at ``+-T`` (so ``K`` is C^4 on R)."""
        ends = np.array([-self.half_width, self.half_width])
        scale = max(1.0, max(map(abs, self.coefficients)))
        return all(np.all(np.abs(p(ends)) <= 1e-10 * scale) for p in self._polys[:5])

    @property
    def sup_norms(self):
        """``||K^(k)||_inf`` for ``k = 0..4``, from the critical points of each derivative."""
        T = self.half_width
        return np.array([_abs_max_on(p, -T, T) for p in self._polys[:5]])

    @property
    def even_coefficients(self):
        """Coefficients of ``K`` as a polynomial in ``x^2``."""
        return np.array(self.coefficients[0::2])

    def __call__(self, x, order=0):
        return self.eval(x, order)

    def eval(self, x, order=0):
        """``K^(order)(x)``; exactly zero for ``|x| >= T``."""
        order = _check_order(order)
        x = np.asarray(x, dtype=float)
        out = np.where(np.abs(x) < self.half_width, self._polys[order](x), 0.0)
        return out if out.ndim else float(out)

    def L(self, z):
        """``K(z) + z K'(z)``, the derivative of ``z K(z)``."""
        z = np.asarray(z, dtype=float)
        return self.eval(z, 0) + z * self.eval(z, 1)

    def L1(self, z):
        """``z K'(z)``."""
        z = np.asarray(z, dtype=float)
        return z * self.eval(z, 1)

    def moment(self, p):
        """``int v^p K(v) dv`` by composite Gauss-Legendre (exact for polynomial kernels)."""
        if int(p) != p or not 0 <= p <= MAX_MOMENT:
            raise KernelError(f"moment order must be in 0..{MAX_MOMENT}")
        T = self.half_width
        poly = self._polys[0]
        return integrate(lambda v: v ** p * poly(v), -T, T, panels=8)

    def total_variation(self):
        """Total variation of ``K`` on the real line."""
        T = self.half_width
        pts = [-T, T]
        for root in self._polys[1].roots():
            if abs(root.imag) < 1e-12 and -T < root.real < T:
                pts.append(root.real)
        pts = np.sort(np.array(pts))
        vals = self._polys[0](pts)
        # jumps at +-T when K(+-T) != 0
        return float(np.sum(np.abs(np.diff(vals))) + abs(vals[0]) + abs(vals[-1]))

    @property
    def tv_norm(self):
        return self.total_variation()


def quintic():
    """``(693/512) (1 - x^2)^5`` on ``[-1, 1]``."""
    p = Polynomial([1.0, 0.0, -1.0]) ** 5 * (693.0 / 512.0)
    return Kernel(tuple(p.coef), 1.0, name="quintic")


def kernel_from_json(source):
    """Build a kernel from ``{"coefficients": [...], "half_width": T}`` (dict, JSON text or path)."""
    if isinstance(source, dict):
        spec = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            spec = json.loads(text)
        else:
            with open(text) as fh:
                spec = json.load(fh)
    return Kernel(tuple(spec["coefficients"]), float(spec.get("half_width", 1.0)),
                  name=spec.get("name", "custom"))


_BUILTIN = {"quintic": quintic}


def get_kernel(name="quintic"):
    """Look up a built-in kernel by name, or load a JSON kernel definition."""
    if name in _BUILTIN:
        return _BUILTIN[name]()
    if name.endswith(".json") or name.lstrip().startswith("{"):
        return kernel_from_json(name)
    raise KernelError(f"unknown kernel {name!r}; available: {sorted(_BUILTIN)}")


def kernel_eval(k, x, order=0):
    return k.eval(x, order)


def kernel_moment(k, p):
    return k.moment(p)


def kernel_tv(k):
    return k.total_variation()
