"""Registry of invertible outcome transformations h(y, p, x2).

Each transform maps a J-vector outcome to R^J, invertibly in y, possibly
depending on the rest of the bundle. Built-in families keep every
configuration serializable; fully general function classes are out of
scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demand import ShareMap, plain_logit, shares_array
from .errors import ConfigError, InversionFailure
from .inversion import DEFAULT_INVERSION, InversionConfig, invert
from .types import Bundle, validate_shares

FD_STEP = 1e-5


class Transform:
    """Base class: h(y, p, x2) -> R^J, invertible in y."""

    def apply(self, y: np.ndarray, p: np.ndarray, x2: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def invert(self, v: np.ndarray, p: np.ndarray, x2: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jac_y(self, y: np.ndarray, p: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """dh/dy, central finite differences unless overridden."""
        J = len(y)
        out = np.empty((J, J))
        for k in range(J):
            e = np.zeros(J)
            e[k] = FD_STEP
            out[:, k] = (self.apply(y + e, p, x2) - self.apply(y - e, p, x2)) / (2 * FD_STEP)
        return out

    def apply_bundle(self, y, a: Bundle) -> np.ndarray:
        return self.apply(np.asarray(y, dtype=float), a.p, a.x2)

    def invert_bundle(self, v, a: Bundle) -> np.ndarray:
        return self.invert(np.asarray(v, dtype=float), a.p, a.x2)


@dataclass
class LogitInverse(Transform):
    """Inverse of the plain-logit share map: h = delta(y) + alpha p - x2 gamma."""

    alpha: float = 0.0
    gamma: tuple = ()

    @property
    def _map(self) -> ShareMap:
        return plain_logit(self.alpha, self.gamma)

    def _g(self, p, x2) -> np.ndarray:
        from .demand import _fixed_index
        return _fixed_index(self._map, Bundle(np.zeros(len(p)), p, x2))

    def apply(self, y, p, x2):
        outside = 1.0 - y.sum()
        if outside <= 0 or np.any(y <= 0):
            raise InversionFailure(f"shares outside the open simplex: {y}")
        return np.log(y) - np.log(outside) - self._g(p, x2)

    def invert(self, v, p, x2):
        return shares_array(self._map, v, Bundle(np.zeros(len(v)), p, x2))

    def jac_y(self, y, p, x2):
        outside = 1.0 - y.sum()
        return np.diag(1.0 / y) + 1.0 / outside


@dataclass
class MixedLogitInverse(Transform):
    """Inverse of a mixed-logit share map, via the inversion module."""

    map: ShareMap
    inversion: InversionConfig = DEFAULT_INVERSION

    def apply(self, y, p, x2):
        a = Bundle(np.zeros(len(y)), p, x2)
        return invert(self.map, validate_shares(y), a, self.inversion)

    def invert(self, v, p, x2):
        return shares_array(self.map, v, Bundle(np.zeros(len(v)), p, x2))

    def jac_y(self, y, p, x2):
        from .demand import share_jacobian
        a = Bundle(np.zeros(len(y)), p, x2)
        delta = invert(self.map, validate_shares(y), a, self.inversion)
        return np.linalg.inv(share_jacobian(self.map, delta, a))


@dataclass
class Affine(Transform):
    """h(y) = A y + b, independent of (p, x2)."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if abs(np.linalg.det(self.A)) < 1e-12:
            raise ConfigError("affine transform requires invertible A")

    def apply(self, y, p, x2):
        return self.A @ y + self.b

    def invert(self, v, p, x2):
        return np.linalg.solve(self.A, v - self.b)

    def jac_y(self, y, p, x2):
        return self.A.copy()


@dataclass
class MonotoneSpline(Transform):
    """Coordinatewise monotone piecewise-linear map with linear tails."""

    knots: np.ndarray  # (K,) strictly increasing
    values: np.ndarray  # (K,) strictly increasing

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.knots) <= 0) or np.any(np.diff(self.values) <= 0):
            raise ConfigError("spline knots and values must be strictly increasing")

    def _interp(self, t, xs, ys):
        out = np.interp(t, xs, ys)
        lo = t < xs[0]
        hi = t > xs[-1]
        s0 = (ys[1] - ys[0]) / (xs[1] - xs[0])
        s1 = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        out = np.where(lo, ys[0] + s0 * (t - xs[0]), out)
        out = np.where(hi, ys[-1] + s1 * (t - xs[-1]), out)
        return out

    def apply(self, y, p, x2):
        return self._interp(y, self.knots, self.values)

    def invert(self, v, p, x2):
        return self._interp(v, self.values, self.knots)


@dataclass
class Shifted(Transform):
    """base plus a constant vector; inverse subtracts it."""

    base: Transform
    c: np.ndarray

    def __post_init__(self):
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))

    def apply(self, y, p, x2):
        return self.base.apply(y, p, x2) + self.c

    def invert(self, v, p, x2):
        return self.base.invert(v - self.c, p, x2)

    def jac_y(self, y, p, x2):
        return self.base.jac_y(y, p, x2)


@dataclass
class Composed(Transform):
    """outer after inner: h(y, p, x2) = outer(inner(y, p, x2), p, x2)."""

    outer: Transform
    inner: Transform

    def apply(self, y, p, x2):
        return self.outer.apply(self.inner.apply(y, p, x2), p, x2)

    def invert(self, v, p, x2):
        return self.inner.invert(self.outer.invert(v, p, x2), p, x2)


class Phi:
    """Invertible map R^J -> interior simplex, derived from (h, a0).

    phi^{-1}(y) = h(y, p0, x20) - x10, so phi(v) = h^{-1}(v + x10, p0, x20).
    """

    def __init__(self, h: Transform, a0: Bundle):
        self.h = h
        self.a0 = a0

    def apply(self, v) -> np.ndarray:
        return self.h.invert(np.asarray(v, dtype=float) + self.a0.x1, self.a0.p, self.a0.x2)

    def inverse(self, y) -> np.ndarray:
        return self.h.apply(np.asarray(y, dtype=float), self.a0.p, self.a0.x2) - self.a0.x1


_REGISTRY = {
    "logit-inverse": LogitInverse,
    "mixed-logit-inverse": MixedLogitInverse,
    "affine": Affine,
    "monotone-spline": MonotoneSpline,
}


def from_config(d: dict) -> Transform:
    """Build a transform from a config mapping with a `family` key."""
    d = dict(d)
    family = d.pop("family", None)
    if family == "logit-inverse":
        return LogitInverse(alpha=float(d.get("alpha", 0.0)),
                            gamma=tuple(d.get("gamma", ())))
    if family == "affine":
        return Affine(A=np.asarray(d["A"]), b=np.asarray(d["b"]))
    if family == "monotone-spline":
        return MonotoneSpline(knots=np.asarray(d["knots"]), values=np.asarray(d["values"]))
    raise ConfigError(f"unknown transform family: {family!r}")
