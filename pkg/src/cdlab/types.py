"""Shared domain types and validation.

All types are immutable after construction; arrays are defensively copied
and marked read-only so instances are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SimplexViolation

#: Boundary of the open simplex. Shares at or beyond it are errors, never
#: silently clamped: clamping would mask inversion failures downstream.
SIMPLEX_EPS = 1e-12


def _frozen(a, dtype=float, ndim=None) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    if ndim is not None and out.ndim != ndim:
        raise ConfigError(f"expected {ndim}-d array, got shape {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SharesVector:
    """Inside-good market shares on the interior of the simplex.

    The outside share 1 - sum(values) is strictly positive. Construct via
    :func:`validate_shares`.
    """

    values: np.ndarray

    @property
    def J(self) -> int:
        return len(self.values)

    @property
    def outside(self) -> float:
        return 1.0 - float(self.values.sum())

    def __eq__(self, other):
        return isinstance(other, SharesVector) and np.array_equal(
            self.values, other.values
        )


def validate_shares(values) -> SharesVector:
    """Validate a candidate share vector.

    Raises SimplexViolation if any entry lies outside (eps, 1-eps) or the
    entries sum to at least 1-eps, for eps = SIMPLEX_EPS.
    """
    v = _frozen(values, ndim=1)
    if not np.all(np.isfinite(v)):
        raise SimplexViolation(f"non-finite shares: {v}")
    if np.any(v <= SIMPLEX_EPS) or np.any(v >= 1.0 - SIMPLEX_EPS):
        raise SimplexViolation(f"share outside ({SIMPLEX_EPS}, 1-{SIMPLEX_EPS}): {v}")
    if v.sum() >= 1.0 - SIMPLEX_EPS:
        raise SimplexViolation(f"shares sum to {v.sum()} >= 1 - {SIMPLEX_EPS}")
    return SharesVector(v)


@dataclass(frozen=True)
class Bundle:
    """A treatment bundle: special characteristic, price, and other
    characteristics for each of the J products."""

    x1: np.ndarray  # (J,)
    p: np.ndarray  # (J,)
    x2: np.ndarray  # (J, d2); d2 may be zero

    def __post_init__(self):
        object.__setattr__(self, "x1", _frozen(self.x1, ndim=1))
        object.__setattr__(self, "p", _frozen(self.p, ndim=1))
        x2 = np.array(self.x2, dtype=float)
        if x2.ndim == 1:
            x2 = x2.reshape(len(self.x1), -1) if x2.size else x2.reshape(len(self.x1), 0)
        if x2.ndim != 2:
            raise ConfigError(f"x2 must be a J x d2 matrix, got shape {x2.shape}")
        x2.setflags(write=False)
        object.__setattr__(self, "x2", x2)
        if not (len(self.x1) == len(self.p) == self.x2.shape[0]):
            raise ConfigError(
                f"inconsistent bundle dimensions: x1 {self.x1.shape}, "
                f"p {self.p.shape}, x2 {self.x2.shape}"
            )

    @property
    def J(self) -> int:
        return len(self.x1)

    def replace(self, x1=None, p=None, x2=None) -> "Bundle":
        return Bundle(
            self.x1 if x1 is None else x1,
            self.p if p is None else p,
            self.x2 if x2 is None else x2,
        )


def bundle(x1, p, x2=None) -> Bundle:
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if x2 is None:
        x2 = np.zeros((len(x1), 0))
    return Bundle(x1, p, x2)


@dataclass(frozen=True)
class MarketDraw:
    """One market's latent state plus its observed triple."""

    xi: np.ndarray  # (J,) structural shock
    zeta: int  # latent type tag
    y: SharesVector  # observed shares, equals the type's share map at (a, xi)
    a: Bundle
    z: np.ndarray  # instruments


_MIXING_KINDS = ("degenerate", "normal", "lognormal", "finite-mixture")


@dataclass(frozen=True)
class MixingSpec:
    """Distribution of the random coefficient vector beta.

    For dim-dimensional beta, entry 0 multiplies price (entering utility as
    -beta_0 * p) and entries 1..dim-1 multiply the leading columns of x2.
    `loc`/`scale` are per-dimension; lognormal applies exp() to the
    underlying normal coordinatewise. A finite mixture holds sub-specs with
    simplex weights.
    """

    kind: str
    loc: tuple = (0.0,)
    scale: tuple = (1.0,)
    weights: tuple = ()
    components: tuple = ()

    def __post_init__(self):
        if self.kind not in _MIXING_KINDS:
            raise ConfigError(f"unknown mixing kind: {self.kind!r}")
        object.__setattr__(self, "loc", tuple(float(v) for v in np.atleast_1d(self.loc)))
        object.__setattr__(
            self, "scale", tuple(float(v) for v in np.atleast_1d(self.scale))
        )
        if self.kind == "finite-mixture":
            if not self.components:
                raise ConfigError("finite-mixture requires components")
            w = np.asarray(self.weights, dtype=float)
            if len(w) != len(self.components) or np.any(w < 0) or abs(w.sum() - 1) > 1e-10:
                raise ConfigError("mixture weights must lie on the simplex")
            dims = {c.dim for c in self.components}
            if len(dims) != 1:
                raise ConfigError("mixture components must share a dimension")
        else:
            if len(self.loc) != len(self.scale):
                raise ConfigError("loc and scale must have equal length")
            if self.kind in ("normal", "lognormal") and any(s <= 0 for s in self.scale):
                raise ConfigError(f"{self.kind} mixing requires strictly positive scale")

    @property
    def dim(self) -> int:
        if self.kind == "finite-mixture":
            return self.components[0].dim
        return len(self.loc)


def degenerate(*beta) -> MixingSpec:
    return MixingSpec("degenerate", loc=beta, scale=(0.0,) * len(beta))


def normal_mixing(loc, scale) -> MixingSpec:
    return MixingSpec("normal", loc=loc, scale=scale)


def lognormal_mixing(loc, scale) -> MixingSpec:
    return MixingSpec("lognormal", loc=loc, scale=scale)


def finite_mixture(weights, components) -> MixingSpec:
    return MixingSpec(
        "finite-mixture", weights=tuple(float(w) for w in weights),
        components=tuple(components),
    )
