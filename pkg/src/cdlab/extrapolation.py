"""Extrapolation-from-averages: rule families, the instrument-orthogonality
GMM solve, unit-level prediction, and correctness diagnostics.

A rule family is a finite-dimensionally parameterized class of outcome
transformations H(y, a), invertible in y. Instrument orthogonality selects
one member; predictions then act as if the selected transformed outcome
has zero individual treatment effects.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit
from scipy.stats import qmc

from .counterfactual import CounterfactualEngine
from .demand import plain_logit
from .errors import ConfigError, InversionFailure, NonUnique
from .types import Bundle, SharesVector, validate_shares

CRITERION_TOL = 1e-10
THETA_UNIQUE_TOL = 1e-6
DEFAULT_STARTS = 16


@dataclass(frozen=True)
class Obs:
    """One observation: outcome, treatment, instruments.

    y is a scalar outcome or a share vector; a is a hashable treatment
    level (demeaned / quantile families) or a Bundle (partially linear).
    """

    y: object
    a: object
    z: np.ndarray


def observe(y, a, z) -> Obs:
    return Obs(y, a, np.atleast_1d(np.asarray(z, dtype=float)))


# --- scalar monotone transforms for the demeaned family ---------------------

_F_TRANSFORMS = {
    "identity": (lambda y: y, lambda v: v),
    "log": (np.log, np.exp),
    "logit": (logit, expit),
}


@dataclass(frozen=True)
class TestFunctionSet:
    """Test functions applied to H(Y, A) before instrument orthogonality.

    mean-independence uses the identity; indicator-grid uses centered
    indicators 1(h <= c) - mean over the sample, for each cutpoint c.
    """

    kind: str = "mean-independence"
    grid: tuple = ()

    def __post_init__(self):
        if self.kind not in ("mean-independence", "indicator-grid"):
            raise ConfigError(f"unknown test function kind: {self.kind!r}")
        g = tuple(float(c) for c in self.grid)
        if list(g) != sorted(g) or any(not np.isfinite(c) for c in g):
            raise ConfigError("indicator grid must be sorted and finite")
        object.__setattr__(self, "grid", g)

    def apply(self, h: np.ndarray) -> np.ndarray:
        """(n,) transformed values -> (n, q) matrix of test evaluations."""
        if self.kind == "mean-independence":
            return h[:, None]
        cols = [(h <= c).astype(float) for c in self.grid]
        M = np.column_stack(cols)
        return M - M.mean(axis=0)


MEAN_INDEPENDENCE = TestFunctionSet()


@dataclass(frozen=True)
class RuleFamily:
    """A parameterized class of invertible outcome transformations.

    kinds:
      demeaned-transform      H(y, a) = f(y) - mu(a), mu free per treatment
                              level over a finite support
      quantile-rank           H(y, a) = smoothed empirical CDF of Y given
                              A = a (scalar outcomes)
      partially-linear-index  H(y, a) = logit(y) + alpha p - x2 gamma - x1,
                              coefficients (alpha, gamma) = param_map theta
    """

    kind: str
    f: str = "identity"  # demeaned kind
    param_map: tuple = ()  # partially-linear: rows of the theta -> coeff map
    theta: tuple | None = None  # fitted parameters
    levels: tuple = ()  # demeaned/quantile: treatment support
    samples: tuple = ()  # quantile: per-level sorted outcome samples
    bounds: tuple = (-5.0, 5.0)  # per-parameter search box

    def __post_init__(self):
        kinds = ("demeaned-transform", "quantile-rank", "partially-linear-index")
        if self.kind not in kinds:
            raise ConfigError(f"unknown rule family kind: {self.kind!r}")
        if self.kind == "demeaned-transform" and self.f not in _F_TRANSFORMS:
            raise ConfigError(f"unknown transform f: {self.f!r}")

    @property
    def fitted(self) -> bool:
        return self.theta is not None or bool(self.samples)

    # -- transformed outcome and its inverse --------------------------------

    def _mu(self, a) -> float:
        try:
            k = self.levels.index(a)
        except ValueError:
            raise ConfigError(f"treatment level {a!r} outside the fitted support")
        return self.theta[k]

    def _pl_coeffs(self) -> np.ndarray:
        M = np.atleast_2d(np.asarray(self.param_map, dtype=float)) if self.param_map \
            else np.eye(len(self.theta))
        return M @ np.asarray(self.theta, dtype=float)

    def H(self, y, a) -> float:
        """Transformed outcome at (y, a); scalar for scalar families."""
        if self.kind == "demeaned-transform":
            fwd, _ = _F_TRANSFORMS[self.f]
            return float(fwd(float(y)) - self._mu(a))
        if self.kind == "quantile-rank":
            k = self.levels.index(a)
            return float(_cdf_interp(np.asarray(self.samples[k]), float(y)))
        coeffs = self._pl_coeffs()
        y = float(np.atleast_1d(np.asarray(y, dtype=float) if not isinstance(y, SharesVector) else y.values)[0])
        a: Bundle
        x2term = float(a.x2[0] @ coeffs[1:1 + a.x2.shape[1]]) if a.x2.shape[1] else 0.0
        return float(logit(y) + coeffs[0] * a.p[0] - x2term - a.x1[0])

    def H_inverse(self, v: float, a) -> float:
        if self.kind == "demeaned-transform":
            _, inv = _F_TRANSFORMS[self.f]
            return float(inv(v + self._mu(a)))
        if self.kind == "quantile-rank":
            k = self.levels.index(a)
            return float(_quantile_interp(np.asarray(self.samples[k]), v))
        coeffs = self._pl_coeffs()
        x2term = float(a.x2[0] @ coeffs[1:1 + a.x2.shape[1]]) if a.x2.shape[1] else 0.0
        out = float(expit(v - coeffs[0] * a.p[0] + x2term + a.x1[0]))
        if not 0.0 < out < 1.0:
            raise InversionFailure(f"inverse left the outcome space: {out}")
        return out


def demeaned_family(f: str = "identity") -> RuleFamily:
    return RuleFamily("demeaned-transform", f=f)


def quantile_family() -> RuleFamily:
    return RuleFamily("quantile-rank")


def partially_linear_family(n_params: int = 1, param_map=(), bounds=(-5.0, 5.0)) -> RuleFamily:
    fam = RuleFamily("partially-linear-index",
                     param_map=tuple(tuple(row) for row in param_map), bounds=bounds)
    object.__setattr__(fam, "_n_params", n_params)
    return fam


def _cdf_interp(sorted_sample: np.ndarray, y: float) -> float:
    """Monotone piecewise-linear empirical CDF with linear tails."""
    m = len(sorted_sample)
    ranks = (np.arange(1, m + 1) - 0.5) / m
    return float(_interp_extrap(y, sorted_sample, ranks))

def _quantile_interp(sorted_sample: np.ndarray, u: float) -> float:
    m = len(sorted_sample)
    ranks = (np.arange(1, m + 1) - 0.5) / m
    return float(_interp_extrap(u, ranks, sorted_sample))


def _interp_extrap(t, xs, ys):
    out = np.interp(t, xs, ys)
    s0 = (ys[1] - ys[0]) / (xs[1] - xs[0])
    s1 = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    out = np.where(t < xs[0], ys[0] + s0 * (t - xs[0]), out)
    out = np.where(t > xs[-1], ys[-1] + s1 * (t - xs[-1]), out)
    return out


# --- instrument basis -------------------------------------------------------

def instrument_basis(data: Sequence[Obs], degree: int = 2,
                     max_cells: int = 12) -> np.ndarray:
    """b(Z) design: finite-support dummies when Z takes few values, else
    polynomials up to `degree` with pairwise interactions."""
    Z = np.array([o.z for o in data])
    uniq = np.unique(Z, axis=0)
    if len(uniq) <= max_cells:
        cols = [np.all(Z == u, axis=1).astype(float) for u in uniq]
        return np.column_stack(cols)
    cols = [np.ones(len(Z))]
    d = Z.shape[1]
    for k in range(d):
        cols.append(Z[:, k])
    if degree >= 2:
        for k in range(d):
            for l in range(k, d):
                cols.append(Z[:, k] * Z[:, l])
    return np.column_stack(cols)


# --- GMM solve --------------------------------------------------------------

@dataclass
class FitReport:
    theta: np.ndarray
    criterion: float
    starts: int
    unique: bool


def _moment_matrix(H_vals: np.ndarray, tests: TestFunctionSet, B: np.ndarray) -> np.ndarray:
    """Per-observation moment contributions: (n, q * n_basis)."""
    M = tests.apply(H_vals)
    return (M[:, :, None] * B[:, None, :]).reshape(len(H_vals), -1)


def _two_step_weight(contrib: np.ndarray) -> np.ndarray:
    S = np.cov(contrib, rowvar=False, bias=True)
    S = np.atleast_2d(S)
    ridge = 1e-10 * max(np.trace(S) / len(S), 1e-30)
    return np.linalg.pinv(S + ridge * np.eye(len(S)))


def solve_orthogonality(family: RuleFamily, tests: TestFunctionSet,
                        data: Sequence[Obs], starts: int = DEFAULT_STARTS,
                        seed: int = 0) -> tuple[RuleFamily, FitReport]:
    """Select the family member orthogonal to the instruments.

    Two-step GMM on moments E[m(H_theta(Y, A)) (x) b(Z)]. The solve is
    closed-form for families linear in theta; otherwise derivative-free
    simplex search from Latin-hypercube starts. Raises NonUnique when two
    starts reach the same criterion at materially different theta.
    """
    data = list(data)
    if family.kind == "quantile-rank":
        return _fit_quantile(family, data)
    if family.kind == "demeaned-transform":
        return _fit_demeaned(family, tests, data)
    return _fit_partially_linear(family, tests, data, starts, seed)


def _require_size(n: int, dim: int):
    if n < 10 * dim:
        raise ConfigError(f"need at least {10 * dim} observations for {dim} parameters, got {n}")


def _fit_quantile(family: RuleFamily, data: list[Obs]) -> tuple[RuleFamily, FitReport]:
    levels = sorted({o.a for o in data})
    samples = tuple(
        tuple(sorted(float(o.y) for o in data if o.a == lev)) for lev in levels
    )
    if any(len(s) < 2 for s in samples):
        raise ConfigError("each treatment level needs at least 2 outcomes")
    fitted = replace(family, levels=tuple(levels), samples=samples)
    report = FitReport(np.array([]), 0.0, starts=1, unique=True)
    return fitted, report


def _fit_demeaned(family: RuleFamily, tests: TestFunctionSet,
                  data: list[Obs]) -> tuple[RuleFamily, FitReport]:
    levels = sorted({o.a for o in data})
    _require_size(len(data), len(levels))
    fwd, _ = _F_TRANSFORMS[family.f]
    fy = np.array([fwd(float(o.y)) for o in data])
    D = np.column_stack([[1.0 if o.a == lev else 0.0 for o in data] for lev in levels])
    B = instrument_basis(data)
    # moments g(theta) = mean(b_l * (fy - D theta)): linear GMM, closed form
    G = B.T @ D / len(data)
    c = B.T @ fy / len(data)
    theta = _linear_gmm(G, c, lambda th: (fy - D @ th)[:, None] * B)
    crit = float(np.sum((c - G @ theta) ** 2))
    fitted = replace(family, theta=tuple(theta), levels=tuple(levels))
    rank = np.linalg.matrix_rank(G, tol=1e-10)
    if rank < len(levels):
        raise NonUnique(f"moment system rank {rank} < {len(levels)} parameters")
    return fitted, FitReport(theta, crit, starts=1, unique=True)


def _linear_gmm(G: np.ndarray, c: np.ndarray, contrib_fn) -> np.ndarray:
    theta1, *_ = np.linalg.lstsq(G, c, rcond=None)
    W = _two_step_weight(contrib_fn(theta1))
    A = G.T @ W @ G
    return np.linalg.solve(A, G.T @ W @ c)


def _fit_partially_linear(family: RuleFamily, tests: TestFunctionSet,
                          data: list[Obs], starts: int, seed: int):
    if family.param_map:
        dim = len(family.param_map[0])
    else:
        dim = getattr(family, "_n_params", 1)
    _require_size(len(data), dim)
    B = instrument_basis(data)
    y = np.array([float(o.y.values[0]) if isinstance(o.y, SharesVector) else float(o.y)
                  for o in data])
    x1 = np.array([o.a.x1[0] for o in data])
    p = np.array([o.a.p[0] for o in data])
    X2 = np.array([o.a.x2[0] for o in data])
    M = np.atleast_2d(np.asarray(family.param_map, dtype=float)) if family.param_map \
        else np.eye(dim)
    ly = logit(y)

    def H_vals(theta):
        coeffs = M @ theta
        x2term = X2 @ coeffs[1:1 + X2.shape[1]] if X2.shape[1] else 0.0
        return ly + coeffs[0] * p - x2term - x1

    def criterion(theta, W):
        contrib = _moment_matrix(H_vals(theta), tests, B)
        g = contrib.mean(axis=0)
        return float(g @ W @ g)

    lo, hi = family.bounds
    sampler = qmc.LatinHypercube(d=dim, seed=seed)
    start_pts = lo + (hi - lo) * sampler.random(starts)

    def multistart(W):
        sols = []
        for s in start_pts:
            res = minimize(criterion, s, args=(W,), method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000})
            sols.append((float(res.fun), res.x))
        sols.sort(key=lambda t: (t[0], tuple(t[1])))
        return sols

    q = tests.apply(np.zeros(1)).shape[1] * B.shape[1]
    W1 = np.eye(q)
    sols = multistart(W1)
    theta1 = sols[0][1]
    W2 = _two_step_weight(_moment_matrix(H_vals(theta1), tests, B))
    sols = multistart(W2)
    best_crit, best_theta = sols[0]
    near = [th for cr, th in sols if cr <= best_crit + 1e-8]
    unique = all(np.max(np.abs(th - best_theta)) <= THETA_UNIQUE_TOL for th in near)
    if not unique:
        raise NonUnique("multiple theta attain the GMM minimum",
                        candidates=[best_theta] + [th for th in near
                                                   if np.max(np.abs(th - best_theta)) > THETA_UNIQUE_TOL])
    fitted = replace(family, theta=tuple(best_theta))
    return fitted, FitReport(best_theta, best_crit, starts=starts, unique=True)


def extrapolate(fitted: RuleFamily, y, a, target_a):
    """Predicted outcome at target_a: H^{-1}(H(y, a), target_a).

    Returns y exactly when target_a equals a.
    """
    if not fitted.fitted:
        raise ConfigError("family must be fitted by solve_orthogonality first")
    if _same_treatment(a, target_a):
        return y
    return fitted.H_inverse(fitted.H(y, a), target_a)


def _same_treatment(a, b) -> bool:
    if isinstance(a, Bundle) and isinstance(b, Bundle):
        return (np.array_equal(a.x1, b.x1) and np.array_equal(a.p, b.p)
                and np.array_equal(a.x2, b.x2))
    return a == b


@dataclass
class Prop32Report:
    max_gap: float
    tol: float = 1e-10

    @property
    def passed(self) -> bool:
        return self.max_gap <= self.tol


def check_prop32(fitted: RuleFamily, data: Sequence[Obs],
                 targets: Sequence) -> Prop32Report:
    """Agreement between rule-based extrapolation and the structural model
    constructed from the fitted rule, on every market and target.

    For the partially linear family the structural route goes through the
    share-map inversion engine, an independent code path; for the demeaned
    family the structural conversion map is composed explicitly.
    """
    gap = 0.0
    for o in data:
        for t in targets:
            tilde = extrapolate(fitted, o.y, o.a, t)
            structural = _structural_predict(fitted, o.y, o.a, t)
            gap = max(gap, abs(float(tilde) - float(structural)))
    return Prop32Report(gap)


def _structural_predict(fitted: RuleFamily, y, a, target_a) -> float:
    if fitted.kind == "partially-linear-index":
        coeffs = fitted._pl_coeffs()
        engine = CounterfactualEngine(plain_logit(alpha=float(coeffs[0]),
                                                  gamma=tuple(coeffs[1:])))
        yv = y if isinstance(y, SharesVector) else validate_shares([float(y)])
        return float(engine.predict(yv, a, target_a).values[0])
    if fitted.kind == "demeaned-transform":
        # conversion to the baseline level and back, composed explicitly
        fwd, inv = _F_TRANSFORMS[fitted.f]
        base = fitted.levels[0]
        y0 = inv(fwd(float(y)) - fitted._mu(a) + fitted._mu(base))
        return float(inv(fwd(y0) - fitted._mu(base) + fitted._mu(target_a)))
    # quantile-rank: via the baseline-level quantile scale
    base = fitted.levels[0]
    u = fitted.H(float(y), a)
    y0 = fitted.H_inverse(u, base)
    return float(fitted.H_inverse(fitted.H(y0, base), target_a))


@dataclass
class PriceCcsReport:
    """Price-transport correctness vs characteristic-transport failure."""

    max_price_error: float
    x1_error_by_type: dict
    price_tol: float = 1e-8

    @property
    def price_correct(self) -> bool:
        return self.max_price_error <= self.price_tol


def price_ccs_check(h_transform, population, truth: Callable,
                    price_grid: Sequence[float],
                    x1_shift: float = 1.0) -> PriceCcsReport:
    """On a population homogeneous in price response but heterogeneous in
    the x1 response, model-implied price counterfactuals should match the
    truth while x1 counterfactuals err for at least one type.

    `truth(draw, bundle)` evaluates the stored potential outcome.
    """
    max_price = 0.0
    x1_err: dict = {}
    for draw in population:
        a = draw.a
        y = draw.y.values
        v = h_transform.apply_bundle(y, a)
        for pp in price_grid:
            target = a.replace(p=np.full(a.J, float(pp)))
            pred = h_transform.invert_bundle(v, target)  # price move: x1 unchanged
            true_y = truth(draw, target).values
            max_price = max(max_price, float(np.max(np.abs(pred - true_y))))
        target = a.replace(x1=a.x1 + x1_shift)
        pred = h_transform.invert_bundle(v - a.x1 + target.x1, target)
        true_y = truth(draw, target).values
        err = float(np.max(np.abs(pred - true_y)))
        x1_err[draw.zeta] = max(x1_err.get(draw.zeta, 0.0), err)
    return PriceCcsReport(max_price, x1_err)
