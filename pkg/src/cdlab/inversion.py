"""Recover the index delta from observed shares.

Plain logit has a closed form. Mixed logit uses the log-share contraction
delta <- delta + log y - log sigma(delta), with an optional Newton polish
on the analytic Jacobian once the iterate is close.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demand import ShareMap, _fixed_index, share_jacobian, shares_array
from .errors import ConfigError, NoConvergence
from .types import Bundle, SharesVector

NEWTON_SWITCH_RESIDUAL = 1e-4


@dataclass(frozen=True)
class InversionConfig:
    tol: float = 1e-12  # sup-norm tolerance on shares(delta) - y
    max_iter: int = 10_000
    newton_polish: bool = True

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigError("require tol > 0 and max_iter >= 1")


DEFAULT_INVERSION = InversionConfig()


def logit_closed_form(m: ShareMap, y: SharesVector, a: Bundle) -> np.ndarray:
    """delta_j = log y_j - log(1 - sum y) - g(a_j) for plain logit."""
    v = y.values
    return np.log(v) - np.log(y.outside) - _fixed_index(m, a)


def invert(m: ShareMap, y: SharesVector, a: Bundle,
           cfg: InversionConfig = DEFAULT_INVERSION) -> np.ndarray:
    """Solve shares(m, delta, a) = y for delta.

    Raises NoConvergence(iterations, residual) when the iteration budget is
    exhausted; this is the operational signal of an invertibility failure
    or a tolerance that is too tight.
    """
    if m.kind == "plain-logit":
        return logit_closed_form(m, y, a)

    target = y.values
    log_target = np.log(target)
    # Plain-logit start ignoring the mixing; the contraction is globally
    # stable so the start only affects iteration count.
    delta = np.log(target) - np.log(y.outside)
    residual = np.inf
    for it in range(1, cfg.max_iter + 1):
        s = shares_array(m, delta, a)
        residual = float(np.max(np.abs(s - target)))
        step_log = log_target - np.log(s)
        # Require the log-share residual too: the absolute share residual
        # alone says little about delta accuracy when shares are tiny.
        if residual <= cfg.tol and float(np.max(np.abs(step_log))) <= cfg.tol:
            return delta
        if cfg.newton_polish and np.max(np.abs(step_log)) < NEWTON_SWITCH_RESIDUAL:
            jac = share_jacobian(m, delta, a) / s[:, None]
            try:
                delta = delta + np.linalg.solve(jac, step_log)
                continue
            except np.linalg.LinAlgError:
                pass  # fall through to the contraction step
        delta = delta + step_log
    raise NoConvergence(cfg.max_iter, residual)


def structural_shock(m: ShareMap, y: SharesVector, a: Bundle,
                     cfg: InversionConfig = DEFAULT_INVERSION) -> np.ndarray:
    """xi = invert(y) - x1: the latent demand shifter implied by (y, a)."""
    return invert(m, y, a, cfg) - a.x1
