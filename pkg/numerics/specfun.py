"""
Gamma and two-parameter Mittag-Leffler functions on the nonnegative axis.

E_{mu,nu}(x) = sum_{k>=0} x**k / Gamma(mu*k + nu) is summed directly: every
argument the boundary value problem produces is omega * s**mu with s in
[0, 1], so the series is evaluated far from the regime where asymptotic
expansions are needed. Arguments above ML_MAX_ARGUMENT are rejected.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma, gammaln

from .conf import fbvp_settings
from .exceptions import DomainError, NonConvergenceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MLIndex:
    mu: float
    nu: float

    def __post_init__(self):
        # written as `not > 0` so NaN is rejected too
        if not (self.mu > 0 and self.nu > 0):
            raise DomainError(f"Mittag-Leffler index needs mu > 0 and nu > 0, got ({self.mu}, {self.nu})")


@dataclass(frozen=True)
class EvalPolicy:
    rel_tol: float
    k_max: int

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise DomainError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.k_max < 16:
            raise DomainError(f"k_max must be at least 16, got {self.k_max}")

    @classmethod
    def default(cls):
        return cls(rel_tol=fbvp_settings('ML_REL_TOL'), k_max=fbvp_settings('ML_K_MAX'))


def gamma_fn(x):
    """Gamma(x) for x > 0 (relative error below 1e-13 on (0, 50])."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"gamma_fn is defined here for x > 0 only, got {x}")
    return float(_gamma(x))


def _check_arguments(x):
    if x.size == 0:
        return
    if not np.all(np.isfinite(x)) or x.min() < 0:
        raise DomainError("Mittag-Leffler arguments must be finite and nonnegative")
    cap = fbvp_settings('ML_MAX_ARGUMENT')
    if x.max() > cap:
        raise DomainError(f"Mittag-Leffler argument {x.max()} exceeds the supported range [0, {cap}]")


def mittag_leffler_array(idx, x, policy=None):
    """
    Elementwise E_{mu,nu}(x) over an array of nonnegative arguments.

    Terms are formed from log-Gamma and summed in ascending k with Kahan
    compensation. Each element stops accumulating once its own newly added
    term falls below rel_tol times its partial sum, so an element's value does
    not depend on what else is in the array.
    """
    policy = policy or EvalPolicy.default()
    x = np.asarray(x, dtype=float)
    _check_arguments(x)

    flat = x.reshape(-1)
    total = np.full(flat.shape, 1.0 / gamma_fn(idx.nu))
    comp = np.zeros(flat.shape)
    live = np.flatnonzero(flat > 0)
    log_x = np.log(flat[live])

    k = 0
    while live.size:
        k += 1
        if k > policy.k_max:
            raise NonConvergenceError(
                f"E_{{{idx.mu},{idx.nu}}} did not meet rel_tol={policy.rel_tol} "
                f"within k_max={policy.k_max} terms (largest argument {flat[live].max()})"
            )
        term = np.exp(k * log_x - gammaln(idx.mu * k + idx.nu))
        y = term - comp[live]
        s = total[live] + y
        comp[live] = (s - total[live]) - y
        total[live] = s

        keep = term >= policy.rel_tol * s
        live = live[keep]
        log_x = log_x[keep]

    return total.reshape(x.shape)


def mittag_leffler(idx, x, policy=None):
    """E_{mu,nu}(x) for a single nonnegative real x."""
    x = float(x)
    if not x >= 0:
        raise DomainError(f"mittag_leffler needs x >= 0, got {x}")
    return float(mittag_leffler_array(idx, np.array([x]), policy)[0])
