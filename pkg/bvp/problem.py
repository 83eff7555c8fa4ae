"""
Problem definitions for

    ᶜD^mu x(t) + f(t, x(t)) = omega x(t),  0 < t < 1,   x'(0) = 0,  x(1) = 0,

where f may blow up at t = 0, t = 1 and x = 0. Every callable on a
ProblemSpec is vectorized: it takes numpy arrays and returns an array of the
broadcast shape.
"""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from numerics.exceptions import DomainError
from numerics.green import KernelParams

from .exceptions import EvaluationError


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    params: KernelParams
    f: Callable
    q: Callable
    u: Callable
    v: Callable
    gamma: Callable
    R: float
    label: str = "custom"
    # closed-form extras a built-in family can provide (extremal points etc.)
    hints: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError(f"truncation ceiling R must be positive, got {self.R}")

    def source(self, t, x):
        """f(t, x) with a check that every value is finite."""
        values = np.asarray(self.f(t, x), dtype=float)
        bad = ~np.isfinite(values)
        if bad.any():
            i = np.unravel_index(np.argmax(bad), values.shape)
            tb = np.broadcast_to(np.asarray(t, dtype=float), values.shape)[i]
            xb = np.broadcast_to(np.asarray(x, dtype=float), values.shape)[i]
            raise EvaluationError(f"f returned {values[i]} at t={tb!r}, x={xb!r}", where=(float(tb), float(xb)))
        return values

    def gamma_at(self, r):
        return float(np.asarray(self.gamma(np.asarray(float(r))), dtype=float))


@dataclass(frozen=True)
class Truncation:
    """Regularization index m and ceiling R of the operator T_m."""
    m: int
    R: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"regularization index m must be a positive integer, got {self.m}")
        if not self.R > 0:
            raise DomainError(f"truncation ceiling R must be positive, got {self.R}")

    @property
    def floor(self):
        return 1.0 / self.m

    def admits(self, epsilon):
        return 1.0 / self.m < epsilon


@dataclass
class ProblemConfig:
    """A validated problem file: the problem itself plus solver and output options."""
    problem: ProblemSpec
    solver: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    family: str = "custom"
