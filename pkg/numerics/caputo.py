"""
Grid functions on uniform meshes of [0, 1] and a discrete Caputo derivative
of order mu in (1, 2], used to measure how well a computed solution
satisfies  ᶜD^mu x + f(t, x) = omega x.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import DomainError, GridTooCoarseError
from .specfun import gamma_fn

logger = logging.getLogger(__name__)

MIN_INTERVALS = 8
UNIFORM_SPACING_TOL = 1e-14
INTERP_RULES = ('linear', 'cubic')


@dataclass(frozen=True, eq=False)
class GridFunction:
    nodes: np.ndarray
    values: np.ndarray
    interp: str = 'linear'
    # derivative profiles leave t_0 and t_N undefined (NaN)
    undefined_ends: bool = False

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, 'nodes', nodes)
        object.__setattr__(self, 'values', values)

        if nodes.ndim != 1 or values.shape != nodes.shape:
            raise DomainError("nodes and values must be 1-d arrays of equal length")
        if nodes.size - 1 < MIN_INTERVALS:
            raise GridTooCoarseError(f"grid needs at least {MIN_INTERVALS} intervals, got {nodes.size - 1}")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise DomainError("grid must run from t_0 = 0 to t_N = 1")
        steps = np.diff(nodes)
        if np.abs(steps - 1.0 / (nodes.size - 1)).max() > UNIFORM_SPACING_TOL:
            raise DomainError("grid spacing is not uniform")
        if self.interp not in INTERP_RULES:
            raise DomainError(f"unknown interpolation rule {self.interp!r}, expected one of {INTERP_RULES}")

        checked = values[1:-1] if self.undefined_ends else values
        if not np.all(np.isfinite(checked)):
            raise DomainError("grid function values must be finite")

    @classmethod
    def uniform(cls, n_nodes, values, interp='linear'):
        """Grid of n_nodes equispaced nodes; `values` is an array or a vectorized callable."""
        nodes = np.linspace(0.0, 1.0, int(n_nodes))
        if callable(values):
            values = values(nodes)
        return cls(nodes, np.broadcast_to(np.asarray(values, dtype=float), nodes.shape).copy(), interp)

    @property
    def n_intervals(self):
        return self.nodes.size - 1

    @property
    def h(self):
        return 1.0 / self.n_intervals

    def with_values(self, values):
        return GridFunction(self.nodes, values, self.interp)

    def __call__(self, t):
        """Interpolate at t in [0, 1] with this function's rule."""
        t = np.asarray(t, dtype=float)
        if self.interp == 'cubic':
            out = CubicSpline(self.nodes, self.values)(t)
        else:
            out = np.interp(t, self.nodes, self.values)
        return float(out) if out.ndim == 0 else out

    def sup_norm(self):
        return float(np.nanmax(np.abs(self.values)))

    def sup_distance(self, other):
        if other.nodes.shape != self.nodes.shape:
            raise DomainError("grid functions live on different grids")
        return float(np.max(np.abs(self.values - other.values)))


def l1_weights(n, mu, h):
    """w_j = [(j+1)^(2-mu) - j^(2-mu)] h^(2-mu) / Gamma(3-mu), j = 0..n-1."""
    j = np.arange(n + 1, dtype=float) ** (2.0 - mu)
    return np.diff(j) * h ** (2.0 - mu) / gamma_fn(3.0 - mu)


def caputo_apply(x, mu, left_slope=None):
    """
    Discrete Caputo derivative of order mu at t_1 .. t_{N-1}.

    On panel [t_i, t_{i+1}] x'' is taken as the mean of the second differences
    at its two ends. Panel 0 uses the second difference at t_1 unless the
    Neumann datum x'(0) = left_slope is known, in which case x'' there is
    (x'(t_1) - left_slope) / h with x'(t_1) from the central difference.
    For mu = 2 the result is exactly the plain second difference.
    """
    if not 1.0 < mu <= 2.0:
        raise DomainError(f"Caputo order must lie in (1, 2], got {mu}")
    v = x.values
    h = x.h
    d2 = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)

    out = np.full(v.shape, np.nan)
    if mu == 2.0:
        out[1:-1] = d2
    else:
        panels = np.empty(d2.size)
        if left_slope is None:
            panels[0] = d2[0]
        else:
            panels[0] = ((v[2] - v[0]) / (2.0 * h) - left_slope) / h
        panels[1:] = 0.5 * (d2[:-1] + d2[1:])
        weights = l1_weights(panels.size, mu, h)
        out[1:-1] = np.convolve(weights, panels)[:panels.size]
    return GridFunction(x.nodes, out, x.interp, undefined_ends=True)


def _window_mask(nodes, window):
    lo, hi = window
    if not 0.0 < lo < hi < 1.0:
        raise DomainError(f"residual window must lie strictly inside (0, 1), got {window}")
    mask = (nodes >= lo) & (nodes <= hi)
    if not mask.any():
        raise DomainError(f"no grid nodes fall in the window {window}")
    return mask


def residual_profile(problem, x, window):
    """
    |D^mu x + f(t, x) - omega x| at the window's nodes, NaN elsewhere.
    `problem` supplies `params` (mu, omega) and a vectorized `f(t, x)`.
    The derivative is formed with the boundary datum x'(0) = 0.
    """
    mask = _window_mask(x.nodes, window)
    t = x.nodes[mask]
    xv = x.values[mask]
    if np.any(xv <= 0.0):
        raise DomainError("residual needs x strictly positive on the window")

    params = problem.params
    derivative = caputo_apply(x, params.mu, left_slope=0.0).values[mask]
    defect = np.abs(derivative + np.asarray(problem.f(t, xv), dtype=float) - params.omega * xv)

    out = np.full(x.nodes.shape, np.nan)
    out[mask] = defect
    return out


def residual(problem, x, window):
    """Sup over window nodes of |D^mu x + f(t, x) - omega x|."""
    value = float(np.nanmax(residual_profile(problem, x, window)))
    logger.debug("residual on %s with N=%d: %.3e", window, x.n_intervals, value)
    return value
