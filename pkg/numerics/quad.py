"""
Adaptive Gauss-Legendre quadrature for integrands with integrable endpoint
singularities, plus the fixed composite rules the solver discretizes with.

Panels are processed breadth first: each round evaluates every pending
panel, accepts the ones whose error proxy |Q_high - Q_low| is within their
share of the tolerance and splits the rest. Panels touching a flagged
singular endpoint are split geometrically toward it, so the mesh grades into
(x - a)**(-beta) type singularities without knowing beta. Gauss nodes are
interior, so a flagged endpoint is never evaluated. A singular panel that
shrinks to floating-point resolution is accepted with its proxy counted in
the error estimate.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .conf import fbvp_settings
from .exceptions import DomainError, NonFiniteSampleError, QuadratureBudgetError

logger = logging.getLogger(__name__)

# a panel shorter than this many ulps of its endpoint cannot host interior nodes
MIN_PANEL_ULPS = 1024


@dataclass(frozen=True)
class QuadRequest:
    integrand: Callable
    a: float = 0.0
    b: float = 1.0
    abs_tol: float = None
    rel_tol: float = None
    singular_left: bool = False
    singular_right: bool = False
    max_subdivisions: int = None
    points: tuple = ()
    vectorized: bool = False

    def __post_init__(self):
        if self.abs_tol is None:
            object.__setattr__(self, 'abs_tol', fbvp_settings('QUAD_ABS_TOL'))
        if self.rel_tol is None:
            object.__setattr__(self, 'rel_tol', fbvp_settings('QUAD_REL_TOL'))
        if self.max_subdivisions is None:
            object.__setattr__(self, 'max_subdivisions', fbvp_settings('QUAD_MAX_SUBDIVISIONS'))
        object.__setattr__(self, 'points', tuple(sorted(float(p) for p in self.points)))

        if not self.a < self.b:
            raise DomainError(f"quadrature interval needs a < b, got ({self.a}, {self.b})")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if any(not self.a < p < self.b for p in self.points):
            raise DomainError("breakpoints must lie strictly inside (a, b)")


class QuadResult(NamedTuple):
    value: float
    error_estimate: float
    subdivisions: int


@lru_cache(maxsize=None)
def gauss_legendre(order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def gauss_panel_rule(breaks, order):
    """Composite Gauss-Legendre nodes and weights over consecutive breakpoints."""
    breaks = np.asarray(breaks, dtype=float)
    xi, wi = gauss_legendre(order)
    mid = 0.5 * (breaks[1:] + breaks[:-1])
    half = 0.5 * (breaks[1:] - breaks[:-1])
    nodes = mid[:, None] + half[:, None] * xi[None, :]
    weights = half[:, None] * wi[None, :]
    return nodes.reshape(-1), weights.reshape(-1)


def grade_breakpoints(breaks, levels, ratio=None, left=True, right=True):
    """
    Refine the first and/or last cell of an increasing breakpoint array with a
    geometric sequence shrinking by `ratio` toward the outer edge.
    """
    ratio = ratio or fbvp_settings('QUAD_GRADING_RATIO')
    breaks = np.asarray(breaks, dtype=float)
    extra = []
    if left:
        extra.append(_geometric_points(breaks[0], breaks[1] - breaks[0], levels, ratio, +1))
    if right:
        extra.append(_geometric_points(breaks[-1], breaks[-1] - breaks[-2], levels, ratio, -1))
    return np.unique(np.concatenate([breaks, *extra]))


def _geometric_points(edge, width, levels, ratio, direction):
    floor = MIN_PANEL_ULPS * np.spacing(abs(edge))
    offsets = [width * ratio ** k for k in range(1, levels + 1)]
    offsets = [d for d in offsets if d >= floor]
    return edge + direction * np.asarray(offsets)


def _sample(req, x):
    if req.vectorized:
        values = np.asarray(req.integrand(x), dtype=float)
    else:
        values = np.array([req.integrand(float(t)) for t in x], dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        where = float(x[np.argmax(bad)])
        raise NonFiniteSampleError(f"integrand returned a non-finite value at x={where!r}", abscissa=where)
    return values


def _panel_sums(req, lo, hi, order, low_order):
    xh, wh = gauss_legendre(order)
    xl, wl = gauss_legendre(low_order)
    mid = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    nodes = np.concatenate([
        (mid[:, None] + half[:, None] * xh[None, :]).reshape(-1),
        (mid[:, None] + half[:, None] * xl[None, :]).reshape(-1),
    ])
    touching = (
        (req.singular_left and np.any(nodes <= req.a))
        or (req.singular_right and np.any(nodes >= req.b))
    )
    if touching:
        raise QuadratureBudgetError("panel nodes collapsed onto a singular endpoint")

    values = _sample(req, nodes)
    n_high = lo.size * order
    high = half * (values[:n_high].reshape(lo.size, order) @ wh)
    low = half * (values[n_high:].reshape(lo.size, low_order) @ wl)
    return high, low


def _split(lo, hi, sing_lo, sing_hi, ratio):
    if sing_lo and not sing_hi:
        s = lo + ratio * (hi - lo)
    elif sing_hi and not sing_lo:
        s = hi - ratio * (hi - lo)
    else:
        s = 0.5 * (lo + hi)
    floor = MIN_PANEL_ULPS * np.spacing(max(abs(lo), abs(hi)))
    if (sing_lo or sing_hi) and min(s - lo, hi - s) < floor:
        return None
    if not lo < s < hi:
        raise QuadratureBudgetError(f"panel [{lo!r}, {hi!r}] cannot be split further")
    return (lo, s, sing_lo, False), (s, hi, False, sing_hi)


def integrate(req):
    """
    Integrate req.integrand over (req.a, req.b).

    Returns QuadResult(value, error_estimate, subdivisions); error_estimate is
    the sum of the accepted panels' |Q_high - Q_low| proxies.
    """
    order = fbvp_settings('QUAD_ORDER')
    low_order = fbvp_settings('QUAD_LOW_ORDER')
    ratio = fbvp_settings('QUAD_GRADING_RATIO')
    length = req.b - req.a

    edges = [req.a, *req.points, req.b]
    pending = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sing_lo = (lo == req.a and req.singular_left) or lo in req.points
        sing_hi = (hi == req.b and req.singular_right) or hi in req.points
        pending.append((lo, hi, sing_lo, sing_hi))

    accepted = []
    subdivisions = 0
    at_floor = 0
    while pending:
        lo = np.array([p[0] for p in pending])
        hi = np.array([p[1] for p in pending])
        high, low = _panel_sums(req, lo, hi, order, low_order)
        err = np.abs(high - low)

        estimate = math.fsum([v for _, v, _ in accepted]) + math.fsum(high)
        tol = max(req.abs_tol, req.rel_tol * abs(estimate))

        next_pending = []
        for i, (p_lo, p_hi, sing_lo, sing_hi) in enumerate(pending):
            if sing_lo or sing_hi:
                ok = err[i] <= 0.25 * tol
            else:
                share = tol * (p_hi - p_lo) / length
                ok = err[i] <= 0.5 * max(share, req.rel_tol * abs(high[i]))
            if ok:
                accepted.append((p_lo, float(high[i]), float(err[i])))
                continue
            subdivisions += 1
            if subdivisions > req.max_subdivisions:
                partial = math.fsum([v for _, v, _ in accepted]) + math.fsum(high[i:])
                raise QuadratureBudgetError(
                    f"max_subdivisions={req.max_subdivisions} reached without meeting tolerance",
                    value=partial,
                    error_estimate=math.fsum([e for _, _, e in accepted]) + float(err[i:].sum()),
                    subdivisions=subdivisions,
                )
            halves = _split(p_lo, p_hi, sing_lo, sing_hi, ratio)
            if halves is None:
                # the integrand cannot be sampled any closer to the endpoint
                at_floor += 1
                accepted.append((p_lo, float(high[i]), float(err[i])))
                continue
            next_pending.extend(halves)
        pending = next_pending

    accepted.sort(key=lambda panel: panel[0])
    value = math.fsum([v for _, v, _ in accepted])
    error_estimate = math.fsum([e for _, _, e in accepted])
    if at_floor:
        logger.debug("%d singular panel(s) accepted at floating-point resolution", at_floor)
    logger.debug("integrate over (%r, %r): %d panels, %d subdivisions", req.a, req.b, len(accepted), subdivisions)
    return QuadResult(value, error_estimate, subdivisions)
