"""
Regularized fixed-point problems

    x = T_m x,   (T_m x)(t) = int_0^1 G(t, tau) f(tau, min(max(x(tau) + 1/m, 1/m), R)) dtau,

solved by damped Picard iteration on a uniform grid, continued in m and
certified against the a-priori bounds a solution of the limit problem must
satisfy.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from numerics.caputo import GridFunction, residual_profile
from numerics.conf import fbvp_settings
from numerics.green import green_mass, green_matrix
from numerics.quad import QuadRequest, gauss_panel_rule, grade_breakpoints, integrate

from .conditions import check_A2
from .exceptions import CertificationError, ConditionsError, FixedPointError, ScheduleError
from .problem import Truncation

logger = logging.getLogger(__name__)

# iterations between two checks for a growing update norm
DIVERGENCE_WINDOW = 10
MIN_DAMPING = 1e-6


def clamp(x, trunc):
    """min(max(x + 1/m, 1/m), R), elementwise."""
    out = np.minimum(np.maximum(np.asarray(x, dtype=float) + trunc.floor, trunc.floor), trunc.R)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class GreenOperator:
    """
    The integral operator with kernel G discretized by composite Gauss-Legendre
    panels between the grid nodes, graded geometrically toward both ends:
    (K y)_i = sum_j G(t_i, tau_j) w_j y(tau_j).
    """
    nodes: np.ndarray
    tau: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray

    def __call__(self, samples):
        return self.matrix @ samples


def green_operator(params, grid_size, order=None, levels=None):
    order = order or fbvp_settings('OPERATOR_QUAD_ORDER')
    levels = levels or fbvp_settings('OPERATOR_GRADING_LEVELS')
    return _build_operator(params, grid_size, order, levels)


@lru_cache(maxsize=4)
def _build_operator(params, grid_size, order, levels):
    nodes = np.linspace(0.0, 1.0, grid_size)
    breaks = grade_breakpoints(nodes, levels)
    tau, weights = gauss_panel_rule(breaks, order)
    matrix = green_matrix(params, nodes, tau) * weights[None, :]
    for array in (nodes, tau, weights, matrix):
        array.flags.writeable = False
    logger.debug("green operator: %d nodes x %d quadrature points", nodes.size, tau.size)
    return GreenOperator(nodes, tau, weights, matrix)


def apply_T(problem, trunc, x):
    """T_m x on the grid of x, with x interpolated at the quadrature points by its own rule."""
    op = green_operator(problem.params, x.nodes.size)
    samples = problem.source(op.tau, clamp(x(op.tau), trunc))
    return x.with_values(op(samples))


def apply_T_adaptive(problem, trunc, x, indices):
    """T_m x at the grid nodes `indices`, each integral by adaptive quadrature split at tau = t_i."""
    params = problem.params
    out = []
    for i in indices:
        t = float(x.nodes[i])

        def integrand(tau, t=t):
            return green_matrix(params, [t], tau, threads=0)[0] * problem.source(tau, clamp(x(tau), trunc))

        points = (t,) if 0.0 < t < 1.0 else ()
        out.append(integrate(QuadRequest(
            integrand, singular_left=True, singular_right=True, points=points, vectorized=True,
        )).value)
    return np.array(out)


class FixedPointResult(NamedTuple):
    solution: GridFunction
    iterations: int
    damping: float
    update_norm: float


def fixed_point(problem, trunc, x0, damping=None, tol=None, max_iter=None):
    """
    Damped Picard iteration x <- (1 - theta) x + theta T_m x, stopped once
    ||T_m x - x|| <= tol; the last image T_m x is returned. theta is halved
    whenever the update norm is larger than it was DIVERGENCE_WINDOW
    iterations earlier. `iterations` counts the updates applied.
    """
    theta = damping or fbvp_settings('DAMPING')
    tol = tol or fbvp_settings('FIXED_POINT_TOL')
    max_iter = max_iter or fbvp_settings('MAX_ITER')
    if not 0 < theta <= 1:
        raise FixedPointError(f"damping must lie in (0, 1], got {theta}", 0, [], theta)
    if not np.all(np.isfinite(x0.values)):
        raise FixedPointError("initial iterate is not finite", 0, [], theta)

    x = x0
    norms = []
    reference = 0
    for it in range(max_iter + 1):
        image = apply_T(problem, trunc, x)
        norm = float(np.max(np.abs(image.values - x.values)))
        norms.append(norm)
        logger.debug("m=%d iteration %d: update %.3e (theta %.4g)", trunc.m, it, norm, theta)
        if norm <= tol:
            return FixedPointResult(image, it, theta, norm)
        if it == max_iter:
            break
        if it - reference >= DIVERGENCE_WINDOW and norm > norms[it - DIVERGENCE_WINDOW]:
            theta *= 0.5
            reference = it
            logger.warning("m=%d: update norm grew over %d iterations, damping halved to %.4g",
                           trunc.m, DIVERGENCE_WINDOW, theta)
            if theta < MIN_DAMPING:
                break
        x = x.with_values((1.0 - theta) * x.values + theta * image.values)

    raise FixedPointError(
        f"no fixed point of T_{trunc.m} within {len(norms) - 1} iterations (last update {norms[-1]:.3e})",
        iterations=len(norms) - 1,
        update_norms=norms[-DIVERGENCE_WINDOW:],
        damping=theta,
    )


def default_schedule(epsilon, tol):
    """Powers of two from the smallest with 1/m < epsilon until 1/m <= tol."""
    m = 1
    while not 1.0 / m < epsilon:
        m *= 2
    schedule = [m]
    while 1.0 / schedule[-1] > tol:
        schedule.append(schedule[-1] * 2)
    return schedule


def check_schedule(schedule, epsilon):
    schedule = [int(m) for m in schedule]
    if not schedule:
        raise ScheduleError("m-schedule is empty")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ScheduleError(f"m-schedule must be strictly increasing, got {schedule}")
    if not 1.0 / schedule[0] < epsilon:
        raise ScheduleError(f"every m needs 1/m < epsilon={epsilon:.6g}; {schedule[0]} does not qualify")
    return schedule


class Check(NamedTuple):
    passed: bool
    margin: float


@dataclass
class ContinuationStep:
    m: int
    iterations: int
    damping: float
    update_norm: float
    difference: float = None


@dataclass
class SolveReport:
    solution: GridFunction
    epsilon: float
    gamma: float
    lower_bound: np.ndarray
    residual: float
    residual_profile: np.ndarray
    steps: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    conditions: object = None

    @property
    def converged(self):
        return bool(self.checks) and all(c.passed for c in self.checks.values())

    @property
    def violated(self):
        return [name for name, c in self.checks.items() if not c.passed]

    @property
    def continuation(self):
        return [s.difference for s in self.steps if s.difference is not None]

    @property
    def iterations(self):
        return {s.m: s.iterations for s in self.steps}


def certify(problem, report, trunc, tol):
    """Fill report.checks; every check is recorded with its margin, pass or fail."""
    x = report.solution
    v = x.values
    h = x.h
    eps = report.epsilon
    checks = report.checks

    diffs = report.continuation
    if diffs:
        monotone = all(b <= a * (1.0 + 1e-9) + 1e-15 for a, b in zip(diffs, diffs[1:]))
        checks['continuation'] = Check(monotone and diffs[-1] < tol, tol - diffs[-1])
    else:
        # one m: nothing to compare against, the fixed point's own update decides
        update = report.steps[-1].update_norm
        checks['continuation'] = Check(update < tol, tol - update)

    checks['lower_bound'] = Check(bool(np.all(v >= report.lower_bound - tol)), float(np.min(v - report.lower_bound)))
    ceiling = problem.R - eps
    checks['upper_bound'] = Check(bool(np.all(v <= ceiling + tol)), float(ceiling - np.max(v)))
    shifted = v + trunc.floor
    inactive = min(float(np.min(shifted - trunc.floor)), float(np.min(trunc.R - shifted)))
    checks['clamp_inactive'] = Check(inactive >= -tol, inactive)
    checks['boundary_right'] = Check(abs(v[-1]) <= tol, tol - abs(v[-1]))
    slope = abs(v[1] - v[0]) / h
    # x'(t) ~ t^(mu-1) at the origin, so the one-sided quotient is O(h^(mu-1)); O(h) for mu = 2
    allowed = fbvp_settings('NEUMANN_SLOPE_FACTOR') * h ** (problem.params.mu - 1.0)
    checks['neumann_left'] = Check(slope <= allowed, float(allowed - slope))
    limit = fbvp_settings('RESIDUAL_TOL')
    checks['residual'] = Check(report.residual <= limit, limit - report.residual)


def solve(problem, m_schedule=None, grid_size=None, tol=None, damping=None, interp=None,
          conditions=None, strict=True):
    """
    Continue the fixed points of T_m along the m-schedule, warm-starting each
    from the previous one, and certify the last. The problem must pass
    check_A2, which also supplies epsilon.

    strict=True raises CertificationError on a failed check; otherwise the
    report is returned with converged False.
    """
    grid_size = grid_size or fbvp_settings('GRID_SIZE')
    tol = tol or fbvp_settings('TOL')
    interp = interp or fbvp_settings('INTERP')
    window = tuple(fbvp_settings('RESIDUAL_WINDOW'))

    conditions = conditions or check_A2(problem)
    if not conditions.passed or conditions.epsilon_max is None:
        raise ConditionsError(f"problem does not meet (A1)/(A2): {', '.join(conditions.failed) or 'no epsilon'}")
    eps = conditions.epsilon_max
    schedule = check_schedule(m_schedule, eps) if m_schedule else default_schedule(eps, tol)
    logger.info("solving %s on %d nodes, epsilon=%.6g, m in %s", problem.label, grid_size, eps, schedule)

    params = problem.params
    mass = GridFunction.uniform(grid_size, lambda t: green_mass(params, t), interp)
    x = mass.with_values(conditions.gamma_R * mass.values)

    steps = []
    previous = None
    for m in schedule:
        trunc = Truncation(m, problem.R)
        result = fixed_point(problem, trunc, x, damping=damping)
        x = result.solution
        step = ContinuationStep(m, result.iterations, result.damping, result.update_norm)
        if previous is not None:
            step.difference = x.sup_distance(previous)
        steps.append(step)
        previous = x
        logger.info("m=%d: %d iterations, difference %s", m, result.iterations,
                    "-" if step.difference is None else f"{step.difference:.3e}")

    gamma = problem.gamma_at(problem.R + eps)
    profile = residual_profile(problem, x, window)
    report = SolveReport(
        solution=x,
        epsilon=eps,
        gamma=gamma,
        lower_bound=gamma * mass.values,
        residual=float(np.nanmax(profile)),
        residual_profile=profile,
        steps=steps,
        conditions=conditions,
    )
    certify(problem, report, Truncation(schedule[-1], problem.R), tol)

    if report.converged:
        logger.info("certified: residual %.3e, final difference %s", report.residual, report.continuation[-1:])
    else:
        logger.warning("certification failed: %s", ", ".join(report.violated))
        if strict:
            raise CertificationError(report, report.violated)
    return report
