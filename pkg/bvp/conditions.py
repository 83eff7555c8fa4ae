"""
Mechanical checks of the two structural assumptions a problem must meet
before the solver will touch it:

(A1) |f(t, x)| <= q(t) (u(x) + v(x)) with u decreasing, v increasing, and
     q, q u(c sigma) integrable on (0, 1) for every c > 0;
(A2) f(t, x) >= gamma_R > 0 on (0, 1) x (0, R] with gamma_r positive and
     decreasing, R > gamma_R E_{mu,mu+1}(omega) / (omega E_{mu,1}(omega)) and

         R / (E_{mu,mu}(omega) chi_R (1 + v(R)/u(R))) > 1,
         chi_r = int_0^1 q(t) u(gamma_r sigma(t) / (omega E_{mu,1}(omega))) dt.

Conditions over continua are checked on dense samples, so a pass reads
"no violation found at this resolution". Also home of the built-in example
family and the reproduction of its constants.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from numerics.conf import fbvp_settings
from numerics.exceptions import NumericsError
from numerics.green import KernelParams, sigma_reduced, sigma_stable
from numerics.quad import QuadRequest, integrate

from .exceptions import BVPError, NoAdmissibleEpsilonError
from .problem import ProblemSpec

logger = logging.getLogger(__name__)

PROBE_CONSTANTS = (0.1, 1.0, 10.0)
# how close to t = 0 and t = 1 the sampling grid reaches
EDGE_SAMPLE = 1e-12
X_SAMPLES = 64
SAMPLE_RTOL = 1e-10
CONDITION_ABS_TOL = 1e-14

RATIO_NOTE = "(A2) ratio evaluated with 1 + v(R)/u(R); the published statement prints q/p with p undefined"

EXAMPLE_PARAMS = KernelParams(1.9, 2.0)

# values printed for the example family, for side-by-side deviations
PUBLISHED_CONSTANTS = {
    'int_q': 3.07853,
    'int_q_u': 4.37043,
    'gamma': 1.94308,
    'chi': 5.21001,
    'ratio_denominator': 7.94329,
    'window_ratio': 13.3352,
    'window_threshold': 3.59596,
}


@dataclass
class ConditionReport:
    R: float
    gamma_R: float = float('nan')
    a1_integrals: dict = field(default_factory=dict)
    a1_bound_margin: float = float('nan')
    a2_threshold: float = float('nan')
    a2_ratio: float = float('nan')
    chi_R: float = float('nan')
    epsilon_max: float = None
    verdicts: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    samples: int = 0

    @property
    def passed(self):
        return bool(self.verdicts) and all(self.verdicts.values())

    @property
    def failed(self):
        return [name for name, ok in self.verdicts.items() if not ok]


def condition_grid(n=None):
    """n sample points in (0, 1), geometrically refined toward both ends."""
    n = n or fbvp_settings('CONDITION_SAMPLES')
    left = np.geomspace(EDGE_SAMPLE, 0.5, n // 2)
    return np.unique(np.concatenate([left, 1.0 - left]))


def _integrate(integrand):
    return integrate(QuadRequest(
        integrand,
        abs_tol=CONDITION_ABS_TOL,
        rel_tol=fbvp_settings('CONDITION_QUAD_REL_TOL'),
        singular_left=True,
        singular_right=True,
        vectorized=True,
    ))


def integral_q(problem):
    return _integrate(lambda t: problem.q(t)).value


def integral_q_u(problem, c):
    """int_0^1 q(t) u(c sigma(t)) dt."""
    params = problem.params
    return _integrate(lambda t: problem.q(t) * problem.u(c * sigma_stable(params, t))).value


def chi(problem, r):
    """chi_r = int_0^1 q(t) u(gamma_r sigma(t) / (omega E_{mu,1}(omega))) dt."""
    if not r > 0:
        raise BVPError(f"chi needs r > 0, got {r}")
    scale = problem.gamma_at(r) / problem.params.mass_scale
    return integral_q_u(problem, scale)


def threshold(problem, r=None):
    """gamma_r E_{mu,mu+1}(omega) / (omega E_{mu,1}(omega)), the lower bound R must exceed."""
    params = problem.params
    r = problem.R if r is None else r
    return problem.gamma_at(r) * params.e_mu_mu1 / params.mass_scale


def ratio(problem, epsilon=0.0):
    """(R - eps) / (E_{mu,mu}(omega) chi_{R+eps} (1 + v(R+eps)/u(R+eps)))."""
    s = problem.R + epsilon
    growth = 1.0 + float(problem.v(np.asarray(s))) / float(problem.u(np.asarray(s)))
    return (problem.R - epsilon) / (problem.params.e_mu_mu * chi(problem, s) * growth)


def check_A1(problem, report=None, samples=None):
    """
    Sample |f| <= q (u + v) on the refined t grid times x in (0, 10 R], and
    integrate q and q u(c sigma) for the probe constants.
    """
    report = report or ConditionReport(R=problem.R)
    t = condition_grid(samples)
    x = np.geomspace(1e-8 * problem.R, 10.0 * problem.R, X_SAMPLES)
    tt, xx = np.meshgrid(t, x, indexing='ij')
    report.samples = tt.size

    try:
        bound = problem.q(tt) * (problem.u(xx) + problem.v(xx))
        slack = (bound - np.abs(problem.f(tt, xx))) / np.abs(bound)
        report.a1_bound_margin = float(np.min(slack))
        i, j = np.unravel_index(np.argmin(slack), slack.shape)
        report.verdicts['A1_bound'] = bool(report.a1_bound_margin >= -SAMPLE_RTOL)
        if not report.verdicts['A1_bound']:
            report.notes.append(f"(A1) bound violated at t={t[i]!r}, x={x[j]!r}")
    except (BVPError, NumericsError) as exc:
        report.verdicts['A1_bound'] = False
        report.notes.append(f"(A1) bound could not be sampled: {exc}")
    report.margins['A1_bound'] = report.a1_bound_margin

    try:
        report.a1_integrals = {
            'q': integral_q(problem),
            'q_u': {repr(c): integral_q_u(problem, c) for c in PROBE_CONSTANTS},
        }
        values = [report.a1_integrals['q'], *report.a1_integrals['q_u'].values()]
        report.verdicts['A1_integrable'] = bool(np.all(np.isfinite(values)))
    except (BVPError, NumericsError) as exc:
        report.verdicts['A1_integrable'] = False
        report.notes.append(f"(A1) integrals failed: {exc}")
    return report


def _check_positivity(problem, report, samples):
    gamma_R = report.gamma_R
    t = condition_grid(samples)
    x = np.geomspace(1e-8 * problem.R, problem.R, X_SAMPLES)
    tt, xx = np.meshgrid(t, x, indexing='ij')
    try:
        margin = float(np.min(problem.f(tt, xx)) - gamma_R)
    except (BVPError, NumericsError) as exc:
        report.verdicts['A2_positivity'] = False
        report.notes.append(f"(A2) f could not be sampled: {exc}")
        return
    report.margins['A2_positivity'] = margin
    report.verdicts['A2_positivity'] = bool(gamma_R > 0 and margin >= -SAMPLE_RTOL * gamma_R)

    r = np.geomspace(1e-3 * problem.R, 10.0 * problem.R, X_SAMPLES)
    g = np.asarray(problem.gamma(r), dtype=float)
    report.verdicts['A2_gamma_monotone'] = bool(np.all(g > 0) and np.all(np.diff(g) <= 0))


def check_A2(problem, samples=None, select_epsilon=True):
    """
    Full condition report: (A1) clauses, f >= gamma_R on (0, 1) x (0, R],
    gamma_r positive and non-increasing, the threshold and ratio clauses of (A2)
    and, when everything passes, the largest admissible epsilon.
    Failures are recorded as verdicts with margins, never raised.
    """
    report = check_A1(problem, samples=samples)
    report.notes.append(RATIO_NOTE)
    report.gamma_R = problem.gamma_at(problem.R)
    _check_positivity(problem, report, samples)

    report.a2_threshold = threshold(problem)
    report.margins['A2_threshold'] = problem.R - report.a2_threshold
    report.verdicts['A2_threshold'] = bool(report.gamma_R > 0 and problem.R > report.a2_threshold)
    if not report.gamma_R > 0:
        report.notes.append("gamma_R must be strictly positive")

    try:
        report.chi_R = chi(problem, problem.R)
        report.a2_ratio = ratio(problem)
        report.verdicts['A2_ratio'] = bool(report.a2_ratio > 1.0)
    except (BVPError, NumericsError) as exc:
        report.verdicts['A2_ratio'] = False
        report.notes.append(f"(A2) ratio could not be evaluated: {exc}")
    report.margins['A2_ratio'] = report.a2_ratio - 1.0

    n_t = condition_grid(samples).size
    report.notes.append(
        f"sampled on {n_t} t-points refined to {EDGE_SAMPLE:g} from both ends and {X_SAMPLES} x-points; "
        "a pass means no violation at this resolution"
    )

    if select_epsilon and report.passed:
        try:
            report.epsilon_max = epsilon_select(problem, report)
        except NoAdmissibleEpsilonError as exc:
            report.verdicts['epsilon'] = False
            report.margins.update(exc.margins)
            report.notes.append(str(exc))

    if report.passed:
        logger.info("conditions pass for R=%s: ratio %.6g, epsilon_max %s", problem.R, report.a2_ratio, report.epsilon_max)
    else:
        logger.warning("conditions fail for R=%s: %s", problem.R, ", ".join(report.failed))
    return report


def epsilon_select(problem, report=None):
    """
    Largest epsilon in (0, R - threshold] with

        (R - eps) / (E_{mu,mu}(omega) chi_{R+eps} (1 + v/u at R+eps)) >= 1,

    found by bisection down to EPSILON_RESOLUTION * R.
    """
    cap = problem.R - (report.a2_threshold if report else threshold(problem))
    if not cap > 0:
        raise NoAdmissibleEpsilonError("R does not exceed the (A2) threshold", {'threshold_gap': cap})
    g0 = ratio(problem) - 1.0
    if not g0 > 0:
        raise NoAdmissibleEpsilonError("(A2) ratio does not exceed 1", {'ratio_gap': g0})

    g_cap = ratio(problem, cap) - 1.0
    if g_cap >= 0:
        return cap

    lo, hi = 0.0, cap
    resolution = fbvp_settings('EPSILON_RESOLUTION') * problem.R
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if ratio(problem, mid) >= 1.0:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise NoAdmissibleEpsilonError(
            f"no epsilon above {resolution:g} keeps the ratio at or above 1",
            {'ratio_gap': g0, 'ratio_gap_at_cap': g_cap},
        )
    logger.debug("epsilon_select: %.9g (cap %.9g)", lo, cap)
    return lo


def gamma_coefficient(params):
    """
    1 / sqrt(max_t sigma(t) sigma(1 - t)) and the maximizing t, by golden-section
    search seeded at the symmetric point t = 1/2.
    """
    def objective(t):
        return -float(sigma_stable(params, t) * sigma_reduced(params, t, reflected=True))

    try:
        res = minimize_scalar(objective, bracket=(0.25, 0.5, 0.75), method='golden', tol=1e-10)
    except ValueError:
        res = minimize_scalar(objective, bounds=(1e-6, 1.0 - 1e-6), method='bounded')
    return 1.0 / np.sqrt(-res.fun), float(res.x)


def example_problem(lam, R, params=EXAMPLE_PARAMS):
    """
    The built-in family

        q = lam / sqrt(sigma(t) sigma(1 - t)),  u = x^(-1/5),  v = x + R,
        f = q (x^(-1/5) - x + R),  gamma_r = gamma_c lam r^(-1/5),

    with gamma_c = 1 / sqrt(max sigma(t) sigma(1 - t)).
    """
    if not lam > 0:
        raise BVPError(f"lambda must be positive, got {lam}")
    gc, t_star = gamma_coefficient(params)

    def q(t):
        return lam / np.sqrt(sigma_stable(params, t) * sigma_reduced(params, t, reflected=True))

    def u(x):
        return np.asarray(x, dtype=float) ** -0.2

    def v(x):
        return np.asarray(x, dtype=float) + R

    def f(t, x):
        x = np.asarray(x, dtype=float)
        return q(t) * (x ** -0.2 - x + R)

    def gamma(r):
        return gc * lam * np.asarray(r, dtype=float) ** -0.2

    return ProblemSpec(
        params=params, f=f, q=q, u=u, v=v, gamma=gamma, R=R, label="example",
        hints={'lambda': lam, 'gamma_coefficient': gc, 'argmax': t_star},
    )


@dataclass
class ConstantRow:
    name: str
    computed: float
    published: float

    @property
    def deviation(self):
        return abs(self.computed - self.published) / abs(self.published)


def example_constants(lam, R, params=EXAMPLE_PARAMS):
    """
    Recompute the example family's constants from quadrature and series
    evaluations and set them beside the printed values.
    """
    problem = example_problem(lam, R, params)
    gc = problem.hints['gamma_coefficient']
    chi_coef = chi(problem, R) / (lam ** 0.8 * R ** 0.04)
    computed = {
        'int_q': integral_q(problem) / lam,
        'int_q_u': integral_q_u(problem, 1.0) / lam,
        'gamma': gc,
        'chi': chi_coef,
        'ratio_denominator': params.e_mu_mu * chi_coef,
        'window_ratio': (params.e_mu_mu * chi_coef) ** 1.25,
        'window_threshold': params.mass_scale / (gc * params.e_mu_mu1),
    }
    return [ConstantRow(name, computed[name], published) for name, published in PUBLISHED_CONSTANTS.items()]


def lambda_window(R, params=EXAMPLE_PARAMS):
    """
    Open interval (0, hi) of lambda for which the example family meets (A2),
    from the ratio clause and the threshold clause solved for lambda:

        hi = min(R^(6/5) / ((E_{mu,mu} chi_1)^(5/4) (1 + 2 R^(6/5))^(5/4)),
                 R^(6/5) omega E_{mu,1} / (gamma_c E_{mu,mu+1}))

    where chi_1 is chi_r / (lambda^(4/5) r^(1/25)), computed at lambda = r = 1.
    """
    if not R > 0:
        raise BVPError(f"R must be positive, got {R}")
    unit = example_problem(1.0, 1.0, params)
    chi_coef = chi(unit, 1.0)
    gc = unit.hints['gamma_coefficient']
    r65 = R ** 1.2
    by_ratio = r65 / ((params.e_mu_mu * chi_coef) ** 1.25 * (1.0 + 2.0 * r65) ** 1.25)
    by_threshold = r65 * params.mass_scale / (gc * params.e_mu_mu1)
    return 0.0, min(by_ratio, by_threshold)


def published_lambda_window(R):
    """The same window evaluated with the printed coefficients."""
    r65 = R ** 1.2
    hi = min(
        r65 / (PUBLISHED_CONSTANTS['window_ratio'] * (1.0 + 2.0 * r65) ** 1.25),
        PUBLISHED_CONSTANTS['window_threshold'] * r65,
    )
    return 0.0, hi
