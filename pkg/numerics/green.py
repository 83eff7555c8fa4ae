"""
Green's function of  ᶜD^mu x + y = omega x,  x'(0) = 0,  x(1) = 0  on [0, 1]:

    G(t, tau) = E_{mu,1}(omega t^mu) / E_{mu,1}(omega) * k(1 - tau) - [tau < t] k(t - tau)

with k(s) = s^(mu-1) E_{mu,mu}(omega s^mu), and its kernel mass
sigma_{mu,omega}(t) = omega E_{mu,1}(omega) * int_0^1 G(t, tau) dtau.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .conf import fbvp_settings
from .exceptions import DomainError, NonConvergenceError
from .quad import QuadRequest, integrate
from .specfun import EvalPolicy, MLIndex, mittag_leffler, mittag_leffler_array

logger = logging.getLogger(__name__)

SIGMA_PRODUCT_LIMIT = 0.5


@dataclass(frozen=True)
class KernelParams:
    mu: float
    omega: float

    def __post_init__(self):
        if not 1 < self.mu <= 2:
            raise DomainError(f"kernel order mu must lie in (1, 2], got {self.mu}")
        if not self.omega > 0:
            raise DomainError(f"spectral shift omega must be positive, got {self.omega}")

    @cached_property
    def e_mu_1(self):
        """E_{mu,1}(omega)"""
        return mittag_leffler(MLIndex(self.mu, 1.0), self.omega)

    @cached_property
    def e_mu_mu(self):
        """E_{mu,mu}(omega), the sup of G over the unit square"""
        return mittag_leffler(MLIndex(self.mu, self.mu), self.omega)

    @cached_property
    def e_mu_mu1(self):
        """E_{mu,mu+1}(omega)"""
        return mittag_leffler(MLIndex(self.mu, self.mu + 1.0), self.omega)

    @property
    def mass_scale(self):
        """omega * E_{mu,1}(omega)"""
        return self.omega * self.e_mu_1


def _unit_interval(t, name="t"):
    arr = np.asarray(t, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr


def _like(values, arg):
    return float(values) if np.ndim(arg) == 0 else values


def _ml(params, nu, x):
    return mittag_leffler_array(MLIndex(params.mu, nu), x)


def _power_kernel(params, s):
    """k(s) = s^(mu-1) E_{mu,mu}(omega s^mu) for s in [0, 1]."""
    return s ** (params.mu - 1.0) * _ml(params, params.mu, params.omega * s ** params.mu)


def sigma(params, t):
    """sigma_{mu,omega}(t) by its defining product formula; exactly 0 at t = 1."""
    t = _unit_interval(t)
    tm = t ** params.mu
    arg = params.omega * tm
    value = _ml(params, 1.0, arg) * params.e_mu_mu1 - tm * params.e_mu_1 * _ml(params, params.mu + 1.0, arg)
    # cancellation near t = 1 can leave a few ulps of the wrong sign
    return _like(np.maximum(value, 0.0), t)


def sigma_reduced(params, t, reflected=False, policy=None):
    """
    sigma via the shift identity (E_{mu,1}(omega) - E_{mu,1}(omega t^mu)) / omega,
    summed termwise as

        sum_{k>=1} omega^(k-1) (1 - t^(mu k)) / Gamma(mu k + 1)

    with 1 - t^(mu k) = -expm1(mu k log1p(t - 1)), which keeps full relative
    accuracy as t -> 1. With reflected=True the value returned is sigma(1 - t),
    formed from t itself so that it stays accurate as t -> 0.
    """
    policy = policy or EvalPolicy.default()
    t = _unit_interval(t)
    flat = t.reshape(-1)
    with np.errstate(divide='ignore'):
        log_s = np.log1p(-flat) if reflected else np.log1p(flat - 1.0)

    total = np.zeros(flat.shape)
    live = np.arange(flat.size)
    log_omega = np.log(params.omega)
    k = 0
    while live.size:
        k += 1
        if k > policy.k_max:
            raise NonConvergenceError(f"sigma series did not converge within k_max={policy.k_max} terms")
        coef = np.exp((k - 1) * log_omega - gammaln(params.mu * k + 1.0))
        term = coef * -np.expm1(params.mu * k * log_s[live])
        total[live] += term
        keep = term > policy.rel_tol * total[live]
        live = live[keep]
    return _like(total.reshape(t.shape), t)


def sigma_stable(params, t):
    """sigma by the product formula up to t = 1/2 and by sigma_reduced beyond, where the product cancels."""
    t = _unit_interval(t)
    flat = np.atleast_1d(t).reshape(-1)
    out = np.empty(flat.shape)
    near_one = flat > SIGMA_PRODUCT_LIMIT
    if near_one.any():
        out[near_one] = sigma_reduced(params, flat[near_one])
    if not near_one.all():
        out[~near_one] = sigma(params, flat[~near_one])
    return _like(out.reshape(t.shape), t)


def green_mass(params, t):
    """int_0^1 G(t, tau) dtau in closed form."""
    t = _unit_interval(t)
    return _like(np.asarray(sigma_stable(params, t)) / params.mass_scale, t)


def _green_rows(params, t, tau, column):
    rows = (_ml(params, 1.0, params.omega * t ** params.mu) / params.e_mu_1)[:, None] * column[None, :]
    diff = t[:, None] - tau[None, :]
    # tau == t falls in the second branch, where the (t - tau) term is absent
    below = diff > 0.0
    rows[below] -= _power_kernel(params, diff[below])
    return rows


def green_matrix(params, t, tau, threads=None):
    """
    G(t_i, tau_j) for all pairs. Rows are computed in blocks, in parallel when
    `threads` (default: FBVP THREADS) is positive; every row is produced by
    the same elementwise arithmetic whatever the block layout.
    """
    t = np.atleast_1d(_unit_interval(t))
    tau = np.atleast_1d(_unit_interval(tau, "tau"))
    threads = fbvp_settings('THREADS') if threads is None else threads
    column = _power_kernel(params, 1.0 - tau)

    if threads <= 0 or t.size < 2 * threads:
        return _green_rows(params, t, tau, column)

    out = np.empty((t.size, tau.size))
    blocks = np.array_split(np.arange(t.size), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = pool.map(lambda rows: (rows, _green_rows(params, t[rows], tau, column)), blocks)
        for rows, values in results:
            out[rows] = values
    return out


def green_eval(params, t, tau):
    """G(t, tau) at one point of the unit square."""
    t = float(_unit_interval(t))
    tau = float(_unit_interval(tau, "tau"))
    return float(green_matrix(params, [t], [tau], threads=0)[0, 0])


def green_mass_quadrature(params, t, abs_tol=1e-11, rel_tol=1e-11):
    """int_0^1 G(t, tau) dtau by adaptive quadrature, split at the kink tau = t."""
    t = float(_unit_interval(t))
    points = (t,) if 0.0 < t < 1.0 else ()
    req = QuadRequest(
        integrand=lambda tau: green_matrix(params, [t], tau, threads=0)[0],
        a=0.0,
        b=1.0,
        abs_tol=abs_tol,
        rel_tol=rel_tol,
        singular_left=(t == 0.0),
        singular_right=True,
        points=points,
        vectorized=True,
    )
    return integrate(req)


@dataclass
class KernelScan:
    params: KernelParams
    n: int
    min_value: float
    max_value: float
    bound: float
    negative: list = field(default_factory=list)
    nonpositive_inner: list = field(default_factory=list)
    above_bound: list = field(default_factory=list)

    @property
    def ok(self):
        return not (self.negative or self.nonpositive_inner or self.above_bound)


def scan_kernel(params, n=201, inner_edge=0.99, atol=1e-12):
    """
    Sample G on an n x n grid and report, rather than assume, the sign and
    bound properties: G >= 0 on the square, G > 0 on [0, inner_edge]^2 and
    G <= E_{mu,mu}(omega). The absolute tolerance is scaled by the bound.
    """
    grid = np.linspace(0.0, 1.0, n)
    values = green_matrix(params, grid, grid)
    bound = params.e_mu_mu
    slack = atol * max(1.0, bound)

    def offenders(mask):
        return [(float(grid[i]), float(grid[j]), float(values[i, j])) for i, j in zip(*np.nonzero(mask))]

    inner = grid <= inner_edge
    scan = KernelScan(
        params=params,
        n=n,
        min_value=float(values.min()),
        max_value=float(values.max()),
        bound=bound,
        negative=offenders(values < -slack),
        nonpositive_inner=offenders((values <= 0.0) & inner[:, None] & inner[None, :]),
        above_bound=offenders(values > bound + slack),
    )
    if not scan.ok:
        logger.warning(
            "kernel scan mu=%s omega=%s: %d negative, %d nonpositive inner, %d above bound",
            params.mu, params.omega, len(scan.negative), len(scan.nonpositive_inner), len(scan.above_bound),
        )
    return scan
