import math

import numpy as np
from django.test import SimpleTestCase

from numerics.exceptions import DomainError, NonFiniteSampleError, QuadratureBudgetError
from numerics.green import KernelParams
from numerics.quad import QuadRequest, gauss_panel_rule, grade_breakpoints, integrate
from numerics.specfun import MLIndex, mittag_leffler_array


class IntegrateTests(SimpleTestCase):
    def test_inverse_square_root(self):
        res = integrate(QuadRequest(lambda t: t ** -0.5, singular_left=True, abs_tol=1e-10, rel_tol=1e-10))
        self.assertLessEqual(abs(res.value - 2.0), 2e-10)
        self.assertGreater(res.subdivisions, 0)

    def test_graded_mesh_meets_tolerance(self):
        for beta in (0.2, 0.5, 0.8):
            with self.subTest(beta=beta):
                exact = 1.0 / (1.0 - beta)
                res = integrate(QuadRequest(
                    lambda t: t ** -beta, singular_left=True, abs_tol=1e-10, rel_tol=1e-10, vectorized=True,
                ))
                self.assertLessEqual(abs(res.value - exact), max(1e-10, 1e-10 * exact))

    def test_mittag_leffler_kernel_integral(self):
        params = KernelParams(1.9, 2.0)
        idx = MLIndex(1.9, 1.9)
        res = integrate(QuadRequest(
            lambda t: t ** 0.9 * mittag_leffler_array(idx, 2.0 * t ** 1.9),
            singular_left=True,
            vectorized=True,
        ))
        self.assertAlmostEqual(res.value, params.e_mu_mu1, delta=1e-9)

    def test_right_endpoint_resolution_limit(self):
        req = QuadRequest(lambda t: (1.0 - t) ** -0.5, singular_right=True, vectorized=True)
        with self.assertNoLogs('numerics.quad', level='WARNING'):
            res = integrate(req)
        self.assertAlmostEqual(res.value, 2.0, delta=1e-6)
        self.assertGreater(res.error_estimate, 0.0)

        with self.assertLogs('numerics.quad', level='DEBUG') as logs:
            integrate(req)
        floor_lines = [line for line in logs.output if "floating-point resolution" in line]
        self.assertEqual(len(floor_lines), 1)

    def test_breakpoint_at_kink(self):
        res = integrate(QuadRequest(lambda t: np.abs(t - 0.3), points=(0.3,), vectorized=True))
        self.assertAlmostEqual(res.value, 0.29, places=12)

    def test_interval_additivity(self):
        whole = integrate(QuadRequest(np.exp, vectorized=True)).value
        left = integrate(QuadRequest(np.exp, a=0.0, b=0.37, vectorized=True)).value
        right = integrate(QuadRequest(np.exp, a=0.37, b=1.0, vectorized=True)).value
        self.assertAlmostEqual(whole, left + right, places=12)
        self.assertAlmostEqual(whole, math.e - 1.0, places=12)

    def test_linearity(self):
        f = lambda t: np.sin(3.0 * t) * t ** -0.3
        g = lambda t: np.log1p(t) * t ** -0.3
        req = dict(singular_left=True, vectorized=True)
        lhs = integrate(QuadRequest(lambda t: 2.0 * f(t) - 0.5 * g(t), **req)).value
        rhs = 2.0 * integrate(QuadRequest(f, **req)).value - 0.5 * integrate(QuadRequest(g, **req)).value
        self.assertAlmostEqual(lhs, rhs, delta=1e-9)

    def test_identical_requests_are_bit_identical(self):
        req = QuadRequest(lambda t: t ** -0.7 * np.cos(t), singular_left=True, vectorized=True)
        self.assertEqual(integrate(req), integrate(req))

    def test_scalar_integrand_is_sampled_pointwise(self):
        res = integrate(QuadRequest(math.exp))
        self.assertAlmostEqual(res.value, math.e - 1.0, places=12)

    def test_non_finite_sample_aborts(self):
        with self.assertRaises(NonFiniteSampleError) as ctx:
            integrate(QuadRequest(lambda t: math.nan))
        self.assertIsNotNone(ctx.exception.abscissa)

    def test_subdivision_budget(self):
        with self.assertRaises(QuadratureBudgetError) as ctx:
            integrate(QuadRequest(lambda t: t ** -0.8, singular_left=True, vectorized=True, max_subdivisions=3))
        self.assertIsNotNone(ctx.exception.value)

    def test_request_validation(self):
        with self.assertRaises(DomainError):
            QuadRequest(np.exp, a=1.0, b=0.0)
        with self.assertRaises(DomainError):
            QuadRequest(np.exp, abs_tol=0.0)
        with self.assertRaises(DomainError):
            QuadRequest(np.exp, points=(1.0,))


class CompositeRuleTests(SimpleTestCase):
    def test_panel_rule_is_exact_for_polynomials(self):
        nodes, weights = gauss_panel_rule([0.0, 0.25, 0.6, 1.0], 4)
        self.assertEqual(nodes.size, 12)
        self.assertAlmostEqual(float(weights @ nodes ** 7), 1.0 / 8.0, places=14)

    def test_grading_toward_both_ends(self):
        breaks = grade_breakpoints(np.linspace(0.0, 1.0, 11), levels=5, ratio=0.5)
        self.assertTrue(np.all(np.diff(breaks) > 0))
        self.assertEqual(breaks[0], 0.0)
        self.assertEqual(breaks[-1], 1.0)
        self.assertAlmostEqual(breaks[1], 0.1 / 32, places=15)
        self.assertAlmostEqual(1.0 - breaks[-2], 0.1 / 32, places=14)
        self.assertEqual(breaks.size, 11 + 10)

    def test_grading_stops_at_float_resolution(self):
        breaks = grade_breakpoints(np.linspace(0.0, 1.0, 3), levels=80, left=False)
        self.assertTrue(np.all(np.diff(breaks) > 0))
        self.assertLess(breaks.size, 3 + 80)
