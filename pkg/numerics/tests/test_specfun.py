import math

import numpy as np
from django.test import SimpleTestCase, override_settings

from numerics.exceptions import DomainError, NonConvergenceError
from numerics.specfun import EvalPolicy, MLIndex, gamma_fn, mittag_leffler, mittag_leffler_array


class GammaTests(SimpleTestCase):
    def test_integer_and_half_integer_values(self):
        self.assertAlmostEqual(gamma_fn(5), 24.0, places=12)
        self.assertAlmostEqual(gamma_fn(0.5), math.sqrt(math.pi), places=14)
        self.assertAlmostEqual(gamma_fn(1.5), 0.5 * math.sqrt(math.pi), places=14)

    def test_recurrence(self):
        for z in np.linspace(0.1, 10.0, 34):
            with self.subTest(z=z):
                self.assertAlmostEqual(gamma_fn(z + 1.0) / (z * gamma_fn(z)), 1.0, places=13)

    def test_non_integer_value(self):
        self.assertAlmostEqual(gamma_fn(2.9), 1.82736, delta=1e-5)
        self.assertAlmostEqual(gamma_fn(2.9), 1.9 * 0.9 * gamma_fn(0.9), places=13)

    def test_rejects_nonpositive_arguments(self):
        for x in (0.0, -1.0, float('nan')):
            with self.assertRaises(DomainError):
                gamma_fn(x)


class MittagLefflerTests(SimpleTestCase):
    def test_zero_argument_is_reciprocal_gamma(self):
        self.assertEqual(mittag_leffler(MLIndex(1.9, 1.9), 0.0), 1.0 / gamma_fn(1.9))

    def test_classical_reductions(self):
        x = np.linspace(0.1, 10.0, 100)
        np.testing.assert_allclose(mittag_leffler_array(MLIndex(1.0, 1.0), x), np.exp(x), rtol=1e-12)
        np.testing.assert_allclose(mittag_leffler_array(MLIndex(2.0, 1.0), x), np.cosh(np.sqrt(x)), rtol=1e-12)
        self.assertEqual(mittag_leffler(MLIndex(1.0, 1.0), 0.0), 1.0)
        for x in (0.3, 2.0, 10.0):
            root = math.sqrt(x)
            self.assertAlmostEqual(mittag_leffler(MLIndex(2.0, 2.0), x) / (math.sinh(root) / root), 1.0, places=13)

    def test_example_constants(self):
        self.assertAlmostEqual(mittag_leffler(MLIndex(1.9, 1.0), 2.0), 2.33902, delta=2e-5)
        self.assertAlmostEqual(mittag_leffler(MLIndex(1.9, 1.9), 2.0), 1.52462, delta=2e-5)
        self.assertAlmostEqual(mittag_leffler(MLIndex(1.9, 2.9), 2.0), 0.6695, delta=2e-3)

    def test_shift_recurrence(self):
        # E_{mu,nu}(x) = 1/Gamma(nu) + x E_{mu,mu+nu}(x)
        for mu, nu, x in ((1.9, 1.0, 2.0), (1.5, 1.5, 7.0), (1.2, 0.4, 30.0)):
            lhs = mittag_leffler(MLIndex(mu, nu), x)
            rhs = 1.0 / gamma_fn(nu) + x * mittag_leffler(MLIndex(mu, mu + nu), x)
            self.assertAlmostEqual(lhs / rhs, 1.0, places=12)

    def test_shift_identity_on_parameter_grid(self):
        # E_{mu,1}(z) = 1 + z E_{mu,mu+1}(z)
        z = np.array([0.0, 0.01, 0.5, 1.0, 5.0, 12.5, 25.0, 50.0])
        for mu in (1.05, 1.1, 1.5, 1.9, 2.0):
            with self.subTest(mu=mu):
                lhs = mittag_leffler_array(MLIndex(mu, 1.0), z)
                rhs = 1.0 + z * mittag_leffler_array(MLIndex(mu, mu + 1.0), z)
                np.testing.assert_allclose(lhs, rhs, rtol=1e-10)

    def test_monotone_on_nonnegative_axis(self):
        values = mittag_leffler_array(MLIndex(1.9, 1.9), np.linspace(0.0, 20.0, 200))
        self.assertTrue(np.all(np.diff(values) > 0))

    def test_array_matches_scalar_exactly(self):
        idx = MLIndex(1.9, 1.0)
        x = np.array([0.0, 1e-300, 0.5, 2.0, 99.0, 2.0])
        values = mittag_leffler_array(idx, x)
        for xi, vi in zip(x, values):
            self.assertEqual(mittag_leffler(idx, xi), vi)

    def test_array_shape_is_preserved(self):
        x = np.linspace(0.0, 3.0, 12).reshape(3, 4)
        self.assertEqual(mittag_leffler_array(MLIndex(1.5, 1.0), x).shape, (3, 4))

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            MLIndex(0.0, 1.0)
        with self.assertRaises(DomainError):
            mittag_leffler(MLIndex(1.9, 1.0), -0.1)
        with self.assertRaises(DomainError):
            mittag_leffler(MLIndex(1.9, 1.0), 100.5)
        with self.assertRaises(DomainError):
            mittag_leffler_array(MLIndex(1.9, 1.0), np.array([1.0, np.inf]))

    @override_settings(FBVP={'ML_MAX_ARGUMENT': 200.0})
    def test_argument_cap_comes_from_settings(self):
        self.assertGreater(mittag_leffler(MLIndex(1.0, 1.0), 150.0), 1e64)

    def test_term_budget_exhaustion(self):
        policy = EvalPolicy(rel_tol=1e-16, k_max=16)
        with self.assertRaises(NonConvergenceError):
            mittag_leffler(MLIndex(1.0, 1.0), 50.0, policy)

    def test_policy_validation(self):
        with self.assertRaises(DomainError):
            EvalPolicy(rel_tol=0.0, k_max=100)
        with self.assertRaises(DomainError):
            EvalPolicy(rel_tol=1e-10, k_max=4)
