import math
import unittest

import numpy as np
from scipy import special

from InvertibleErf.exceptions import DomainError, OracleError
from InvertibleErf.reference_oracle import (
    DEFAULT_CONFIG,
    OracleConfig,
    ReferenceOracle,
    erf_ref,
    erfc_ref,
    phi_ref,
    q_ref,
)


class TestReferenceOracle(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.oracle = ReferenceOracle()
        cls.erf_1 = 0.8427007929497149
        cls.erf_4 = 0.99999998458
        cls.abs_target = 1e-13

    def test_erf_values(self):
        self.assertEqual(erf_ref(0.0), 0.0)
        self.assertLess(abs(erf_ref(4.0) - self.erf_4), 5e-12)
        self.assertLess(abs(erf_ref(1.0) - self.erf_1), self.abs_target)
        self.assertEqual(erf_ref(-1.0), -erf_ref(1.0))

    def test_erfc_phi_q_values(self):
        self.assertEqual(phi_ref(0.0), 0.5)
        self.assertEqual(q_ref(0.0), 0.5)
        self.assertLess(abs(erfc_ref(4.0) - 1.542e-8), 5e-12)
        self.assertAlmostEqual(erfc_ref(0.0), 1.0, delta=1e-16)
        self.assertAlmostEqual(erfc_ref(-3.0), 2.0 - erfc_ref(3.0), delta=1e-16)
        self.assertAlmostEqual(phi_ref(1.959963984540054), 0.975, delta=1e-14)

    # the item D threshold needs Q at full relative accuracy
    def test_q_relative_accuracy(self):
        for x in (3.053, 5.0, 8.0, 20.0):
            expected = 0.5 * special.erfc(x / math.sqrt(2.0))
            self.assertLess(abs(q_ref(x) / expected - 1.0), 1e-12)

    # both algorithms agree where one hands over to the other
    def test_series_matches_continued_fraction(self):
        xs = np.linspace(1.5, 2.5, 101)
        series = self.oracle.erf_series(xs)
        fraction = 1.0 - self.oracle.erfc_continued_fraction(xs)
        self.assertLess(np.max(np.abs(series - fraction)), self.abs_target)
        self.assertLess(abs(self.oracle.erf_series(1.0) - self.erf_1), self.abs_target)

    def test_against_scipy(self):
        xs = np.linspace(-8.0, 8.0, 16_001)
        np.testing.assert_allclose(self.oracle.erf(xs), special.erf(xs), rtol=0, atol=self.abs_target)
        np.testing.assert_allclose(self.oracle.erfc(xs), special.erfc(xs), rtol=0, atol=self.abs_target)
        tail = np.linspace(0.5, 25.0, 2_451)
        np.testing.assert_allclose(self.oracle.erfc(tail), special.erfc(tail), rtol=1e-12)
        np.testing.assert_allclose(self.oracle.phi(xs), special.ndtr(xs), rtol=0, atol=self.abs_target)

    # erfc(x) x sqrt(pi) e^(x^2) = 1 - 1/(2x^2) + 3/(4x^4) - ...
    def test_tail_asymptotics(self):
        x = 20.0
        scaled = erfc_ref(x) * math.exp(x * x) * x * math.sqrt(math.pi)
        self.assertLess(abs(scaled - 1.0), 2e-3)
        self.assertLess(abs(scaled - (1.0 - 1.0 / (2 * x ** 2) + 3.0 / (4 * x ** 4))), 1e-7)

    # values do not depend on the other points evaluated in the same batch
    def test_batch_independence(self):
        xs = np.linspace(0.0, 6.0, 1201)
        whole = self.oracle.erf(xs)
        single = np.array([self.oracle.erf(x) for x in xs[::50]])
        np.testing.assert_array_equal(whole[::50], single)
        halves = np.concatenate([self.oracle.erfc(xs[:600]), self.oracle.erfc(xs[600:])])
        np.testing.assert_array_equal(self.oracle.erfc(xs), halves)

    def test_evaluate_dispatch(self):
        self.assertEqual(self.oracle.evaluate('erf', 1.0), erf_ref(1.0))
        self.assertEqual(self.oracle.evaluate('q', 2.0), q_ref(2.0))
        self.assertIsInstance(self.oracle.phi(1.0), float)
        self.assertEqual(self.oracle.q(np.array([1.0, 2.0])).shape, (2,))
        with self.assertRaises(ValueError):
            self.oracle.evaluate('erf_series', 1.0)

    def test_config(self):
        self.assertEqual(DEFAULT_CONFIG.switch_point, 2.0)
        for kwargs in ({'abs_tol': 0.0}, {'max_terms': 10}, {'switch_point': 6.0}):
            with self.assertRaises(DomainError):
                OracleConfig(**kwargs)
        shifted = OracleConfig(switch_point=3.0)
        self.assertAlmostEqual(erf_ref(2.5, shifted), erf_ref(2.5), delta=self.abs_target)

    def test_errors(self):
        with self.assertRaises(DomainError):
            self.oracle.erf(math.nan)
        with self.assertRaises(DomainError):
            self.oracle.erfc_continued_fraction(0.0)
        # the series needs far more than 50 terms at x = 4
        with self.assertRaises(OracleError):
            ReferenceOracle(OracleConfig(max_terms=50)).erf_series(4.0)


if __name__ == '__main__':
    unittest.main()
