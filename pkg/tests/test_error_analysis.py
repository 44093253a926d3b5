import io
import json
import math
import os
import shutil
import tempfile
import unittest

import numpy as np
import pandas as pd

from InvertibleErf.approx_core import ApproxFunction, ERF_CROSSOVER, PHI_CROSSOVER
from InvertibleErf.error_analysis import (
    PEAK_NOISE_FRACTION,
    ErrorReport,
    GridSpec,
    certify,
    find_crossover,
    find_rel_threshold,
    oracle_self_check,
    platform_agreement,
    proof_chain_certificate,
    scan,
    tail_certificate,
)
from InvertibleErf.exceptions import BracketingError, DomainError
from InvertibleErf.reference_oracle import ReferenceOracle


class TestErrorAnalysis(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.oracle = ReferenceOracle()
        cls.erf = ApproxFunction('erf')
        cls.erfc = ApproxFunction('erfc')
        cls.phi = ApproxFunction('phi')
        cls.q = ApproxFunction('q')
        cls.winitzki = ApproxFunction('erf', 'winitzki')
        cls.dense_count = 1_000_000
        cls.crossover_tolerance = 5e-3

        cls.erf_scan = scan(cls.erf, GridSpec(0.0, 6.0, cls.dense_count), cls.oracle,
                            peak_fraction=PEAK_NOISE_FRACTION)

        # create temp dir
        cls.temp_dir = tempfile.mkdtemp()
        cls.report_csv = os.path.join(cls.temp_dir, 'erf_scan.csv')
        cls.clean_temp = True
        print("Error analysis temp: ", cls.temp_dir)

    @classmethod
    def tearDownClass(cls):
        if os.path.exists(cls.temp_dir) and cls.clean_temp:
            shutil.rmtree(cls.temp_dir)

    def test_grid_spec(self):
        grid = GridSpec(0.0, 1.0, 11)
        np.testing.assert_array_equal(grid.points(), np.linspace(0.0, 1.0, 11))
        log_grid = GridSpec(1e-6, 1.0, 7, 'log')
        self.assertAlmostEqual(log_grid.points()[1], 1e-5, delta=1e-18)
        refined = grid.refined()
        self.assertEqual(refined.count, 21)
        np.testing.assert_allclose(refined.points()[::2], grid.points(), rtol=0, atol=1e-15)

    def test_grid_spec_validation(self):
        for args in ((1.0, 1.0, 10), (2.0, 1.0, 10), (0.0, 1.0, 1), (0.0, math.inf, 10), (0.0, 1.0, 10, 'log'),
                     (0.0, 1.0, 10, 'cubic')):
            with self.assertRaises(DomainError):
                GridSpec(*args)

    # Dense scans against the published bounds
    def test_scan_improved_erf(self):
        report = self.erf_scan
        self.assertEqual(report.points, self.dense_count)
        self.assertLess(report.max_abs, 2.27e-5)
        self.assertLess(report.max_rel, 1.21e-4)
        self.assertTrue(0.0 <= report.argmax_abs <= 6.0)
        xs = [x for x, _ in report.local_maxima]
        self.assertEqual(xs, sorted(xs))
        self.assertGreaterEqual(len(xs), 4)

    def test_scan_winitzki(self):
        report = scan(self.winitzki, GridSpec(0.0, 6.0, self.dense_count), self.oracle)
        self.assertLess(report.max_abs, 1.25e-4)
        self.assertLess(report.max_rel, 1.28e-4)
        self.assertGreaterEqual(report.max_abs / self.erf_scan.max_abs, 5.0)

    def test_scan_phi(self):
        report = scan(self.phi, GridSpec(0.0, 8.0, self.dense_count), self.oracle)
        self.assertLess(report.max_abs, 1.14e-5)
        self.assertLess(report.max_rel, 1.78e-5)

    def test_scan_erfc_and_q_absolute(self):
        self.assertLess(scan(self.erfc, GridSpec(0.0, 8.0, 200_001), self.oracle).max_abs, 2.27e-5)
        self.assertLess(scan(self.q, GridSpec(0.0, 8.0, 200_001), self.oracle).max_abs, 1.14e-5)

    def test_scan_keeps_every_local_maximum(self):
        grid = GridSpec(0.0, 6.0, 200_001)
        every = scan(self.erf, grid, self.oracle)
        filtered = scan(self.erf, grid, self.oracle, peak_fraction=PEAK_NOISE_FRACTION)
        self.assertEqual(every.max_abs, filtered.max_abs)
        self.assertGreaterEqual(len(every.local_maxima), len(filtered.local_maxima))
        self.assertTrue(set(filtered.local_maxima) <= set(every.local_maxima))
        floor = PEAK_NOISE_FRACTION * filtered.max_abs
        self.assertTrue(all(err >= floor for _, err in filtered.local_maxima))

    # doubling the grid density barely moves the maximum
    def test_grid_refinement(self):
        grid = GridSpec(0.0, 6.0, 200_000)
        coarse = scan(self.erf, grid, self.oracle)
        fine = scan(self.erf, grid.refined(), self.oracle)
        self.assertLess(abs(fine.max_abs - coarse.max_abs), 1e-9)

    def test_scan_deterministic_and_threaded(self):
        grid = GridSpec(0.0, 8.0, 100_001)
        first = scan(self.phi, grid, self.oracle)
        second = scan(self.phi, grid, self.oracle)
        threaded = scan(self.phi, grid, self.oracle, workers=4)
        self.assertEqual(first, second)
        self.assertEqual(first, threaded)

    def test_error_report_export(self):
        self.erf_scan.export(self.report_csv, 'csv')
        df = pd.read_csv(self.report_csv)
        self.assertEqual(df.shape[0], 1)
        self.assertEqual(df['max_abs'][0], self.erf_scan.max_abs)
        obj = json.loads(self.erf_scan.render('json'))
        self.assertEqual(obj['grid']['count'], self.dense_count)
        self.assertEqual(len(obj['local_maxima']), len(self.erf_scan.local_maxima))
        self.assertIn('erf/improved', self.erf_scan.render('human'))

    def test_crossovers(self):
        x_erf = find_crossover(self.erf, 1.0, (3.0, 5.0), self.oracle)
        self.assertLess(abs(x_erf - ERF_CROSSOVER), self.crossover_tolerance)
        x_phi = find_crossover(self.phi, 1.0, (5.0, 7.0), self.oracle)
        self.assertLess(abs(x_phi - PHI_CROSSOVER), self.crossover_tolerance)
        x_erfc = find_crossover(self.erfc, 0.0, (3.0, 5.0), self.oracle)
        self.assertAlmostEqual(x_erfc, x_erf, delta=1e-8)
        # Phi(x) is erf at x / sqrt(2), so the crossovers scale by sqrt(2)
        self.assertAlmostEqual(x_phi, math.sqrt(2.0) * x_erf, delta=1e-6)

    # Winitzki's tail falls below twice the reference only far out
    def test_winitzki_crossover(self):
        x_star = find_crossover(self.winitzki, 1.0, (3.0, 20.0), self.oracle)
        self.assertTrue(6.0 < x_star < 20.0)
        ref_tail = self.oracle.erfc(x_star)
        error = abs(self.winitzki.tail(x_star) - ref_tail)
        self.assertLess(abs(error / ref_tail - 1.0), 1e-6)
        with self.assertRaises(BracketingError):
            find_crossover(self.winitzki, 1.0, (3.0, 6.0), self.oracle)

    def test_crossover_against_other_constant(self):
        # below the crossover the approximation beats the constant 1 by a wide margin
        with self.assertRaises(BracketingError):
            find_crossover(self.erf, 1.0, (1.0, 2.0), self.oracle)

    def test_relative_thresholds(self):
        b_erfc = find_rel_threshold(self.erfc, 0.01, (1.5, 3.0), self.oracle)
        self.assertGreaterEqual(b_erfc, 2.1588)
        self.assertLess(b_erfc - 2.1588, 0.01)
        b_q = find_rel_threshold(self.q, 0.01, (2.5, 4.0), self.oracle)
        self.assertGreaterEqual(b_q, 3.053)
        self.assertAlmostEqual(b_q, math.sqrt(2.0) * b_erfc, delta=1e-6)

    def test_relative_threshold_never_reached(self):
        self.assertIsNone(find_rel_threshold(self.erf, 1.21e-4, (1.0, 8.0), self.oracle))
        with self.assertRaises(BracketingError):
            find_rel_threshold(self.erfc, 1e-6, (1.0, 3.0), self.oracle)

    def test_tail_certificate(self):
        wide = tail_certificate(4.0001, 40.0, 1000, self.oracle)
        self.assertTrue(wide.passed)
        self.assertLess(wide.max_tail, 6.145e-6)
        narrow = tail_certificate(5.0, 10.0, 100, self.oracle)
        self.assertTrue(narrow.passed)
        self.assertGreater(narrow.exponent_margin, wide.exponent_margin)
        self.assertGreater(narrow.tail_margin, wide.tail_margin)
        self.assertGreater(narrow.error_margin, wide.error_margin)
        with self.assertRaises(DomainError):
            tail_certificate(3.0, 10.0, 100, self.oracle)

    def test_proof_chain(self):
        checks = proof_chain_certificate(oracle=self.oracle)
        failed = [name for name, ok in checks.items() if not ok]
        self.assertEqual(failed, [])

    def test_oracle_checks(self):
        self.assertLess(oracle_self_check(oracle=self.oracle), 1e-13)
        agreement = platform_agreement(GridSpec(0.0, 8.0, 1001), self.oracle)
        self.assertLess(agreement['erf'], 1e-13)
        self.assertLess(agreement['erfc'], 1e-13)

    def test_certify(self):
        report = certify(grid_count=200_001, workers=2, oracle=self.oracle)
        self.assertTrue(report.passed, report.failing())
        self.assertEqual(report.failing(), [])
        frame = pd.read_csv(io.StringIO(report.render('csv')))
        self.assertEqual(frame.shape[0], len(report.claims))
        self.assertTrue(frame.loc[frame['required'], 'passed'].all())
        obj = json.loads(report.render('json'))
        self.assertTrue(obj['passed'])
        self.assertIn('erf/improved', obj['scans'])
        self.assertIsInstance(report.scans['erf/improved'], ErrorReport)


if __name__ == '__main__':
    unittest.main()
