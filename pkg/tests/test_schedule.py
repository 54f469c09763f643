import unittest
import math
import numpy as np
from scipy import integrate, stats
from bsi.errors import ContractViolation, DomainError
from bsi.schedule import (PrecisionSchedule, ProposalDistribution, ScheduleKind, lambda_of_t,
                          low_discrepancy_batch, proposal_density, sample_proposal, t_of_lambda)


class TestPrecisionSchedule(unittest.TestCase):
    def test_endpoints(self):
        for kind in ScheduleKind:
            s = PrecisionSchedule(0.01, 1e6, 16, kind)
            self.assertEqual(0.01, s.lambda_at(0))
            self.assertEqual(0.01 + 1e6, s.lambda_at(16))
            self.assertTrue(np.all(np.diff(s.lambdas()) > 0))

    def test_geometric_midpoint(self):
        s = PrecisionSchedule(0.01, 1e6 - 0.01, 2, ScheduleKind.LOG)
        self.assertAlmostEqual(100.0, s.lambda_at(1), delta=1e-9)

    def test_alpha_sum(self):
        for kind in ScheduleKind:
            for k in (1, 10, 1000, 10000):
                s = PrecisionSchedule(0.01, 1e6, k, kind)
                alphas = s.alphas()
                self.assertEqual(k, len(alphas))
                self.assertTrue(np.all(alphas > 0))
                self.assertLess(abs(math.fsum(alphas) - 1e6) / 1e6, 1e-9)

    def test_out_of_range(self):
        s = PrecisionSchedule(0.01, 1e6, 4)
        with self.assertRaises(ContractViolation):
            s.lambda_at(5)
        with self.assertRaises(ContractViolation):
            s.lambda_at(-1)
        with self.assertRaises(DomainError):
            PrecisionSchedule(0.01, 1e6, 0).lambdas()


class TestPrecisionEncoding(unittest.TestCase):
    def test_endpoints(self):
        self.assertEqual(0.0, t_of_lambda(0.01, 0.01, 1e6))
        self.assertEqual(1.0, t_of_lambda(1e6, 0.01, 1e6))
        self.assertAlmostEqual(0.5, t_of_lambda(100.0, 0.01, 1e6), places=12)

    def test_lambda_endpoints_exact(self):
        self.assertEqual(0.01, lambda_of_t(0.0, 0.01, 1e6))
        self.assertEqual(1e6, lambda_of_t(1.0, 0.01, 1e6))
        self.assertEqual(0.01, lambda_of_t(0.0, 0.01, 0.01 + 1e6))
        lam = lambda_of_t(np.linspace(0.0, 1.0, 11), 0.01, 0.01 + 1e6)
        self.assertEqual([0.01, 0.01 + 1e6], [lam[0], lam[-1]])
        self.assertEqual(0.01, sample_proposal(ProposalDistribution(0.01, 0.01 + 1e6), 0.0))

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        lam = np.exp(rng.uniform(math.log(0.01), math.log(1e6), 1000))
        back = lambda_of_t(t_of_lambda(lam, 0.01, 1e6), 0.01, 1e6)
        self.assertLess(float(np.max(np.abs(back - lam) / lam)), 1e-12)

    def test_domain(self):
        with self.assertRaises(DomainError):
            t_of_lambda(0.001, 0.01, 1e6)
        with self.assertRaises(DomainError):
            t_of_lambda(2e6, 0.01, 1e6)


class TestProposal(unittest.TestCase):
    P = ProposalDistribution(0.01, 1e6)

    def test_inverse_cdf(self):
        self.assertEqual(0.01, sample_proposal(self.P, 0.0))
        self.assertAlmostEqual(100.0, sample_proposal(self.P, 0.5), delta=1e-9)
        self.assertLess(abs(sample_proposal(self.P, 1 - 1e-12) - 1e6) / 1e6, 1e-10)
        with self.assertRaises(DomainError):
            sample_proposal(self.P, 1.0)

    def test_goodness_of_fit(self):
        u = np.random.default_rng(1).random(1000000)
        lam = sample_proposal(self.P, u)
        edges = np.exp(np.linspace(math.log(0.01), math.log(1e6), 51))
        observed, _ = np.histogram(lam, edges)
        expected = np.full(50, len(lam) / 50)
        self.assertGreater(stats.chisquare(observed, expected).pvalue, 0.001)

    def test_density(self):
        self.assertAlmostEqual(1.0 / math.log(1e8), proposal_density(self.P, 1.0), places=12)
        self.assertAlmostEqual(0.05429, proposal_density(self.P, 1.0), places=5)
        ratio = proposal_density(self.P, 0.01) / proposal_density(self.P, 1e6)
        self.assertAlmostEqual(1e8, ratio, delta=1e-4)
        # integrate in log lambda
        total, _ = integrate.quad(lambda s: proposal_density(self.P, math.exp(s)) * math.exp(s),
                                  math.log(0.01), math.log(1e6))
        self.assertAlmostEqual(1.0, total, delta=1e-6)
        with self.assertRaises(DomainError):
            proposal_density(self.P, 1e7)


class TestLowDiscrepancy(unittest.TestCase):
    def test_grid(self):
        np.testing.assert_allclose([0, 0.25, 0.5, 0.75], low_discrepancy_batch(4, 0.0), atol=1e-15)

    def test_wrap(self):
        np.testing.assert_allclose([0.9, 0.15, 0.4, 0.65], low_discrepancy_batch(4, 0.9), atol=1e-12)

    def test_gaps(self):
        rng = np.random.default_rng(2)
        for b in (1, 2, 7, 64):
            t = np.sort(low_discrepancy_batch(b, float(rng.random())))
            self.assertTrue(np.all((0 <= t) & (t < 1)))
            gaps = np.append(np.diff(t), 1.0 - t[-1] + t[0])
            np.testing.assert_allclose(gaps, 1.0 / b, atol=1e-12)


if __name__ == '__main__':
    unittest.main()
