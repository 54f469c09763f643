import unittest
import math
import numpy as np
from bsi.belief import BeliefState, INFINITY, update_marginal
from bsi.encoder import EncoderConfig, encode, encoder_params, sample_encoder
from bsi.errors import DomainError


def composed(cfg: EncoderConfig, x: np.ndarray, lam: float):
    '''
    mu0 ~ N_P(0, gamma0) followed by one update of precision lambda - lambda0
    '''
    m = update_marginal(BeliefState(np.zeros_like(x), cfg.lambda0), x, lam - cfg.lambda0)
    gamma0 = cfg.prior_precision
    prior_var = 0.0 if gamma0 is INFINITY else 1.0 / gamma0
    return m.mean, (cfg.lambda0 / lam) ** 2 * prior_var + m.variance


class TestEncoderParams(unittest.TestCase):
    X = np.array([0.5, -0.25, 0.75])

    def test_latent_prior(self):
        p = encoder_params(EncoderConfig.bsi(0.01), self.X, 0.01)
        np.testing.assert_array_equal(p.mean, np.zeros(3))
        self.assertEqual(0.01, p.precision)

    def test_bfn(self):
        p = encoder_params(EncoderConfig.bfn(), self.X, 2.0)
        np.testing.assert_allclose(p.mean, self.X / 2, rtol=1e-15)
        self.assertAlmostEqual(0.25, p.variance, places=15)

    def test_bfn_monte_carlo(self):
        rng = np.random.default_rng(0)
        x = np.array([0.6])
        y = x + rng.standard_normal(100000)
        mu = (1.0 * 0.0 + 1.0 * y) / 2.0
        p = encoder_params(EncoderConfig.bfn(), x, 2.0)
        self.assertLess(abs(mu.mean() - p.mean[0]), 4 * math.sqrt(p.variance / len(mu)))
        self.assertLess(abs(mu.var(ddof=1) - p.variance), 4 * p.variance * math.sqrt(2 / len(mu)))

    def test_bsi_high_precision(self):
        p = encoder_params(EncoderConfig.bsi(0.01), self.X, 1e6)
        np.testing.assert_allclose(p.mean, (1 - 1e-8) * self.X, rtol=1e-12)
        self.assertEqual(1e6, p.precision)

    def test_bsi_precision_is_lambda(self):
        rng = np.random.default_rng(1)
        for lam in np.exp(rng.uniform(math.log(0.01), math.log(1e6), 100)):
            lam = max(float(lam), 0.01)
            self.assertLess(abs(lam * lam / (lam - 0.01 + 0.01) - lam) / lam, 1e-9)
            self.assertEqual(lam, encoder_params(EncoderConfig.bsi(0.01), self.X, lam).precision)

    def test_bfn_variance_peak(self):
        cfg = EncoderConfig.bfn()

        def variance(alpha):
            return encoder_params(cfg, self.X, 1.0 + alpha).variance

        for alpha in (0.25, 0.5, 1.0, 2.0, 4.0):
            self.assertAlmostEqual(alpha / (1 + alpha) ** 2, variance(alpha), places=14)
        self.assertGreater(variance(1.0), variance(0.5))
        self.assertGreater(variance(1.0), variance(2.0))

    def test_composition(self):
        for cfg in (EncoderConfig(0.01, 0.01), EncoderConfig(0.01, 0.1), EncoderConfig(0.01, INFINITY),
                    EncoderConfig.bfn()):
            for lam in (cfg.lambda0 * 1.5, 1.0 + cfg.lambda0, 1e3):
                p = encoder_params(cfg, self.X, lam)
                mean, var = composed(cfg, self.X, lam)
                np.testing.assert_allclose(p.mean, mean, rtol=1e-9)
                self.assertLess(abs(p.variance - var) / var, 1e-9)

    def test_bfn_start_is_point_mass(self):
        p = encoder_params(EncoderConfig.bfn(), self.X, 1.0)
        self.assertIs(INFINITY, p.precision)
        self.assertEqual(0.0, p.variance)

    def test_domain(self):
        with self.assertRaises(DomainError):
            encoder_params(EncoderConfig.bsi(0.01), self.X, 0.005)
        with self.assertRaises(DomainError):
            EncoderConfig(0.01, 0.001).validate()


class TestSampleEncoder(unittest.TestCase):
    X = np.array([0.5, -0.25, 0.75, 0.0])

    def test_zero_noise(self):
        cfg = EncoderConfig(0.01, 0.1)
        p = encoder_params(cfg, self.X, 3.0)
        np.testing.assert_array_equal(encode(cfg, self.X, 3.0, np.zeros(4)), p.mean)

    def test_reproducible(self):
        cfg = EncoderConfig.bsi(0.01)
        a = sample_encoder(cfg, self.X, 5.0, np.random.default_rng(7))
        b = sample_encoder(cfg, self.X, 5.0, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_moments(self):
        cfg = EncoderConfig.bsi(0.01)
        lam = 0.5
        rng = np.random.default_rng(2)
        count = 100000
        draws = encode(cfg, self.X, lam, rng.standard_normal((count, 4)))
        p = encoder_params(cfg, self.X, lam)
        se = math.sqrt(p.variance / count)
        np.testing.assert_array_less(np.abs(draws.mean(axis=0) - p.mean), 4 * se)
        se_var = p.variance * math.sqrt(2 / count)
        np.testing.assert_array_less(np.abs(draws.var(axis=0, ddof=1) - p.variance), 4 * se_var)

    def test_concentrates_at_lambda_m(self):
        cfg = EncoderConfig.bsi(0.01)
        lam = 1e6 + 0.01
        rng = np.random.default_rng(3)
        bound = 5 * math.sqrt(4 / lam)
        hits = sum(np.linalg.norm(sample_encoder(cfg, self.X, lam, rng) - self.X) <= bound for _ in range(1000))
        self.assertGreaterEqual(hits, 999)


if __name__ == '__main__':
    unittest.main()
