import unittest
from unittest import mock
import importlib
import math
import numpy as np
from bsi import sampler
from bsi.data import generate, preset, quantize
from bsi.elbo import ReconConfig, bpd
from bsi.errors import ContractViolation, DomainError, TrainingAborted
from bsi.predictor import BackboneKind, FeatureConfig, Predictor, PredictorSpec
from bsi.rng import Role, stream
from bsi.sampler import SamplerConfig
from bsi.schedule import PrecisionSchedule, ProposalDistribution, low_discrepancy_batch, sample_proposal
from bsi.trainer import AdamW, LrDecay, TrainConfig, batch_loss, batch_loss_and_grad, ema_update, train

PROPOSAL = ProposalDistribution()


def mlp_spec(dim: int = 2, width: int = 8, depth: int = 1, lambda_m: float = PROPOSAL.lambda_m) -> PredictorSpec:
    return PredictorSpec(BackboneKind.MLP, dim, PROPOSAL.lambda0, lambda_m, FeatureConfig(), width, depth)


class TestEma(unittest.TestCase):
    def test_first_update_copies(self):
        params = np.array([1.0, 2.0])
        ema = ema_update(None, params, 0.9)
        np.testing.assert_array_equal(params, ema)
        self.assertIsNot(params, ema)

    def test_beta_zero(self):
        np.testing.assert_array_equal([3.0, 4.0], ema_update(np.zeros(2), np.array([3.0, 4.0]), 0.0))

    def test_fixed_point(self):
        params = np.array([0.3, -1.7, 12.5])
        ema = ema_update(None, params, 0.9999)
        for _ in range(10000):
            ema = ema_update(ema, params, 0.9999)
        np.testing.assert_allclose(params, ema, rtol=1e-11)

    def test_step_response(self):
        ema = ema_update(None, np.zeros(1), 0.9999)
        ones = np.ones(1)
        for m in range(1, 501):
            ema = ema_update(ema, ones, 0.9999)
            if m % 100 == 0:
                self.assertAlmostEqual(1 - 0.9999 ** m, ema[0], places=12)

    def test_errors(self):
        with self.assertRaises(ContractViolation):
            ema_update(np.zeros(2), np.zeros(3), 0.5)
        with self.assertRaises(DomainError):
            ema_update(np.zeros(2), np.zeros(2), 1.0)


class TestAdamW(unittest.TestCase):
    def test_first_step(self):
        # the first bias-corrected step moves every coordinate by lr
        opt = AdamW(3, lr=0.1, weight_decay=0.0)
        params = opt.step(np.zeros(3), np.array([2.0, -0.5, 1e-3]))
        np.testing.assert_allclose([-0.1, 0.1, -0.1], params, rtol=1e-4)

    def test_decoupled_decay(self):
        opt = AdamW(2, lr=0.1, weight_decay=0.5, decay_mask=np.array([1.0, 0.0]))
        params = opt.step(np.ones(2), np.zeros(2))
        np.testing.assert_allclose([1.0 - 0.05, 1.0], params, rtol=1e-12)

    def test_shapes(self):
        with self.assertRaises(ContractViolation):
            AdamW(3).step(np.zeros(3), np.zeros(2))


class TestBatchLoss(unittest.TestCase):
    def test_gradient_matches_finite_differences(self):
        spec = mlp_spec(width=8, depth=2)
        x = np.clip(stream(1, 0).standard_normal((16, 2)) * 0.5, -1, 1)
        for state in range(3):
            rng = stream(1, 1, state)
            params = 0.5 * rng.standard_normal(spec.param_count)
            f = Predictor(spec, params)
            lam = sample_proposal(PROPOSAL, low_discrepancy_batch(16, rng.random()))
            noise = rng.standard_normal(x.shape)
            loss, grad = batch_loss_and_grad(f, x, lam, noise, PROPOSAL)

            def objective(p):
                return batch_loss_and_grad(f.with_params(p), x, lam, noise, PROPOSAL)[0]

            self.assertEqual(loss, objective(params))
            step = 1e-5
            for j in rng.choice(len(params), 64, replace=False):
                plus = params.copy()
                plus[j] += step
                minus = params.copy()
                minus[j] -= step
                fd = (objective(plus) - objective(minus)) / (2 * step)
                self.assertLessEqual(abs(grad[j] - fd), 1e-4 * max(abs(fd), 1e-3), f'state {state}, coordinate {j}')

    def test_low_discrepancy_smooths_loss(self):
        # without encoder noise the identity loss is a function of t alone
        f = Predictor.identity(2)
        x = np.full((64, 2), 0.5)
        noise = np.zeros_like(x)
        rng = stream(2, 0)
        stratified = []
        independent = []
        for _ in range(200):
            stratified.append(batch_loss(f, x, low_discrepancy_batch(64, rng.random()), noise, PROPOSAL))
            independent.append(batch_loss(f, x, rng.random(64), noise, PROPOSAL))
        self.assertLessEqual(np.std(stratified), np.std(independent))


class TestTrain(unittest.TestCase):
    def setUp(self):
        self.data, _ = generate(preset('two-atom', 2), 64)

    def test_zero_learning_rate(self):
        spec = mlp_spec()
        cfg = TrainConfig(batch_size=8, steps=20, learning_rate=0.0, ema_start_step=5, seed=3)
        ckpt = train(self.data, spec, cfg)
        init = spec.layout().init_params(stream(3, Role.INIT))
        np.testing.assert_array_equal(init, ckpt.params)
        np.testing.assert_allclose(init, ckpt.ema, rtol=0, atol=1e-12)

    def test_deterministic(self):
        spec = mlp_spec()
        cfg = TrainConfig(batch_size=8, steps=10, ema_start_step=3, seed=4)
        a = train(self.data, spec, cfg)
        b = train(self.data, spec, cfg)
        self.assertEqual(a.to_bytes(), b.to_bytes())
        self.assertFalse(np.array_equal(a.params, spec.layout().init_params(stream(4, Role.INIT))))

    def test_ema_before_start(self):
        ckpt = train(self.data, mlp_spec(), TrainConfig(batch_size=4, steps=3, seed=1))
        np.testing.assert_array_equal(ckpt.params, ckpt.ema)
        self.assertEqual(3, ckpt.step)

    def test_metrics(self):
        rows = []
        cfg = TrainConfig(batch_size=4, steps=10, log_interval=4, seed=2)
        train(self.data, mlp_spec(), cfg, on_metrics=rows.append)
        self.assertEqual([4, 8, 10], [row.step for row in rows])
        for row in rows:
            self.assertTrue(math.isfinite(row.loss))
            self.assertEqual(('step', 'loss', 'loss_se', 'param_norm', 'ema_dist'), tuple(row.row().keys()))

    def test_warmup(self):
        cfg = TrainConfig(warmup_steps=10)
        self.assertEqual(0.5, cfg.lr_scale(5))
        self.assertEqual(1.0, cfg.lr_scale(10))
        self.assertEqual(1.0, TrainConfig().lr_scale(1))

    def test_aborts_on_non_finite_loss(self):
        spec = mlp_spec()
        nan_loss = (float('nan'), np.zeros(spec.param_count))
        module = importlib.import_module('bsi.trainer.train')
        with mock.patch.object(module, 'batch_loss_and_grad', return_value=nan_loss):
            with self.assertRaises(TrainingAborted) as cm:
                train(self.data, spec, TrainConfig(batch_size=4, steps=5))
        self.assertEqual(1, cm.exception.step)
        self.assertEqual(4, len(cm.exception.lambdas))
        self.assertIn('step 1', str(cm.exception))

    def test_rejects(self):
        with self.assertRaises(ContractViolation):
            train(self.data, PredictorSpec(BackboneKind.IDENTITY, 2), TrainConfig(steps=1))
        with self.assertRaises(DomainError):
            train(self.data * 3, mlp_spec(), TrainConfig(steps=1))
        with self.assertRaises(DomainError):
            TrainConfig(batch_size=0).validate()
        with self.assertRaises(DomainError):
            TrainConfig(ema_beta=1.0).validate()

    def test_cosine_decay(self):
        cfg = TrainConfig(steps=110, warmup_steps=10, lr_decay=LrDecay.COSINE)
        self.assertEqual(0.5, cfg.lr_scale(5))
        self.assertEqual(1.0, cfg.lr_scale(10))
        self.assertAlmostEqual(0.5, cfg.lr_scale(60), places=12)
        self.assertAlmostEqual(0.0, cfg.lr_scale(110), places=12)
        scales = [cfg.lr_scale(s) for s in range(10, 111)]
        self.assertTrue(all(a >= b for a, b in zip(scales, scales[1:])))
        self.assertEqual('cosine', cfg.to_json()['lr_decay'])

    def test_ema_decay_ramp(self):
        cfg = TrainConfig(ema_beta=0.999, ema_start_step=100)
        self.assertEqual(0.1, cfg.ema_decay(100))
        self.assertAlmostEqual(101 / 110, cfg.ema_decay(200), places=12)
        self.assertEqual(0.999, cfg.ema_decay(100000))
        self.assertEqual(0.999, cfg._replace(ema_warmup=False).ema_decay(101))

    def test_ema_follows_late_weights(self):
        # with the ramp the EMA of a short run stays near the final weights
        cfg = TrainConfig(batch_size=8, steps=60, learning_rate=1e-2, ema_start_step=10, seed=5)
        ramped = train(self.data, mlp_spec(), cfg)
        fixed = train(self.data, mlp_spec(), cfg._replace(ema_warmup=False))
        np.testing.assert_array_equal(ramped.params, fixed.params)
        self.assertLess(np.linalg.norm(ramped.ema - ramped.params), np.linalg.norm(fixed.ema - fixed.params))


class TestLearnability(unittest.TestCase):
    '''
    end to end: train, then bits per dimension and generation
    '''
    CFG = TrainConfig(batch_size=512, steps=5000, learning_rate=3e-3, ema_beta=0.999, ema_start_step=2500,
                      seed=0, warmup_steps=100, log_interval=500, lr_decay=LrDecay.COSINE)

    def fit(self, name: str, dim: int):
        spec = preset(name, dim)
        data, levels = generate(spec, 256)
        predictor = PredictorSpec(BackboneKind.MLP, dim, PROPOSAL.lambda0, PROPOSAL.lambda_m,
                                  FeatureConfig(n_min=0, n_max=8), 128, 2)
        windows = []
        ckpt = train(data, predictor, self.CFG, on_metrics=lambda row: windows.append(row.loss))
        # trailing 500-step mean never rises by more than 10%
        for a, b in zip(windows, windows[1:]):
            self.assertLessEqual(b, 1.1 * a)
        return spec, levels, ckpt

    def test_one_atom(self):
        spec, levels, ckpt = self.fit('one-atom', 4)
        report = bpd(ckpt.predictor(), levels[:50], PROPOSAL, ReconConfig(), num_mc_measure=20)
        self.assertLess(report.bpd, 0.05)
        samples = sampler.generate(ckpt.predictor(), SamplerConfig(PrecisionSchedule(k=256)), 100)
        np.testing.assert_array_equal(np.broadcast_to(levels[0], (100, 4)), quantize(samples))

    def test_two_atom(self):
        spec, levels, ckpt = self.fit('two-atom', 1)
        report = bpd(ckpt.predictor(), levels[:200], PROPOSAL, ReconConfig(), num_mc_measure=50)
        self.assertGreaterEqual(report.bpd, 0.98)
        self.assertLessEqual(report.bpd, 1.25)
        cfg = SamplerConfig(PrecisionSchedule(k=256), seed=1)
        hits = quantize(sampler.generate(ckpt.predictor(), cfg, 10000, threads=4))[:, 0]
        atoms = quantize(spec.snapped_atoms())[:, 0]
        self.assertEqual(2, len(atoms))
        for atom in atoms:
            self.assertLess(abs(np.mean(hits == atom) - 0.5), 0.03)


if __name__ == '__main__':
    unittest.main()
