import unittest
import math
import pathlib
import tempfile
import numpy as np
from bsi.data import (DataView, DatasetSpec, dequantize, empirical_entropy_bits_per_dim, generate, preset,
                      quantize, write_csv)
from bsi.errors import ContractViolation, DomainError


class TestQuantize(unittest.TestCase):
    def test_two_levels(self):
        levels = quantize([-0.5, 0.5])
        self.assertEqual([64, 191], levels.tolist())
        self.assertEqual(2, len(np.unique(levels)))

    def test_round_trip(self):
        v = np.arange(256)
        np.testing.assert_array_equal(v, quantize(dequantize(v)))
        v = np.arange(4)
        np.testing.assert_array_equal(v, quantize(dequantize(v, 4), 4))

    def test_bounds(self):
        self.assertEqual([0, 255], quantize([-1.0, 1.0]).tolist())
        self.assertEqual([0, 255], quantize([-3.0, 7.0]).tolist())
        self.assertEqual(-1.0, dequantize(0))
        self.assertEqual(1.0, dequantize(255))

    def test_half_to_even(self):
        # 2 levels per unit: x = 0 lands on 1.5
        self.assertEqual(2, quantize(0.0, 4))


class TestGenerate(unittest.TestCase):
    def test_frequencies(self):
        count = 20000
        spec = DatasetSpec.point_set([[-0.5], [0.5]], weights=[0.3, 0.7])
        _, levels = generate(spec, count)
        freq = np.mean(levels[:, 0] == 191)
        self.assertLess(abs(freq - 0.7), 3 * math.sqrt(0.21 / count) + 1e-12)

    def test_normalized(self):
        for name in ('two-atom', 'mixture', 'standard-normal'):
            x, levels = generate(preset(name, 3), 500)
            self.assertEqual((500, 3), x.shape)
            self.assertTrue(np.all(np.abs(x) <= 1.0))
            self.assertTrue(np.all((levels >= 0) & (levels <= 255)))
            np.testing.assert_array_equal(x, dequantize(levels))

    def test_deterministic(self):
        a = generate(preset('mixture', 2, seed=4), 100)[1]
        b = generate(preset('mixture', 2, seed=4), 100)[1]
        c = generate(preset('mixture', 2, seed=5), 100)[1]
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))

    def test_snapped_prior(self):
        spec = preset('two-atom', 2)
        np.testing.assert_array_equal(dequantize([[64, 64], [191, 191]]), spec.to_prior().means)

    def test_errors(self):
        with self.assertRaises(DomainError):
            preset('unknown', 1)
        with self.assertRaises(DomainError):
            preset('cube', 13)
        with self.assertRaises(DomainError):
            DatasetSpec.point_set([[1.5]])
        with self.assertRaises(DomainError):
            DatasetSpec.point_set([[0.0], [0.5]], weights=[0.5, 0.6])
        with self.assertRaises(ContractViolation):
            DatasetSpec.point_set([[0.0], [0.5]], weights=[1.0])
        with self.assertRaises(DomainError):
            generate(preset('one-atom', 1), 0)

    def test_json(self):
        for name in ('cube', 'mixture', 'standard-normal'):
            spec = preset(name, 2, levels=16, seed=3)
            again = DatasetSpec.from_json(spec.to_json())
            self.assertEqual(spec.to_json(), again.to_json())


class TestEntropy(unittest.TestCase):
    def test_atoms(self):
        self.assertEqual(0.0, empirical_entropy_bits_per_dim(generate(preset('one-atom', 2), 1000)[1]))
        two = empirical_entropy_bits_per_dim(generate(preset('two-atom', 1), 20000)[1])
        self.assertAlmostEqual(1.0, two, delta=1e-3)
        cube = empirical_entropy_bits_per_dim(generate(preset('cube', 2), 20000)[1])
        self.assertAlmostEqual(1.0, cube, delta=1e-3)

    def test_exact(self):
        levels = np.array([[0, 1], [0, 1], [2, 3], [4, 5]])
        self.assertAlmostEqual(1.5 / 2, empirical_entropy_bits_per_dim(levels), places=12)


class TestExport(unittest.TestCase):
    def test_csv(self):
        x, levels = generate(preset('two-atom', 2), 3)
        with tempfile.TemporaryDirectory() as tmp:
            path = pathlib.Path(tmp) / 'levels.csv'
            write_csv(path, levels, DataView.LEVELS)
            lines = path.read_text(encoding='utf-8').splitlines()
            self.assertEqual('d0,d1', lines[0])
            self.assertEqual(levels.tolist(), [[int(v) for v in line.split(',')] for line in lines[1:]])
            path = pathlib.Path(tmp) / 'x.csv'
            write_csv(path, x, DataView.CONTINUOUS)
            lines = path.read_text(encoding='utf-8').splitlines()
            self.assertEqual(x.tolist(), [[float(v) for v in line.split(',')] for line in lines[1:]])


if __name__ == '__main__':
    unittest.main()
