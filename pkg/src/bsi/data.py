'''
Synthetic datasets with a known entropy.

Continuous values live in [-1, 1], integer levels in {0 .. r - 1}.
'''
from typing import NamedTuple, Optional, Tuple
from enum import Enum
import csv
import itertools
import logging
import pathlib
import numpy as np
from scipy.stats import entropy
from . import config
from .errors import DomainError, ContractViolation
from .predictor.backbones import DataPrior
from .rng import Role, stream

LOGGER = logging.getLogger(__name__)


class DatasetKind(Enum):
    POINT_SET = 'point-set'
    GAUSSIAN_MIXTURE = 'gaussian-mixture'
    STANDARD_NORMAL = 'standard-normal'


def quantize(x, levels: int = config.LEVELS) -> np.ndarray:
    '''
    round half to even onto {0 .. levels - 1}
    '''
    v = np.rint((np.asarray(x, dtype=np.float64) + 1.0) / 2.0 * (levels - 1))
    return np.clip(v, 0, levels - 1).astype(np.int64)


def dequantize(v, levels: int = config.LEVELS) -> np.ndarray:
    return 2.0 * np.asarray(v, dtype=np.float64) / (levels - 1) - 1.0


class DatasetSpec(NamedTuple):
    kind: DatasetKind
    dim: int
    # (K, n) atoms or component means, empty for standard-normal
    means: np.ndarray = np.zeros((0, 0))
    weights: np.ndarray = np.zeros(0)
    std: float = 0.0
    levels: int = config.LEVELS
    seed: int = 0

    def validate(self) -> 'DatasetSpec':
        if self.dim < 1:
            raise DomainError(f'dim must be >= 1: {self.dim}')
        if self.levels < 2:
            raise DomainError(f'levels must be >= 2: {self.levels}')
        if self.kind is DatasetKind.STANDARD_NORMAL:
            return self
        if self.means.ndim != 2 or self.means.shape[1] != self.dim:
            raise ContractViolation(f'means {self.means.shape} for dim {self.dim}')
        if len(self.weights) != len(self.means):
            raise ContractViolation(f'{len(self.weights)} weights for {len(self.means)} components')
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise DomainError('weights must be nonnegative and sum to 1')
        if np.any(np.abs(self.means) > 1.0):
            raise DomainError('atoms must lie in [-1, 1]')
        if self.std < 0:
            raise DomainError(f'negative std {self.std}')
        return self

    @staticmethod
    def point_set(atoms, weights=None, levels: int = config.LEVELS, seed: int = 0) -> 'DatasetSpec':
        atoms = np.atleast_2d(np.asarray(atoms, dtype=np.float64))
        if weights is None:
            weights = np.full(len(atoms), 1.0 / len(atoms))
        return DatasetSpec(DatasetKind.POINT_SET, atoms.shape[1], atoms,
                           np.asarray(weights, dtype=np.float64), 0.0, levels, seed).validate()

    @staticmethod
    def gaussian_mixture(means, std: float, weights=None, levels: int = config.LEVELS,
                         seed: int = 0) -> 'DatasetSpec':
        means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        if weights is None:
            weights = np.full(len(means), 1.0 / len(means))
        return DatasetSpec(DatasetKind.GAUSSIAN_MIXTURE, means.shape[1], means,
                           np.asarray(weights, dtype=np.float64), float(std), levels, seed).validate()

    @staticmethod
    def standard_normal(dim: int, levels: int = config.LEVELS, seed: int = 0) -> 'DatasetSpec':
        return DatasetSpec(DatasetKind.STANDARD_NORMAL, dim, levels=levels, seed=seed).validate()

    def snapped_atoms(self) -> np.ndarray:
        '''
        atoms moved to the center of their quantization bin
        '''
        return dequantize(quantize(self.means, self.levels), self.levels)

    def to_prior(self) -> DataPrior:
        '''
        the data distribution as seen by the Bayes denoiser
        '''
        match self.kind:
            case DatasetKind.POINT_SET:
                return DataPrior.point_set(self.snapped_atoms(), self.weights)
            case DatasetKind.GAUSSIAN_MIXTURE:
                return DataPrior.mixture(self.means, self.std, self.weights)
            case DatasetKind.STANDARD_NORMAL:
                return DataPrior.standard_normal(self.dim)
            case _:
                raise NotImplementedError(self.kind)

    def to_json(self) -> dict:
        return {
            'kind': self.kind.value,
            'dim': self.dim,
            'means': self.means.tolist(),
            'weights': self.weights.tolist(),
            'std': self.std,
            'levels': self.levels,
            'seed': self.seed,
        }

    @staticmethod
    def from_json(src: dict) -> 'DatasetSpec':
        kind = DatasetKind(src['kind'])
        if kind is DatasetKind.STANDARD_NORMAL:
            return DatasetSpec.standard_normal(int(src['dim']), int(src['levels']), int(src['seed']))
        means = np.asarray(src['means'], dtype=np.float64).reshape(-1, int(src['dim']))
        return DatasetSpec(kind, int(src['dim']), means, np.asarray(src['weights'], dtype=np.float64),
                           float(src['std']), int(src['levels']), int(src['seed'])).validate()


PRESETS = ('one-atom', 'two-atom', 'cube', 'mixture', 'standard-normal')


def preset(name: str, dim: int, levels: int = config.LEVELS, seed: int = 0) -> DatasetSpec:
    '''
    named datasets of the command line
    '''
    match name:
        case 'one-atom':
            return DatasetSpec.point_set(np.full((1, dim), 0.5), levels=levels, seed=seed)
        case 'two-atom':
            return DatasetSpec.point_set(np.stack([np.full(dim, -0.5), np.full(dim, 0.5)]),
                                         levels=levels, seed=seed)
        case 'cube':
            # one bit per dimension
            if dim > 12:
                raise DomainError(f'cube dataset has 2^{dim} atoms')
            corners = np.array(list(itertools.product((-0.5, 0.5), repeat=dim)))
            return DatasetSpec.point_set(corners, levels=levels, seed=seed)
        case 'mixture':
            return DatasetSpec.gaussian_mixture(np.stack([np.full(dim, -0.5), np.full(dim, 0.5)]), 0.1,
                                                levels=levels, seed=seed)
        case 'standard-normal':
            return DatasetSpec.standard_normal(dim, levels, seed)
        case _:
            raise DomainError(f'unknown dataset {name}: choose from {", ".join(PRESETS)}')


def generate(spec: DatasetSpec, count: int) -> Tuple[np.ndarray, np.ndarray]:
    '''
    (continuous bin centers, integer levels), both (count, n)
    '''
    spec.validate()
    if count < 1:
        raise DomainError(f'count must be >= 1: {count}')
    rng = stream(spec.seed, Role.DATA)
    match spec.kind:
        case DatasetKind.POINT_SET:
            index = rng.choice(len(spec.means), size=count, p=spec.weights)
            raw = spec.means[index]
        case DatasetKind.GAUSSIAN_MIXTURE:
            index = rng.choice(len(spec.means), size=count, p=spec.weights)
            raw = spec.means[index] + spec.std * rng.standard_normal((count, spec.dim))
        case DatasetKind.STANDARD_NORMAL:
            raw = rng.standard_normal((count, spec.dim))
        case _:
            raise NotImplementedError(spec.kind)
    levels = quantize(np.clip(raw, -1.0, 1.0), spec.levels)
    LOGGER.debug(f'{spec.kind.value}: {count} x {spec.dim}, r={spec.levels}')
    return dequantize(levels, spec.levels), levels


def empirical_entropy_bits_per_dim(levels) -> float:
    '''
    plug-in entropy of the observed level tuples, bits per dimension
    '''
    levels = np.atleast_2d(np.asarray(levels))
    if levels.size == 0:
        raise DomainError('empty dataset')
    _, counts = np.unique(levels, axis=0, return_counts=True)
    return float(entropy(counts, base=2)) / levels.shape[1]


class DataView(Enum):
    LEVELS = 'levels'
    CONTINUOUS = 'continuous'


def write_csv(path: pathlib.Path, matrix: np.ndarray, view: DataView, dim: Optional[int] = None):
    matrix = np.atleast_2d(np.asarray(matrix))
    dim = dim if dim is not None else matrix.shape[1]
    with path.open('w', newline='', encoding='utf-8') as w:
        writer = csv.writer(w)
        writer.writerow([f'd{i}' for i in range(dim)])
        for row in matrix:
            match view:
                case DataView.LEVELS:
                    writer.writerow([int(v) for v in row])
                case DataView.CONTINUOUS:
                    writer.writerow([repr(float(v)) for v in row])
