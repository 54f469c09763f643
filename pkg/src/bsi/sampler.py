'''
Sampling by iterated posterior inference.

Each sample owns one noise stream with k + 1 rows: row 0 draws the initial
belief mean, row i the measurement noise of step i.
'''
from typing import Callable, List, NamedTuple, Optional
from enum import Enum
import csv
import logging
import math
import pathlib
import struct
import numpy as np
from . import config
from .belief import BeliefState
from .errors import DomainError
from .formats import BytesReader
from .parallel import ordered_map
from .rng import Role, stream
from .schedule import PrecisionSchedule

LOGGER = logging.getLogger(__name__)

# f(mu (b, n), lambda (b,)) -> x_hat (b, n)
PredictorFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class SamplerMode(Enum):
    BSI = 'bsi'
    BFN = 'bfn'


class SamplerConfig(NamedTuple):
    schedule: PrecisionSchedule = PrecisionSchedule()
    mode: SamplerMode = SamplerMode.BSI
    seed: int = 0

    def validate(self) -> 'SamplerConfig':
        self.schedule.validate()
        if self.mode is SamplerMode.BFN and self.schedule.lambda0 != 1.0:
            raise DomainError(f'bfn mode needs lambda0 = 1: {self.schedule.lambda0}')
        return self

    def to_json(self) -> dict:
        return {
            'lambda0': self.schedule.lambda0,
            'alpha_m': self.schedule.alpha_m,
            'k': self.schedule.k,
            'schedule': self.schedule.kind.value,
            'mode': self.mode.value,
            'seed': self.seed,
        }


class CounterNoise:
    '''
    standard normal rows keyed by (seed, sample index)
    '''

    def __init__(self, seed: int) -> None:
        self.seed = seed

    def __call__(self, sample_index: int, k: int, n: int) -> np.ndarray:
        return stream(self.seed, sample_index, Role.MEASURE).standard_normal((k + 1, n))


# (sample_index, k, n) -> (k + 1, n) standard normal rows
NoiseSource = Callable[[int, int, int], np.ndarray]


class TrajectoryStep(NamedTuple):
    belief: BeliefState
    x_hat: np.ndarray


def _run(predictor: PredictorFn, cfg: SamplerConfig, eps: np.ndarray,
         trace: Optional[List[TrajectoryStep]] = None) -> np.ndarray:
    '''
    eps: (b, k + 1, n)
    '''
    schedule = cfg.schedule
    lambdas = schedule.lambdas()
    alphas = schedule.alphas()
    b = eps.shape[0]
    match cfg.mode:
        case SamplerMode.BSI:
            mu = math.sqrt(1.0 / schedule.lambda0) * eps[:, 0]
        case SamplerMode.BFN:
            mu = np.zeros_like(eps[:, 0])
        case _:
            raise NotImplementedError(cfg.mode)

    for i in range(1, schedule.k + 1):
        lam_prev = lambdas[i - 1]
        x_hat = predictor(mu, np.full(b, lam_prev))
        if trace is not None:
            trace.append(TrajectoryStep(BeliefState(mu[0].copy(), float(lam_prev)), x_hat[0].copy()))
        alpha = alphas[i - 1]
        y = x_hat + math.sqrt(1.0 / alpha) * eps[:, i]
        mu = (lam_prev * mu + alpha * y) / lambdas[i]

    x_hat = predictor(mu, np.full(b, lambdas[-1]))
    if trace is not None:
        trace.append(TrajectoryStep(BeliefState(mu[0].copy(), float(lambdas[-1])), x_hat[0].copy()))
    return x_hat


def _dim(predictor) -> int:
    dim = getattr(predictor, 'dim', None)
    if dim is None:
        raise DomainError('predictor has no dim')
    return int(dim)


def generate(predictor: PredictorFn, cfg: SamplerConfig, num_samples: int,
             noise: Optional[NoiseSource] = None, threads: int = 1,
             chunk: int = config.SAMPLE_CHUNK, dim: Optional[int] = None) -> np.ndarray:
    '''
    (num_samples, n) final predictions x_hat* = f(mu_k, lambda_k)
    '''
    cfg.validate()
    if num_samples < 0:
        raise DomainError(f'negative sample count: {num_samples}')
    n = dim if dim is not None else _dim(predictor)
    k = cfg.schedule.k
    if noise is None:
        noise = CounterNoise(cfg.seed)

    def run_chunk(begin: int) -> np.ndarray:
        end = min(begin + chunk, num_samples)
        eps = np.stack([noise(i, k, n) for i in range(begin, end)])
        return _run(predictor, cfg, eps)

    if num_samples == 0:
        return np.zeros((0, n))
    LOGGER.debug(f'generate {num_samples} samples, k={k}, mode={cfg.mode.value}')
    parts = ordered_map(run_chunk, range(0, num_samples, chunk), threads)
    return np.concatenate(parts)


def belief_trajectory(predictor: PredictorFn, cfg: SamplerConfig, sample_index: int = 0,
                      noise: Optional[NoiseSource] = None, dim: Optional[int] = None) -> List[TrajectoryStep]:
    '''
    the k + 1 beliefs (mu_i, lambda_i) of one sample and the prediction made
    from each
    '''
    cfg.validate()
    n = dim if dim is not None else _dim(predictor)
    if noise is None:
        noise = CounterNoise(cfg.seed)
    trace: List[TrajectoryStep] = []
    _run(predictor, cfg, noise(sample_index, cfg.schedule.k, n)[None], trace)
    return trace


class SampleFormat(Enum):
    CSV = 'csv'
    BIN = 'bin'


def write_samples(path: pathlib.Path, samples: np.ndarray, fmt: SampleFormat, dim: int):
    samples = np.asarray(samples, dtype=np.float64).reshape(-1, dim)
    match fmt:
        case SampleFormat.CSV:
            with path.open('w', newline='', encoding='utf-8') as w:
                writer = csv.writer(w)
                writer.writerow([f'd{i}' for i in range(dim)])
                for row in samples:
                    writer.writerow([repr(float(v)) for v in row])
        case SampleFormat.BIN:
            with path.open('wb') as w:
                w.write(struct.pack('<Q', len(samples)))
                w.write(samples.astype('<f8').tobytes())
        case _:
            raise NotImplementedError(fmt)


def read_samples_bin(path: pathlib.Path, dim: int) -> np.ndarray:
    r = BytesReader(path.read_bytes())
    count = r.uint64('sample count')
    return r.float64_array(count * dim, 'samples').reshape(count, dim)
