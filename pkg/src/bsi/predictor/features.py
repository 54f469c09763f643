from typing import NamedTuple
import math
import numpy as np
from .. import config
from ..errors import DomainError


class FeatureConfig(NamedTuple):
    n_min: int = config.N_MIN
    n_max: int = config.N_MAX
    embed_dim: int = config.EMBED_DIM

    def validate(self) -> 'FeatureConfig':
        if self.n_min > self.n_max:
            raise DomainError(f'n_min {self.n_min} > n_max {self.n_max}')
        if self.embed_dim < 2 or self.embed_dim % 2:
            raise DomainError(f'embed_dim must be even and >= 2: {self.embed_dim}')
        return self

    @property
    def expansion(self) -> int:
        return 1 + 2 * (self.n_max - self.n_min + 1)

    def to_json(self) -> dict:
        return self._asdict()

    @staticmethod
    def from_json(src: dict) -> 'FeatureConfig':
        return FeatureConfig(int(src['n_min']), int(src['n_max']), int(src['embed_dim']))


def fourier_features(mu: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    '''
    [mu, sin(2^i pi mu) ..., cos(2^i pi mu) ...] for i = n_min .. n_max,
    concatenated along the last axis
    '''
    mu = np.asarray(mu, dtype=np.float64)
    scales = np.pi * 2.0 ** np.arange(cfg.n_min, cfg.n_max + 1, dtype=np.float64)
    phase = mu[..., None, :] * scales[:, None]
    shape = mu.shape[:-1] + (-1,)
    return np.concatenate([
        mu,
        np.sin(phase).reshape(shape),
        np.cos(phase).reshape(shape),
    ], axis=-1)


def embedding_frequencies(cfg: FeatureConfig) -> np.ndarray:
    half = cfg.embed_dim // 2
    if half == 1:
        return np.ones(1)
    return np.exp(np.linspace(0.0, math.log(config.EMBED_MAX_FREQUENCY), half))


def precision_embedding(t, cfg: FeatureConfig) -> np.ndarray:
    '''
    sinusoidal position encoding of t, interleaved (sin, cos) pairs
    '''
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > 1):
        raise DomainError('t outside [0, 1]')
    phase = t[..., None] * embedding_frequencies(cfg)
    out = np.empty(t.shape + (cfg.embed_dim,))
    out[..., 0::2] = np.sin(phase)
    out[..., 1::2] = np.cos(phase)
    return out
