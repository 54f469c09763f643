'''
Encoder distributions q(mu_lambda | x, lambda).

The latent prior is N_P(0, gamma0). gamma0 = lambda0 is the BSI choice,
gamma0 = INFINITY with lambda0 = 1 recovers BFN.
'''
from typing import NamedTuple, Optional, Union
import numpy as np
from . import config
from .belief import (GaussianParams, Precision, INFINITY, as_vector,
                     parse_precision, precision_to_json)
from .errors import DomainError, check_precision


class EncoderConfig(NamedTuple):
    lambda0: float = config.LAMBDA0
    # None means gamma0 = lambda0
    gamma0: Optional[Precision] = None

    @staticmethod
    def bsi(lambda0: float = config.LAMBDA0) -> 'EncoderConfig':
        return EncoderConfig(lambda0, lambda0)

    @staticmethod
    def bfn() -> 'EncoderConfig':
        return EncoderConfig(1.0, INFINITY)

    @property
    def prior_precision(self) -> Precision:
        return self.lambda0 if self.gamma0 is None else self.gamma0

    def validate(self) -> 'EncoderConfig':
        check_precision('lambda0', self.lambda0)
        gamma0 = self.prior_precision
        if gamma0 is not INFINITY:
            check_precision('gamma0', gamma0)  # type: ignore
            if gamma0 < self.lambda0:  # type: ignore
                raise DomainError(f'gamma0 {gamma0} < lambda0 {self.lambda0}')
        return self

    def to_json(self) -> dict:
        return {'lambda0': self.lambda0, 'gamma0': precision_to_json(self.prior_precision)}

    @staticmethod
    def from_json(src: dict) -> 'EncoderConfig':
        return EncoderConfig(float(src['lambda0']), parse_precision(src['gamma0']))


def encoder_coefficients(cfg: EncoderConfig, lam: Union[float, np.ndarray]):
    '''
    (mean coefficient, variance) of the encoder, broadcast over lam
    '''
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < cfg.lambda0):
        raise DomainError(f'lambda below lambda0 {cfg.lambda0}')
    alpha = lam - cfg.lambda0
    gamma0 = cfg.prior_precision
    if gamma0 is INFINITY:
        spread = alpha
    elif gamma0 == cfg.lambda0:
        # alpha + lambda0^2 / lambda0 is lambda itself
        spread = lam
    else:
        spread = alpha + cfg.lambda0 * cfg.lambda0 / gamma0  # type: ignore
    return alpha / lam, spread / (lam * lam)


def encoder_params(cfg: EncoderConfig, x, lam: float) -> GaussianParams:
    x = as_vector(x)
    coeff, variance = encoder_coefficients(cfg.validate(), lam)
    mean = float(coeff) * x
    if cfg.prior_precision == cfg.lambda0:
        return GaussianParams(mean, float(lam))
    if variance == 0.0:
        return GaussianParams(mean, INFINITY)
    return GaussianParams(mean, float(lam * lam / (lam - cfg.lambda0 + _prior_spread(cfg))))


def _prior_spread(cfg: EncoderConfig) -> float:
    gamma0 = cfg.prior_precision
    if gamma0 is INFINITY:
        return 0.0
    return cfg.lambda0 * cfg.lambda0 / gamma0  # type: ignore


def encode(cfg: EncoderConfig, x: np.ndarray, lam, noise: np.ndarray) -> np.ndarray:
    '''
    mu = ((lambda - lambda0) / lambda) x + std * noise, batched over rows of x
    '''
    coeff, variance = encoder_coefficients(cfg, lam)
    if np.ndim(coeff) > 0 and np.ndim(x) > 1:
        coeff = coeff[..., None]
        variance = variance[..., None]
    return coeff * x + np.sqrt(variance) * noise


def sample_encoder(cfg: EncoderConfig, x, lam: float, rng: np.random.Generator) -> np.ndarray:
    x = as_vector(x)
    cfg.validate()
    return encode(cfg, x, lam, rng.standard_normal(x.shape))
