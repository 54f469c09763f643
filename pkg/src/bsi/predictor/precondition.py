'''
Skip-connection preconditioning f = c_skip mu + c_out F(c_in mu, t).

c_in and c_out make the network input and its training target unit-variance
for unit-variance data, c_skip minimizes c_out.
'''
from typing import NamedTuple, Union
import numpy as np
from ..errors import DomainError, ContractViolation


class PreconditionCoeffs(NamedTuple):
    c_skip: Union[float, np.ndarray]
    c_out: Union[float, np.ndarray]
    c_in: Union[float, np.ndarray]
    kappa: Union[float, np.ndarray]


def precondition_coeffs(lam, lambda0: float) -> PreconditionCoeffs:
    if lambda0 < 0:
        raise DomainError(f'lambda0 must be >= 0: {lambda0}')
    lam_arr = np.asarray(lam, dtype=np.float64)
    if np.any(lam_arr <= 0) or np.any(lam_arr < lambda0):
        raise DomainError(f'lambda must be positive and >= lambda0 {lambda0}')
    alpha = lam_arr - lambda0
    kappa = 1.0 + alpha * alpha / lam_arr
    coeffs = PreconditionCoeffs(alpha / kappa, np.sqrt(1.0 / kappa), np.sqrt(lam_arr / kappa), kappa)
    if np.ndim(lam) == 0:
        return PreconditionCoeffs(*(float(c) for c in coeffs))
    return coeffs


def target_variance(c_skip: float, lam: float, lambda0: float) -> float:
    '''
    Var[x - c_skip mu] for unit-variance x and mu from the BSI encoder, i.e.
    the c_out^2 that a given c_skip requires
    '''
    a = (lam - lambda0) / lam
    mu_variance = a * a + 1.0 / lam
    return c_skip * c_skip * mu_variance - 2.0 * c_skip * a + 1.0


def apply_preconditioning(backbone_output: np.ndarray, mu: np.ndarray, coeffs: PreconditionCoeffs) -> np.ndarray:
    backbone_output = np.asarray(backbone_output, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if backbone_output.shape != mu.shape:
        raise ContractViolation(f'backbone output {backbone_output.shape} != mu {mu.shape}')
    c_skip = coeffs.c_skip
    c_out = coeffs.c_out
    if np.ndim(c_skip) > 0 and mu.ndim > 1:
        c_skip = np.asarray(c_skip)[..., None]
        c_out = np.asarray(c_out)[..., None]
    return c_skip * mu + c_out * backbone_output
