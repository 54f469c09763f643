'''
Gaussian belief algebra.

All precisions are isotropic scalars. Vectors are numpy arrays in normalized
data units.
'''
from typing import Union
from dataclasses import dataclass
from enum import Enum
import math
import numpy as np
from .errors import DomainError, ContractViolation, check_precision


class Infinity(Enum):
    '''
    precision of a point mass. kept apart from float('inf') so that formulas
    branch on it instead of producing nan.
    '''
    INFINITY = 'inf'

    def __str__(self) -> str:
        return 'inf'


INFINITY = Infinity.INFINITY

Precision = Union[float, Infinity]


def parse_precision(value: Union[str, float, None]) -> Precision:
    match value:
        case Infinity():
            return value
        case str() if value.strip().lower() in ('inf', 'infinity', '+inf'):
            return INFINITY
        case float() if math.isinf(value) and value > 0:
            return INFINITY
        case _:
            return float(value)  # type: ignore


def precision_to_json(value: Precision) -> Union[str, float]:
    if value is INFINITY:
        return 'inf'
    return float(value)  # type: ignore


def as_vector(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str):
    if a.shape != b.shape:
        raise ContractViolation(f'{what}: shape {a.shape} != {b.shape}')


@dataclass(frozen=True, eq=False)
class BeliefState:
    mean: np.ndarray
    precision: float

    def __post_init__(self):
        object.__setattr__(self, 'mean', as_vector(self.mean))
        check_precision('belief precision', self.precision)
        if not np.all(np.isfinite(self.mean)):
            raise DomainError('belief mean has non-finite entries')

    def __str__(self) -> str:
        return f'Belief(mu={self.mean}, lambda={self.precision:g})'


@dataclass(frozen=True, eq=False)
class Measurement:
    value: np.ndarray
    precision: float

    def __post_init__(self):
        object.__setattr__(self, 'value', as_vector(self.value))
        check_precision('measurement precision', self.precision)


@dataclass(frozen=True, eq=False)
class GaussianParams:
    '''
    N_P(mean, precision). ``precision`` is INFINITY only for a point mass.
    '''
    mean: np.ndarray
    precision: Precision

    def __post_init__(self):
        object.__setattr__(self, 'mean', as_vector(self.mean))
        if self.precision is not INFINITY:
            check_precision('precision', self.precision)  # type: ignore

    @property
    def variance(self) -> float:
        if self.precision is INFINITY:
            return 0.0
        return 1.0 / self.precision  # type: ignore

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def __str__(self) -> str:
        return f'N_P({self.mean}, {self.precision})'


def posterior_update(belief: BeliefState, m: Measurement) -> BeliefState:
    check_same_shape(belief.mean, m.value, 'posterior_update')
    lam = belief.precision + m.precision
    mean = (belief.precision * belief.mean + m.precision * m.value) / lam
    return BeliefState(mean, lam)


def update_marginal(belief: BeliefState, x, alpha: float) -> GaussianParams:
    '''
    distribution of the updated mean when y ~ N_P(x, alpha) is marginalized out
    '''
    check_precision('alpha', alpha)
    x = as_vector(x)
    check_same_shape(belief.mean, x, 'update_marginal')
    lam = belief.precision + alpha
    mean = (belief.precision * belief.mean + alpha * x) / lam
    return GaussianParams(mean, lam * lam / alpha)


def compose_update_marginals(belief: BeliefState, x, alpha1: float, alpha2: float) -> GaussianParams:
    '''
    marginal of two consecutive updates. collapses to a single update with
    alpha1 + alpha2.
    '''
    check_precision('alpha1', alpha1)
    check_precision('alpha2', alpha2)
    return update_marginal(belief, x, alpha1 + alpha2)


def kl_update_marginals(belief: BeliefState, x, x_hat, alpha: float) -> float:
    '''
    KL between the update marginals for x and x_hat
    '''
    check_precision('alpha', alpha)
    x = as_vector(x)
    x_hat = as_vector(x_hat)
    check_same_shape(x, x_hat, 'kl_update_marginals')
    check_same_shape(belief.mean, x, 'kl_update_marginals')
    d = x - x_hat
    return 0.5 * alpha * float(np.dot(d.ravel(), d.ravel()))


def noising_conditional(x, mu_next, lambda0: float, gamma0: Precision,
                        alpha: float, alpha_next: float) -> GaussianParams:
    '''
    p(mu | mu', x): reverse of one update of precision alpha_next, starting
    from a belief of precision lambda0 + alpha.
    '''
    check_precision('lambda0', lambda0)
    check_precision('alpha', alpha)
    check_precision('alpha_next', alpha_next)
    x = as_vector(x)
    mu_next = as_vector(mu_next)
    check_same_shape(x, mu_next, 'noising_conditional')

    lam = lambda0 + alpha
    lam_next = lam + alpha_next
    if gamma0 is INFINITY:
        xi = lam * lam * (1.0 / alpha + 1.0 / alpha_next)
        x_coeff = 0.0
    else:
        check_precision('gamma0', gamma0)  # type: ignore
        spread = alpha + lambda0 * lambda0 / gamma0  # type: ignore
        xi = lam * lam * (1.0 / spread + 1.0 / alpha_next)
        x_coeff = lam * (alpha / spread - 1.0)

    signal = lam * lam_next / alpha_next * mu_next
    if x_coeff != 0.0:
        signal = signal + x_coeff * x
    return GaussianParams(signal / xi, xi)
