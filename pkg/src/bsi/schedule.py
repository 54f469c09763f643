'''
Precision schedules, the lambda <-> t encoding and the log-uniform proposal.
'''
from typing import NamedTuple
from enum import Enum
import math
import numpy as np
from . import config
from .errors import DomainError, ContractViolation, check_precision

# relative slack for lambda values that went through exp(log(.))
RANGE_SLACK = 1e-9


class ScheduleKind(Enum):
    LOG = 'log'
    LINEAR = 'linear'


class PrecisionSchedule(NamedTuple):
    lambda0: float = config.LAMBDA0
    alpha_m: float = config.ALPHA_M
    k: int = config.SAMPLE_STEPS
    kind: ScheduleKind = ScheduleKind.LOG

    @property
    def lambda_m(self) -> float:
        return self.lambda0 + self.alpha_m

    def validate(self) -> 'PrecisionSchedule':
        check_precision('lambda0', self.lambda0)
        check_precision('alpha_m', self.alpha_m)
        if self.k < 1:
            raise DomainError(f'step count must be >= 1: {self.k}')
        return self

    def lambdas(self) -> np.ndarray:
        '''
        lambda_0 .. lambda_k, k + 1 values with exact endpoints
        '''
        self.validate()
        i = np.arange(self.k + 1, dtype=np.float64)
        match self.kind:
            case ScheduleKind.LOG:
                lo = math.log(self.lambda0)
                hi = math.log(self.lambda_m)
                values = np.exp(lo + (hi - lo) * i / self.k)
            case ScheduleKind.LINEAR:
                values = self.lambda0 + self.alpha_m * i / self.k
            case _:
                raise NotImplementedError(self.kind)
        values[0] = self.lambda0
        values[-1] = self.lambda_m
        return values

    def alphas(self) -> np.ndarray:
        '''
        per-step measurement precisions alpha_1 .. alpha_k
        '''
        match self.kind:
            case ScheduleKind.LINEAR:
                self.validate()
                return np.full(self.k, self.alpha_m / self.k)
            case _:
                return np.diff(self.lambdas())

    def lambda_at(self, i: int) -> float:
        if not 0 <= i <= self.k:
            raise ContractViolation(f'step {i} outside [0, {self.k}]')
        return float(self.lambdas()[i])

    def limits(self) -> 'ProposalDistribution':
        return ProposalDistribution(self.lambda0, self.lambda_m)


def t_of_lambda(lam, lambda0: float, lambda_m: float):
    '''
    log-uniform CDF, maps [lambda0, lambda_m] onto [0, 1]
    '''
    lam_arr = np.asarray(lam, dtype=np.float64)
    lo = lambda0 * (1 - RANGE_SLACK)
    hi = lambda_m * (1 + RANGE_SLACK)
    if np.any(lam_arr < lo) or np.any(lam_arr > hi):
        raise DomainError(f'lambda outside [{lambda0:g}, {lambda_m:g}]')
    t = (np.log(lam_arr) - math.log(lambda0)) / (math.log(lambda_m) - math.log(lambda0))
    t = np.clip(t, 0.0, 1.0)
    if np.ndim(lam) == 0:
        return float(t)
    return t


def lambda_of_t(t, lambda0: float, lambda_m: float):
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0) or np.any(t_arr > 1):
        raise DomainError('t outside [0, 1]')
    # exact at both ends
    lam = np.where(t_arr == 1.0, lambda_m,
                   np.minimum(lambda0 * np.exp((math.log(lambda_m) - math.log(lambda0)) * t_arr), lambda_m))
    if np.ndim(t) == 0:
        return float(lam)
    return lam


class ProposalDistribution(NamedTuple):
    '''
    Log-Uniform(lambda0, lambda_m), p(lambda) proportional to 1 / lambda
    '''
    lambda0: float = config.LAMBDA0
    lambda_m: float = config.LAMBDA0 + config.ALPHA_M

    @property
    def log_range(self) -> float:
        return math.log(self.lambda_m) - math.log(self.lambda0)

    def validate(self) -> 'ProposalDistribution':
        check_precision('lambda0', self.lambda0)
        check_precision('lambda_m', self.lambda_m)
        if not self.lambda_m > self.lambda0:
            raise DomainError(f'lambda_m {self.lambda_m} <= lambda0 {self.lambda0}')
        return self


def sample_proposal(p: ProposalDistribution, u):
    '''
    inverse-CDF draw for u in [0, 1)
    '''
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any(u_arr < 0) or np.any(u_arr >= 1):
        raise DomainError('u outside [0, 1)')
    # exact at u = 0, the clip only guards the upper end
    lam = np.clip(p.lambda0 * np.exp(p.log_range * u_arr), p.lambda0, p.lambda_m)
    if np.ndim(u) == 0:
        return float(lam)
    return lam


def proposal_density(p: ProposalDistribution, lam):
    lam_arr = np.asarray(lam, dtype=np.float64)
    if np.any(lam_arr < p.lambda0 * (1 - RANGE_SLACK)) or np.any(lam_arr > p.lambda_m * (1 + RANGE_SLACK)):
        raise DomainError(f'lambda outside [{p.lambda0:g}, {p.lambda_m:g}]')
    density = 1.0 / (lam_arr * p.log_range)
    if np.ndim(lam) == 0:
        return float(density)
    return density


def uniform_density(p: ProposalDistribution) -> float:
    return 1.0 / (p.lambda_m - p.lambda0)


def low_discrepancy_batch(b: int, delta: float) -> np.ndarray:
    '''
    t_i = (i - 1) / b + delta mod 1
    '''
    if b < 1:
        raise DomainError(f'batch size must be >= 1: {b}')
    if not 0 <= delta < 1:
        raise DomainError(f'delta outside [0, 1): {delta}')
    t = np.arange(b, dtype=np.float64) / b + delta
    t = np.mod(t, 1.0)
    # mod can round up to exactly 1.0
    t[t >= 1.0] = 0.0
    return t
