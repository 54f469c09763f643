'''
ELBO estimators.

Everything is accounted in nats; bits only appear in EvalReport.bpd.
'''
from typing import Callable, List, NamedTuple, Optional, Tuple
from enum import Enum
import logging
import math
import numpy as np
from scipy import integrate
from scipy.special import log_ndtr, ndtr
from . import config
from .encoder import EncoderConfig, encode
from .errors import DomainError, ContractViolation, check_precision
from .parallel import ordered_map
from .rng import Role, stream
from .schedule import (PrecisionSchedule, ProposalDistribution, sample_proposal,
                       proposal_density, uniform_density, lambda_of_t)

LOGGER = logging.getLogger(__name__)

LOG2E = 1.0 / math.log(2.0)

# f(mu (b, n), lambda (b,)) -> x_hat (b, n)
PredictorFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class ProposalKind(Enum):
    LOG_UNIFORM = 'log-uniform'
    UNIFORM = 'uniform'


class ReconConfig(NamedTuple):
    alpha_r: float = config.ALPHA_R
    levels: int = config.LEVELS

    def validate(self) -> 'ReconConfig':
        check_precision('alpha_r', self.alpha_r)
        if self.levels < 2:
            raise DomainError(f'levels must be >= 2: {self.levels}')
        return self

    @property
    def half_range(self) -> float:
        '''
        integer levels per normalized unit
        '''
        return (self.levels - 1) / 2.0

    def to_levels_scale(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x) + 1.0) * self.half_range

    def to_normalized(self, levels: np.ndarray) -> np.ndarray:
        return np.asarray(levels, dtype=np.float64) / self.half_range - 1.0


class EvalReport(NamedTuple):
    lm_estimate: float
    lm_std_error: float
    lr_discretized: float
    bpd: float
    num_mc_measure: int
    num_mc_recon: int
    dim: int
    num_samples: int

    COLUMNS = ('bpd', 'lm_nats', 'lm_se', 'lr_nats', 'n', 'num_samples',
               'num_mc_measure', 'num_mc_recon')

    def row(self) -> dict:
        return {
            'bpd': self.bpd,
            'lm_nats': self.lm_estimate,
            'lm_se': self.lm_std_error,
            'lr_nats': self.lr_discretized,
            'n': self.dim,
            'num_samples': self.num_samples,
            'num_mc_measure': self.num_mc_measure,
            'num_mc_recon': self.num_mc_recon,
        }

    def to_json(self) -> dict:
        return self._asdict()


def to_bpd(lm_nats: float, lr_nats: float, dim: int) -> float:
    return (lm_nats + lr_nats) * LOG2E / dim


def _rows(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=np.float64))


def _single(x, what: str) -> np.ndarray:
    '''
    one data sample as a vector, a (1, n) matrix is accepted
    '''
    rows = _rows(x)
    if rows.ndim != 2 or len(rows) != 1:
        raise ContractViolation(f'{what} takes one data sample, got shape {np.shape(x)}')
    return rows[0]


def _mean_se(values: np.ndarray) -> Tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        return float(values.mean()), float('nan')
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


def _encoder(proposal: ProposalDistribution, encoder: Optional[EncoderConfig]) -> EncoderConfig:
    if encoder is None:
        return EncoderConfig.bsi(proposal.lambda0)
    if encoder.lambda0 != proposal.lambda0:
        raise ContractViolation(f'encoder lambda0 {encoder.lambda0} != proposal lambda0 {proposal.lambda0}')
    return encoder.validate()


def loss_terms(predictor: PredictorFn, x: np.ndarray, lam: np.ndarray, noise: np.ndarray,
               proposal: ProposalDistribution, encoder: Optional[EncoderConfig] = None):
    '''
    batched core of the training loss: returns (loss, mu, x_hat) with
    loss_i = (log lambda_M - log lambda_0) * lambda_i * |x_i - f(mu_i, lambda_i)|^2
    '''
    enc = _encoder(proposal, encoder)
    mu = encode(enc, x, lam, noise)
    x_hat = predictor(mu, lam)
    d = x - x_hat
    loss = proposal.log_range * lam * np.einsum('bn,bn->b', d, d)
    return loss, mu, x_hat


def loss_mc(predictor: PredictorFn, x, t: float, rng: np.random.Generator,
            proposal: ProposalDistribution = ProposalDistribution(),
            encoder: Optional[EncoderConfig] = None) -> float:
    '''
    single-sample estimate of the training loss. Its expectation over t is
    2 L_M^inf; callers divide by n for a per-dimension loss.
    '''
    x = _single(x, 'loss_mc')[None, :]
    lam = np.array([sample_proposal(proposal, t)])
    loss, _, _ = loss_terms(predictor, x, lam, rng.standard_normal(x.shape), proposal, encoder)
    return float(loss[0])


def measurement_integrand(predictor: PredictorFn, x: np.ndarray, u: np.ndarray, noise: np.ndarray,
                          proposal: ProposalDistribution, encoder: Optional[EncoderConfig] = None,
                          kind: ProposalKind = ProposalKind.LOG_UNIFORM) -> np.ndarray:
    '''
    importance-weighted draws of 1/2 h(lambda) / p(lambda), one per row
    '''
    x = _rows(x)
    x = np.broadcast_to(x, noise.shape)
    match kind:
        case ProposalKind.LOG_UNIFORM:
            lam = sample_proposal(proposal, u)
            weight = 1.0 / proposal_density(proposal, lam)
        case ProposalKind.UNIFORM:
            lam = proposal.lambda0 + u * (proposal.lambda_m - proposal.lambda0)
            weight = np.full(len(u), 1.0 / uniform_density(proposal))
        case _:
            raise NotImplementedError(kind)
    enc = _encoder(proposal, encoder)
    mu = encode(enc, x, lam, noise)
    d = x - predictor(mu, lam)
    return 0.5 * weight * np.einsum('bn,bn->b', d, d)


def lm_infinity(predictor: PredictorFn, x, num_mc: int, rng: np.random.Generator,
                proposal: ProposalDistribution = ProposalDistribution(),
                encoder: Optional[EncoderConfig] = None,
                kind: ProposalKind = ProposalKind.LOG_UNIFORM) -> Tuple[float, float]:
    '''
    importance-sampled L_M^inf, (estimate, standard error)
    '''
    if num_mc < 2:
        raise DomainError(f'num_mc must be >= 2: {num_mc}')
    x = _rows(x)
    if len(x) not in (1, num_mc):
        raise ContractViolation(f'lm_infinity takes one row or num_mc rows, got {len(x)}')
    u = rng.random(num_mc)
    noise = rng.standard_normal((num_mc, x.shape[-1]))
    return _mean_se(measurement_integrand(predictor, x, u, noise, proposal, encoder, kind))


def lm_finite_k(predictor: PredictorFn, x, schedule: PrecisionSchedule, num_mc: int,
                rng: np.random.Generator, encoder: Optional[EncoderConfig] = None,
                chunk: int = 4096) -> Tuple[float, float]:
    '''
    1/2 sum_i alpha_i E|x - x_hat(mu_{i-1}, lambda_{i-1})|^2, one encoder draw
    per step per round. With several rows in x, round r uses row r mod rows.
    '''
    if num_mc < 1:
        raise DomainError(f'num_mc must be >= 1: {num_mc}')
    rows = _rows(x)
    lambdas = schedule.lambdas()[:-1]
    alphas = schedule.alphas()
    enc = _encoder(schedule.limits(), encoder)
    rounds = np.zeros(num_mc)
    for r in range(num_mc):
        x = rows[r % len(rows)]
        total = 0.0
        for begin in range(0, schedule.k, chunk):
            lam = lambdas[begin:begin + chunk]
            noise = rng.standard_normal((len(lam), x.shape[-1]))
            xs = np.broadcast_to(x, noise.shape)
            d = xs - predictor(encode(enc, xs, lam, noise), lam)
            total += float(np.dot(alphas[begin:begin + chunk], np.einsum('bn,bn->b', d, d)))
        rounds[r] = 0.5 * total
    if num_mc == 1:
        return float(rounds[0]), float('nan')
    return _mean_se(rounds)


def estimate_h(predictor: PredictorFn, xs, lam: float, rng: np.random.Generator,
               proposal: ProposalDistribution = ProposalDistribution(),
               encoder: Optional[EncoderConfig] = None) -> Tuple[float, float]:
    '''
    h(lambda) = E|x - x_hat_lambda|^2 with one encoder draw per row of xs
    '''
    xs = _rows(xs)
    lam_arr = np.full(len(xs), float(lam))
    mu = encode(_encoder(proposal, encoder), xs, lam_arr, rng.standard_normal(xs.shape))
    d = xs - predictor(mu, lam_arr)
    return _mean_se(np.einsum('bn,bn->b', d, d))


def expected_h_identity(lam, lambda0: float, n: int):
    '''
    E_x[h(lambda)] of the identity predictor for unit-variance data
    '''
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < lambda0):
        raise DomainError(f'lambda below lambda0 {lambda0}')
    value = n * (lambda0 * lambda0 / (lam * lam) + 1.0 / lam)
    return float(value) if value.ndim == 0 else value


def lm_infinity_identity(proposal: ProposalDistribution, n: int) -> float:
    '''
    closed-form 1/2 integral of expected_h_identity over [lambda0, lambda_M]
    '''
    l0 = proposal.lambda0
    lm = proposal.lambda_m
    return 0.5 * n * (l0 * l0 * (1.0 / l0 - 1.0 / lm) + math.log(lm / l0))


def h_ratio_range(proposal: ProposalDistribution, n: int, kind: ProposalKind, points: int = 1000) -> float:
    '''
    max / min of E[h](lambda) / p(lambda) for the identity predictor on a
    log-spaced grid
    '''
    lam = lambda_of_t(np.linspace(0.0, 1.0, points), proposal.lambda0, proposal.lambda_m)
    h = expected_h_identity(lam, proposal.lambda0, n)
    match kind:
        case ProposalKind.LOG_UNIFORM:
            ratio = h / proposal_density(proposal, lam)
        case ProposalKind.UNIFORM:
            ratio = h / uniform_density(proposal)
        case _:
            raise NotImplementedError(kind)
    return float(ratio.max() / ratio.min())


def identity_integrand_std(proposal: ProposalDistribution, n: int, x_sq_norm: float,
                           kind: ProposalKind) -> float:
    '''
    exact standard deviation of a single measurement_integrand draw for the
    identity predictor, BSI encoder and a fixed x with |x|^2 = x_sq_norm
    '''
    l0 = proposal.lambda0

    def moments(lam: float) -> Tuple[float, float]:
        # |x - mu|^2 with x - mu ~ N(c x, 1/lambda), c = lambda0 / lambda
        c2 = (l0 / lam) ** 2 * x_sq_norm
        s2 = 1.0 / lam
        first = c2 + n * s2
        second = first * first + 2.0 * n * s2 * s2 + 4.0 * c2 * s2
        return first, second

    match kind:
        case ProposalKind.LOG_UNIFORM:
            def weight(lam):
                return 1.0 / proposal_density(proposal, lam)
        case ProposalKind.UNIFORM:
            def weight(lam):
                return 1.0 / uniform_density(proposal)
        case _:
            raise NotImplementedError(kind)

    # integrate in log lambda for accuracy across eight decades
    lo = math.log(proposal.lambda0)
    hi = math.log(proposal.lambda_m)

    def mean_part(s):
        lam = math.exp(s)
        return 0.5 * moments(lam)[0] * lam

    def square_part(s):
        lam = math.exp(s)
        return 0.25 * weight(lam) * moments(lam)[1] * lam

    mean = integrate.quad(mean_part, lo, hi, limit=200)[0]
    second = integrate.quad(square_part, lo, hi, limit=200)[0]
    return math.sqrt(max(second - mean * mean, 0.0))


def reconstruction_continuous(predictor: PredictorFn, x, recon: ReconConfig, num_mc: int,
                              rng: np.random.Generator,
                              proposal: ProposalDistribution = ProposalDistribution(),
                              encoder: Optional[EncoderConfig] = None) -> float:
    '''
    E[-log N_P(x | x_hat_{lambda_M}, alpha_R)] in nats
    '''
    if num_mc < 1:
        raise DomainError(f'num_mc must be >= 1: {num_mc}')
    recon.validate()
    x = _single(x, 'reconstruction_continuous')
    n = x.shape[-1]
    noise = rng.standard_normal((num_mc, n))
    xs = np.broadcast_to(x, noise.shape)
    lam = np.full(num_mc, proposal.lambda_m)
    d = xs - predictor(encode(_encoder(proposal, encoder), xs, lam, noise), lam)
    quad = 0.5 * recon.alpha_r * np.einsum('bn,bn->b', d, d)
    return float(0.5 * n * (math.log(2.0 * math.pi) - math.log(recon.alpha_r)) + quad.mean())


def bin_edges(levels: np.ndarray, r: int) -> Tuple[np.ndarray, np.ndarray]:
    '''
    integer-scale bin [l, r] of each level, outermost bins open
    '''
    levels = np.asarray(levels)
    if np.any(levels < 0) or np.any(levels > r - 1) or np.any(levels != np.round(levels)):
        raise DomainError(f'level outside {{0..{r - 1}}}')
    lower = np.where(levels == 0, -np.inf, levels - 0.5)
    upper = np.where(levels == r - 1, np.inf, levels + 0.5)
    return lower, upper


def discretized_log_prob(levels: np.ndarray, mean: np.ndarray, std: float, r: int) -> np.ndarray:
    '''
    log(Phi(r_j) - Phi(l_j)) of N(mean, std^2) on the integer scale
    '''
    lower, upper = bin_edges(levels, r)
    a = (lower - mean) / std
    b = (upper - mean) / std
    # work on the tail that keeps the difference well conditioned
    flip = a > 0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    log_hi = log_ndtr(hi)
    log_lo = log_ndtr(lo)
    with np.errstate(divide='ignore'):
        return log_hi + np.log1p(-np.exp(log_lo - log_hi))


def discretized_probs(mean: float, std: float, r: int) -> np.ndarray:
    '''
    probabilities of all r bins, sums to 1
    '''
    lower, upper = bin_edges(np.arange(r), r)
    return ndtr((upper - mean) / std) - ndtr((lower - mean) / std)


def reconstruction_discretized(predictor: PredictorFn, x_levels, recon: ReconConfig, num_mc: int,
                               rng: np.random.Generator,
                               proposal: ProposalDistribution = ProposalDistribution(),
                               encoder: Optional[EncoderConfig] = None) -> float:
    '''
    E[-log N'_P(x | x_hat_{lambda_M}, alpha_R)] with bins on the integer scale
    '''
    if num_mc < 1:
        raise DomainError(f'num_mc must be >= 1: {num_mc}')
    recon.validate()
    levels = _single(x_levels, 'reconstruction_discretized')
    bin_edges(levels, recon.levels)
    x = recon.to_normalized(levels)
    noise = rng.standard_normal((num_mc, len(x)))
    xs = np.broadcast_to(x, noise.shape)
    lam = np.full(num_mc, proposal.lambda_m)
    x_hat = predictor(encode(_encoder(proposal, encoder), xs, lam, noise), lam)
    std = recon.half_range / math.sqrt(recon.alpha_r)
    log_p = discretized_log_prob(np.broadcast_to(levels, x_hat.shape), recon.to_levels_scale(x_hat), std, recon.levels)
    return float(-log_p.sum(axis=1).mean())


class _SampleTerms(NamedTuple):
    measure: np.ndarray
    recon: float


def bpd(predictor: PredictorFn, dataset_levels, proposal: ProposalDistribution, recon: ReconConfig,
        num_mc_measure: int = config.MC_MEASURE, num_mc_recon: int = config.MC_RECON,
        seed: int = 0, encoder: Optional[EncoderConfig] = None, threads: int = 1) -> EvalReport:
    '''
    mean over the dataset of (L_M^inf + L_R') log2(e) / n. Sample i draws from
    streams keyed by (seed, i, role), so the result does not depend on the
    dataset order pairing or the thread count.
    '''
    levels = np.atleast_2d(np.asarray(dataset_levels))
    if levels.size == 0:
        raise DomainError('empty dataset')
    recon.validate()
    n = levels.shape[1]

    def evaluate(i: int) -> _SampleTerms:
        x = recon.to_normalized(levels[i])
        lam_rng = stream(seed, i, Role.LAMBDA)
        enc_rng = stream(seed, i, Role.ENCODER)
        u = lam_rng.random(num_mc_measure)
        noise = enc_rng.standard_normal((num_mc_measure, n))
        measure = measurement_integrand(predictor, x, u, noise, proposal, encoder)
        lr = reconstruction_discretized(predictor, levels[i], recon, num_mc_recon,
                                        stream(seed, i, Role.MEASURE), proposal, encoder)
        return _SampleTerms(measure, lr)

    terms: List[_SampleTerms] = ordered_map(evaluate, range(len(levels)), threads)
    draws = np.concatenate([t.measure for t in terms])
    lm, lm_se = _mean_se(draws)
    lr = float(np.mean([t.recon for t in terms]))
    report = EvalReport(lm, lm_se, lr, to_bpd(lm, lr, n), num_mc_measure, num_mc_recon, n, len(levels))
    LOGGER.info(f'bpd {report.bpd:.4f} (lm {lm:.4f} +- {lm_se:.4f}, lr {lr:.4f} nats)')
    return report


__all__ = [
    'ReconConfig', 'EvalReport', 'ProposalKind', 'loss_mc', 'loss_terms', 'lm_infinity',
    'lm_finite_k', 'reconstruction_continuous', 'reconstruction_discretized', 'bpd',
    'expected_h_identity', 'estimate_h', 'h_ratio_range', 'identity_integrand_std',
]
