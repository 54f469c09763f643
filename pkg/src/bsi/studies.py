'''
Desk-scale studies. Each returns tidy rows (list of dict) for CSV output.
'''
from typing import List, Sequence
import logging
import math
import numpy as np
from . import config
from .data import DatasetSpec, generate as generate_data
from .elbo import (PredictorFn, ProposalKind, ReconConfig, bpd, estimate_h, expected_h_identity,
                   h_ratio_range, identity_integrand_std, lm_finite_k, lm_infinity,
                   measurement_integrand)
from .encoder import EncoderConfig, encoder_coefficients
from .predictor import Predictor
from .rng import Role, stream
from .sampler import SamplerConfig, generate
from .schedule import PrecisionSchedule, ProposalDistribution, ScheduleKind, lambda_of_t

LOGGER = logging.getLogger(__name__)

Rows = List[dict]


def convergence(predictor: PredictorFn, xs: np.ndarray, ks: Sequence[int],
                proposal: ProposalDistribution, num_mc: int, num_mc_infinity: int, seed: int,
                kind: ScheduleKind = ScheduleKind.LOG) -> Rows:
    '''
    L_M^k for each k followed by L_M^inf (k = 'inf'). Rounds cycle over the
    rows of xs.
    '''
    xs = np.atleast_2d(xs)
    rows = []
    for k in ks:
        schedule = PrecisionSchedule(proposal.lambda0, proposal.lambda_m - proposal.lambda0, int(k), kind)
        # fewer rounds for long schedules, a round costs k predictions
        rounds = max(2, num_mc if k <= 1000 else num_mc // 4)
        lm, se = lm_finite_k(predictor, xs, schedule, rounds, stream(seed, int(k), Role.ENCODER))
        LOGGER.info(f'k={k}: L_M {lm:.4f} +- {se:.4f}')
        rows.append({'k': int(k), 'lm_nats': lm, 'lm_se': se, 'num_mc': rounds})

    rng = stream(seed, 0, Role.LAMBDA)
    draws = num_mc_infinity
    index = np.arange(draws) % len(xs)
    values = measurement_integrand(predictor, xs[index], rng.random(draws),
                                   rng.standard_normal((draws, xs.shape[1])), proposal)
    lm = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(draws))
    LOGGER.info(f'k=inf: L_M {lm:.4f} +- {se:.4f}')
    rows.append({'k': 'inf', 'lm_nats': lm, 'lm_se': se, 'num_mc': draws})
    return rows


def variance(proposal: ProposalDistribution, n: int, num_mc: int, seed: int, grid: int = 1000) -> Rows:
    '''
    range of h/p and the estimator spread for both proposals, identity
    predictor, fixed x = 0.5 * ones
    '''
    identity = Predictor.identity(n, proposal.lambda0, proposal.lambda_m)
    x = np.full(n, 0.5)
    rows = []
    for kind in (ProposalKind.UNIFORM, ProposalKind.LOG_UNIFORM):
        lm, se = lm_infinity(identity, x, num_mc, stream(seed, Role.LAMBDA), proposal, kind=kind)
        rows.append({
            'proposal': kind.value,
            'h_ratio_range': h_ratio_range(proposal, n, kind, grid),
            'integrand_std': identity_integrand_std(proposal, n, float(x @ x), kind),
            'lm_nats': lm,
            'lm_se': se,
            'num_mc': num_mc,
        })
    return rows


def h_curve(predictor: PredictorFn, xs: np.ndarray, proposal: ProposalDistribution,
            points: int, seed: int, identity_reference: bool = False) -> Rows:
    '''
    h(lambda) at log-spaced lambda, one encoder draw per data row
    '''
    xs = np.atleast_2d(xs)
    n = xs.shape[1]
    rows = []
    for i, lam in enumerate(lambda_of_t(np.linspace(0.0, 1.0, points), proposal.lambda0, proposal.lambda_m)):
        lam = float(lam)
        h, se = estimate_h(predictor, xs, lam, stream(seed, i, Role.ENCODER), proposal)
        rows.append({
            'lambda': lam,
            'h': h,
            'h_se': se,
            'h_identity': expected_h_identity(lam, proposal.lambda0, n) if identity_reference else float('nan'),
        })
    return rows


def mode_coverage(samples: np.ndarray, atoms: np.ndarray, levels: int) -> dict:
    '''
    nearest-atom frequencies and the fraction of atoms whose quantization bin
    received a sample
    '''
    samples = np.atleast_2d(samples)
    if len(samples) == 0:
        return {'freq_min': float('nan'), 'freq_max': float('nan'), 'atoms_hit': 0.0}
    dist = np.einsum('skn->sk', (samples[:, None, :] - atoms[None, :, :]) ** 2)
    nearest = np.argmin(dist, axis=1)
    freq = np.bincount(nearest, minlength=len(atoms)) / len(samples)
    half_bin = 1.0 / (levels - 1)
    in_bin = np.max(np.abs(samples - atoms[nearest]), axis=1) <= half_bin
    hit = np.zeros(len(atoms), dtype=bool)
    hit[nearest[in_bin]] = True
    return {'freq_min': float(freq.min()), 'freq_max': float(freq.max()), 'atoms_hit': float(hit.mean())}


def lambda0_sweep(dataset: DatasetSpec, lambda0s: Sequence[float], alpha_m: float, k: int,
                  num_samples: int, num_eval: int, recon: ReconConfig, seed: int,
                  threads: int = 1) -> Rows:
    '''
    BPD and sample mode coverage of the Bayes denoiser for each lambda0
    '''
    _, levels = generate_data(dataset, num_eval)
    prior = dataset.to_prior()
    rows = []
    for lambda0 in lambda0s:
        proposal = ProposalDistribution(lambda0, lambda0 + alpha_m).validate()
        predictor = Predictor.bayes(prior, lambda0, proposal.lambda_m)
        report = bpd(predictor, levels, proposal, recon, seed=seed, threads=threads)
        schedule = PrecisionSchedule(lambda0, alpha_m, k)
        samples = generate(predictor, SamplerConfig(schedule, seed=seed), num_samples, threads=threads)
        row = {'lambda0': lambda0, 'bpd': report.bpd, 'lm_nats': report.lm_estimate, 'lm_se': report.lm_std_error}
        row.update(mode_coverage(samples, prior.means, dataset.levels))
        LOGGER.info(f'lambda0={lambda0:g}: bpd {report.bpd:.4f}, coverage {row["atoms_hit"]:.2f}')
        rows.append(row)
    return rows


def noise_levels(ts: Sequence[float], alpha_m: float = config.ALPHA_M) -> Rows:
    '''
    encoder mean coefficient and variance along t for BSI and BFN
    '''
    bsi = EncoderConfig.bsi(config.LAMBDA0)
    bfn = EncoderConfig.bfn()
    rows = []
    for t in ts:
        row = {'t': float(t)}
        for name, enc in (('bsi', bsi), ('bfn', bfn)):
            lam = lambda_of_t(float(t), enc.lambda0, enc.lambda0 + alpha_m)
            lam = max(lam, enc.lambda0)
            coeff, var = encoder_coefficients(enc, lam)
            row[f'{name}_lambda'] = lam
            row[f'{name}_coeff'] = float(coeff)
            row[f'{name}_variance'] = float(var)
        rows.append(row)
    return rows
