'''
Training loop for the MLP predictor.

Every random draw of step s comes from a stream keyed by (seed, s, role), so
a run is reproducible bit for bit.
'''
from typing import Callable, List, NamedTuple, Optional, Tuple
from enum import Enum
import logging
import math
import numpy as np
from .. import config
from ..elbo import loss_terms
from ..encoder import EncoderConfig
from ..errors import ContractViolation, DomainError, TrainingAborted
from ..predictor import BackboneKind, Predictor, PredictorSpec
from ..rng import Role, stream
from ..schedule import ProposalDistribution, low_discrepancy_batch, sample_proposal
from .checkpoint import Checkpoint
from .ema import ema_update
from .optimizer import AdamW

LOGGER = logging.getLogger(__name__)


class LrDecay(Enum):
    CONSTANT = 'constant'
    # half cosine from the end of warm-up down to zero at the last step
    COSINE = 'cosine'


class TrainConfig(NamedTuple):
    batch_size: int = config.BATCH_SIZE
    steps: int = 1000
    learning_rate: float = config.LEARNING_RATE
    weight_decay: float = config.WEIGHT_DECAY
    ema_beta: float = config.EMA_BETA
    ema_start_step: int = config.EMA_START_STEP
    seed: int = 0
    # linear learning-rate warm-up, 0 is off
    warmup_steps: int = 0
    log_interval: int = 100
    lr_decay: LrDecay = LrDecay.CONSTANT
    # ramp the EMA decay up to ema_beta over the first updates
    ema_warmup: bool = True

    def validate(self) -> 'TrainConfig':
        if self.batch_size < 1:
            raise DomainError(f'batch_size must be >= 1: {self.batch_size}')
        if self.steps < 1:
            raise DomainError(f'steps must be >= 1: {self.steps}')
        if self.learning_rate < 0 or self.weight_decay < 0:
            raise DomainError('learning rate and weight decay must be nonnegative')
        if not 0.0 <= self.ema_beta < 1.0:
            raise DomainError(f'ema_beta outside [0, 1): {self.ema_beta}')
        if self.warmup_steps < 0 or self.log_interval < 1:
            raise DomainError('warmup_steps must be >= 0 and log_interval >= 1')
        return self

    def lr_scale(self, step: int) -> float:
        if step < self.warmup_steps:
            return step / self.warmup_steps
        match self.lr_decay:
            case LrDecay.CONSTANT:
                return 1.0
            case LrDecay.COSINE:
                span = self.steps - self.warmup_steps
                if span <= 0:
                    return 1.0
                progress = min(step - self.warmup_steps, span) / span
                return 0.5 * (1.0 + math.cos(math.pi * progress))
            case _:
                raise NotImplementedError()

    def ema_decay(self, step: int) -> float:
        '''
        decay of the EMA update at step, the first update (step == ema_start_step) copies
        '''
        if not self.ema_warmup:
            return self.ema_beta
        m = step - self.ema_start_step
        return min(self.ema_beta, (1.0 + m) / (10.0 + m))

    def to_json(self) -> dict:
        d = self._asdict()
        d['lr_decay'] = self.lr_decay.value
        return d


class MetricsRow(NamedTuple):
    step: int
    loss: float
    loss_se: float
    param_norm: float
    ema_dist: float

    COLUMNS = ('step', 'loss', 'loss_se', 'param_norm', 'ema_dist')

    def row(self) -> dict:
        return self._asdict()


def batch_loss_and_grad(predictor: Predictor, x: np.ndarray, lam: np.ndarray, noise: np.ndarray,
                        proposal: ProposalDistribution,
                        encoder: Optional[EncoderConfig] = None) -> Tuple[float, np.ndarray]:
    '''
    mean per-dimension loss of the batch and its parameter gradient
    '''
    b, n = x.shape
    loss, mu, x_hat = loss_terms(predictor, x, lam, noise, proposal, encoder)
    # d loss_i / d x_hat_i = -2 L lambda_i (x_i - x_hat_i)
    upstream = (-2.0 * proposal.log_range / (b * n)) * lam[:, None] * (x - x_hat)
    return float(loss.sum() / (b * n)), predictor.param_grad(mu, lam, upstream)


def batch_loss(predictor, x: np.ndarray, t: np.ndarray, noise: np.ndarray,
               proposal: ProposalDistribution, encoder: Optional[EncoderConfig] = None) -> float:
    b, n = x.shape
    loss, _, _ = loss_terms(predictor, x, sample_proposal(proposal, t), noise, proposal, encoder)
    return float(loss.sum() / (b * n))


class StepDraws(NamedTuple):
    index: np.ndarray
    t: np.ndarray
    noise: np.ndarray


def draw_step(seed: int, step: int, num_data: int, batch_size: int, dim: int) -> StepDraws:
    index = stream(seed, step, Role.BATCH).integers(0, num_data, batch_size)
    delta = stream(seed, step, Role.DELTA).random()
    noise = stream(seed, step, Role.ENCODER).standard_normal((batch_size, dim))
    return StepDraws(index, low_discrepancy_batch(batch_size, delta), noise)


def train(dataset: np.ndarray, spec: PredictorSpec, cfg: TrainConfig,
          alpha_r: float = config.ALPHA_R,
          on_metrics: Optional[Callable[[MetricsRow], None]] = None) -> Checkpoint:
    '''
    dataset: (N, n) continuous values in [-1, 1]
    '''
    cfg.validate()
    spec = spec.validate()
    if spec.backbone is not BackboneKind.MLP:
        raise ContractViolation(f'only the mlp backbone is trainable: {spec.backbone.value}')
    dataset = np.atleast_2d(np.asarray(dataset, dtype=np.float64))
    if dataset.shape[1] != spec.dim or len(dataset) == 0:
        raise ContractViolation(f'dataset {dataset.shape} for dim {spec.dim}')
    if np.any(np.abs(dataset) > 1.0):
        raise DomainError('dataset must be normalized to [-1, 1]')

    proposal = ProposalDistribution(spec.lambda0, spec.lambda_m).validate()
    layout = spec.layout()
    params = layout.init_params(stream(cfg.seed, Role.INIT))
    optimizer = AdamW(len(params), cfg.learning_rate, cfg.weight_decay, decay_mask=layout.weight_mask())
    ema: Optional[np.ndarray] = None
    window: List[float] = []
    LOGGER.info(f'train {spec.param_count} params on {len(dataset)} x {spec.dim}, {cfg.steps} steps')

    for step in range(1, cfg.steps + 1):
        draws = draw_step(cfg.seed, step, len(dataset), cfg.batch_size, spec.dim)
        lam = sample_proposal(proposal, draws.t)
        predictor = Predictor(spec, params)
        loss, grad = batch_loss_and_grad(predictor, dataset[draws.index], lam, draws.noise, proposal)
        if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
            norm = float(np.linalg.norm(params))
            LOGGER.error(f'non-finite loss {loss} at step {step}')
            raise TrainingAborted(step, loss, lam.tolist(), norm)
        LOGGER.debug(f'step {step}: loss {loss:.6g}')

        params = optimizer.step(params, grad, cfg.lr_scale(step))
        if step >= cfg.ema_start_step:
            ema = ema_update(ema, params, cfg.ema_decay(step))

        window.append(loss)
        if step % cfg.log_interval == 0 or step == cfg.steps:
            values = np.array(window)
            se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else float('nan')
            current = params if ema is None else ema
            row = MetricsRow(step, float(values.mean()), se, float(np.linalg.norm(params)),
                             float(np.linalg.norm(current - params)))
            LOGGER.info(f'step {step}: loss {row.loss:.5g} +- {se:.2g}, |params| {row.param_norm:.4g}')
            if on_metrics:
                on_metrics(row)
            window.clear()

    return Checkpoint(spec, spec.lambda0, spec.lambda_m, alpha_r, params,
                      params.copy() if ema is None else ema, cfg.steps, cfg.seed)
