'''
The x_hat = f(mu, lambda) estimator.
'''
from typing import NamedTuple, Optional
from enum import Enum
import numpy as np
from .. import config
from ..belief import Precision, parse_precision, precision_to_json
from ..encoder import EncoderConfig
from ..errors import ContractViolation, DomainError, UnsupportedOperation
from ..schedule import RANGE_SLACK, t_of_lambda
from .backbones import DataPrior, bayes_denoise, identity
from .features import FeatureConfig, fourier_features, precision_embedding
from .mlp import MlpLayout, mlp_backward, mlp_forward
from .precondition import PreconditionCoeffs, apply_preconditioning, precondition_coeffs


class BackboneKind(Enum):
    IDENTITY = 'identity'
    BAYES = 'bayes'
    MLP = 'mlp'


class PredictorSpec(NamedTuple):
    backbone: BackboneKind
    dim: int
    lambda0: float = config.LAMBDA0
    lambda_m: float = config.LAMBDA0 + config.ALPHA_M
    features: FeatureConfig = FeatureConfig()
    width: int = 0
    depth: int = 0
    # bayes backbone only
    prior: Optional[DataPrior] = None
    gamma0: Optional[Precision] = None

    def validate(self) -> 'PredictorSpec':
        if self.dim < 1:
            raise DomainError(f'dim must be >= 1: {self.dim}')
        self.features.validate()
        match self.backbone:
            case BackboneKind.MLP:
                if self.width < 1 or self.depth < 1:
                    raise DomainError(f'mlp width/depth must be >= 1: {self.width}/{self.depth}')
            case BackboneKind.BAYES:
                if self.prior is None:
                    raise ContractViolation('bayes backbone needs a data prior')
                if self.prior.dim != self.dim:
                    raise ContractViolation(f'prior dim {self.prior.dim} != {self.dim}')
        return self

    @property
    def encoder(self) -> EncoderConfig:
        return EncoderConfig(self.lambda0, self.gamma0)

    def layout(self) -> MlpLayout:
        in_dim = self.dim * self.features.expansion + self.features.embed_dim
        return MlpLayout(in_dim, self.width, self.depth, self.dim)

    @property
    def param_count(self) -> int:
        if self.backbone is BackboneKind.MLP:
            return self.layout().size
        return 0

    def to_json(self) -> dict:
        return {
            'backbone': self.backbone.value,
            'dim': self.dim,
            'lambda0': self.lambda0,
            'lambda_m': self.lambda_m,
            'features': self.features.to_json(),
            'width': self.width,
            'depth': self.depth,
            'prior': self.prior.to_json() if self.prior else None,
            'gamma0': None if self.gamma0 is None else precision_to_json(self.gamma0),
        }

    @staticmethod
    def from_json(src: dict) -> 'PredictorSpec':
        return PredictorSpec(
            BackboneKind(src['backbone']),
            int(src['dim']),
            float(src['lambda0']),
            float(src['lambda_m']),
            FeatureConfig.from_json(src['features']),
            int(src['width']),
            int(src['depth']),
            DataPrior.from_json(src['prior']) if src.get('prior') else None,
            None if src.get('gamma0') is None else parse_precision(src['gamma0']),
        ).validate()


def _batch(spec: PredictorSpec, mu, lam):
    mu = np.asarray(mu, dtype=np.float64)
    single = mu.ndim == 1
    mu2 = np.atleast_2d(mu)
    if mu2.shape[-1] != spec.dim:
        raise ContractViolation(f'mu dim {mu2.shape[-1]} != {spec.dim}')
    lam2 = np.broadcast_to(np.asarray(lam, dtype=np.float64), mu2.shape[:1])
    if np.any(lam2 < spec.lambda0 * (1 - RANGE_SLACK)) or np.any(lam2 > spec.lambda_m * (1 + RANGE_SLACK)):
        raise DomainError(f'lambda outside [{spec.lambda0:g}, {spec.lambda_m:g}]')
    lam2 = np.clip(lam2, spec.lambda0, spec.lambda_m)
    return mu2, lam2, single


def _check_params(spec: PredictorSpec, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (spec.param_count,):
        raise ContractViolation(f'parameter vector {params.shape} != ({spec.param_count},)')
    return params


def network_inputs(spec: PredictorSpec, mu2: np.ndarray, lam2: np.ndarray, coeffs: PreconditionCoeffs) -> np.ndarray:
    t = t_of_lambda(lam2, spec.lambda0, spec.lambda_m)
    return np.concatenate([
        fourier_features(np.asarray(coeffs.c_in)[:, None] * mu2, spec.features),
        precision_embedding(t, spec.features),
    ], axis=-1)


def predict(spec: PredictorSpec, params: np.ndarray, mu, lam) -> np.ndarray:
    params = _check_params(spec, params)
    mu2, lam2, single = _batch(spec, mu, lam)
    match spec.backbone:
        case BackboneKind.IDENTITY:
            out = identity(mu2)
        case BackboneKind.BAYES:
            out = bayes_denoise(spec.prior, spec.encoder, mu2, lam2)  # type: ignore
        case BackboneKind.MLP:
            coeffs = precondition_coeffs(lam2, spec.lambda0)
            raw, _ = mlp_forward(spec.layout(), params, network_inputs(spec, mu2, lam2, coeffs))
            out = apply_preconditioning(raw, mu2, coeffs)
        case _:
            raise NotImplementedError(spec.backbone)
    return out[0] if single else out


def predict_with_param_grad(spec: PredictorSpec, params: np.ndarray, mu, lam, upstream_grad) -> np.ndarray:
    '''
    d(sum(upstream_grad * predict)) / d(params)
    '''
    if spec.backbone is not BackboneKind.MLP:
        raise UnsupportedOperation(f'no parameters to differentiate for {spec.backbone.value}')
    params = _check_params(spec, params)
    mu2, lam2, _ = _batch(spec, mu, lam)
    upstream = np.atleast_2d(np.asarray(upstream_grad, dtype=np.float64))
    if upstream.shape != mu2.shape:
        raise ContractViolation(f'upstream {upstream.shape} != {mu2.shape}')
    coeffs = precondition_coeffs(lam2, spec.lambda0)
    layout = spec.layout()
    _, cache = mlp_forward(layout, params, network_inputs(spec, mu2, lam2, coeffs))
    # the skip path carries no parameters
    return mlp_backward(layout, params, cache, np.asarray(coeffs.c_out)[:, None] * upstream)


class Predictor:
    def __init__(self, spec: PredictorSpec, params: Optional[np.ndarray] = None) -> None:
        self.spec = spec.validate()
        if params is None:
            params = np.zeros(spec.param_count)
        self.params = _check_params(spec, params)

    def __str__(self) -> str:
        return f'Predictor({self.spec.backbone.value}, dim={self.dim}, {self.spec.param_count}params)'

    @property
    def dim(self) -> int:
        return self.spec.dim

    def __call__(self, mu, lam) -> np.ndarray:
        return predict(self.spec, self.params, mu, lam)

    def param_grad(self, mu, lam, upstream_grad) -> np.ndarray:
        return predict_with_param_grad(self.spec, self.params, mu, lam, upstream_grad)

    def with_params(self, params: np.ndarray) -> 'Predictor':
        return Predictor(self.spec, params)

    @staticmethod
    def identity(dim: int, lambda0: float = config.LAMBDA0,
                 lambda_m: float = config.LAMBDA0 + config.ALPHA_M) -> 'Predictor':
        return Predictor(PredictorSpec(BackboneKind.IDENTITY, dim, lambda0, lambda_m))

    @staticmethod
    def bayes(prior: DataPrior, lambda0: float = config.LAMBDA0,
              lambda_m: float = config.LAMBDA0 + config.ALPHA_M,
              gamma0: Optional[Precision] = None) -> 'Predictor':
        return Predictor(PredictorSpec(BackboneKind.BAYES, prior.dim, lambda0, lambda_m,
                                       prior=prior, gamma0=gamma0))

    @staticmethod
    def mlp(dim: int, width: int, depth: int, rng: np.random.Generator,
            lambda0: float = config.LAMBDA0,
            lambda_m: float = config.LAMBDA0 + config.ALPHA_M,
            features: FeatureConfig = FeatureConfig()) -> 'Predictor':
        spec = PredictorSpec(BackboneKind.MLP, dim, lambda0, lambda_m, features, width, depth).validate()
        return Predictor(spec, spec.layout().init_params(rng))


__all__ = [
    'BackboneKind', 'PredictorSpec', 'Predictor', 'predict', 'predict_with_param_grad',
    'DataPrior', 'FeatureConfig', 'PreconditionCoeffs', 'precondition_coeffs',
    'apply_preconditioning', 'fourier_features', 'precision_embedding',
]
