'''
Bayesian sample inference: sampling by iterated Gaussian posterior updates.
'''
from .belief import BeliefState, GaussianParams, Measurement, INFINITY
from .schedule import PrecisionSchedule, ProposalDistribution, ScheduleKind
from .encoder import EncoderConfig
from .predictor import Predictor, PredictorSpec, BackboneKind, DataPrior
from .sampler import SamplerConfig, SamplerMode, generate
from .errors import BsiException

__all__ = [
    'BeliefState', 'GaussianParams', 'Measurement', 'INFINITY',
    'PrecisionSchedule', 'ProposalDistribution', 'ScheduleKind',
    'EncoderConfig', 'Predictor', 'PredictorSpec', 'BackboneKind', 'DataPrior',
    'SamplerConfig', 'SamplerMode', 'generate', 'BsiException',
]
