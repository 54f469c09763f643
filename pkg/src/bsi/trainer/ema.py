from typing import Optional
import numpy as np
from ..errors import ContractViolation, DomainError


def ema_update(ema_params: Optional[np.ndarray], params: np.ndarray, beta: float) -> np.ndarray:
    '''
    beta * ema + (1 - beta) * params. The first update (ema_params None)
    copies params.
    '''
    if not 0.0 <= beta < 1.0:
        raise DomainError(f'ema beta outside [0, 1): {beta}')
    if ema_params is None:
        return np.array(params, dtype=np.float64)
    if ema_params.shape != params.shape:
        raise ContractViolation(f'ema {ema_params.shape} != params {params.shape}')
    return beta * ema_params + (1.0 - beta) * params
