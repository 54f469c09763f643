from typing import Optional
import numpy as np
from ..errors import ContractViolation, DomainError


class AdamW:
    '''
    Adam with decoupled weight decay on one flat parameter vector
    '''

    def __init__(self, size: int, lr: float = 1e-3, weight_decay: float = 1e-2,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 decay_mask: Optional[np.ndarray] = None) -> None:
        if lr < 0:
            raise DomainError(f'negative learning rate {lr}')
        if weight_decay < 0:
            raise DomainError(f'negative weight decay {weight_decay}')
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0
        if decay_mask is None:
            decay_mask = np.ones(size)
        if decay_mask.shape != (size,):
            raise ContractViolation(f'decay mask {decay_mask.shape} != ({size},)')
        self.decay_mask = decay_mask

    def step(self, params: np.ndarray, grad: np.ndarray, lr_scale: float = 1.0) -> np.ndarray:
        if grad.shape != params.shape or params.shape != self.m.shape:
            raise ContractViolation(f'grad {grad.shape} / params {params.shape} / state {self.m.shape}')
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        lr = self.lr * lr_scale
        return params - lr * (m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * self.decay_mask * params)
